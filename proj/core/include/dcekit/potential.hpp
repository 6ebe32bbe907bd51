#pragma once

#include <map>
#include <string>
#include <vector>

#include "dcekit/data.hpp"
#include "dcekit/mnl.hpp"
#include "dcekit/model_spec.hpp"

namespace dce {

/// Mean travel time and mean covariates of one outlet, keyed by
/// coefficient name ("bio", "range:wide", ...).
struct OutletMeans {
  double travel_time = 0.0;
  std::map<std::string, double> covariates;
};

using AttributeMeans = std::map<Outlet, OutletMeans>;

/// Means of the covariate rows of every presented alternative of each outlet.
AttributeMeans attribute_means(const PanelDataset& dataset, const CompiledSpec& spec);

enum class Side { Consumer, Farmer };
std::string_view to_string(Side side) noexcept;

/// Money-metric value of an outlet as an affine function of travel time,
///   value(T) = intercept + slope * T,
/// with intercept = -(asc + sum_k b_k * mean_k) / b_price and
/// slope = -b_tt / b_price. The consumer line is what a buyer would pay;
/// the farmer line is what a seller requires.
struct PotentialLine {
  Outlet outlet = Outlet::Ferme;
  Side side = Side::Consumer;
  double intercept = 0.0;
  double slope = 0.0;
  double mean_travel_time = 0.0;
  std::string intercept_formula;
  std::string slope_formula;

  double at(double travel_time) const noexcept { return intercept + slope * travel_time; }
  double at_mean() const noexcept { return at(mean_travel_time); }
};

/// Generalized willingness-to-pay line of a consumer fit. Throws
/// MissingMeans, UnknownCoefficient, PriceCoefficientNearZero.
PotentialLine capg_line(const FitResult& consumer_fit, Outlet outlet, const AttributeMeans& means);
/// Generalized willingness-to-accept line of a farmer fit.
PotentialLine cavg_line(const FitResult& farmer_fit, Outlet outlet, const AttributeMeans& means);

/// CAPG(T) - CAVG(T). Throws OutletMismatch.
double delta_capg(const PotentialLine& consumer, const PotentialLine& farmer, double travel_time);

inline constexpr double kDefaultMaxTravelTime = 60.0;

enum class BreakEvenStatus { Crossing, NoCrossing, Parallel, Degenerate };
std::string_view to_string(BreakEvenStatus status) noexcept;

struct BreakEven {
  BreakEvenStatus status = BreakEvenStatus::NoCrossing;
  /// Crossing time for Crossing, 0 for Degenerate.
  double time = 0.0;
  /// CAPG at the crossing.
  double price = 0.0;
  /// Gap still positive at T_max (window extends past the range).
  bool window_beyond_range = false;
};

/// Closed-form root of the gap on [0, T_max], given a positive gap at 0.
BreakEven break_even_time(const PotentialLine& consumer, const PotentialLine& farmer,
                          double t_max = kDefaultMaxTravelTime);

struct CurveRow {
  double travel_time = 0.0;
  double capg = 0.0;
  double cavg = 0.0;
  double delta = 0.0;
};

/// Rows at 0, step, 2*step, ... and T_max itself. Throws InvalidConfig for
/// a non-positive step.
std::vector<CurveRow> curve_samples(const PotentialLine& consumer, const PotentialLine& farmer,
                                    double t_max, double step);

}  // namespace dce

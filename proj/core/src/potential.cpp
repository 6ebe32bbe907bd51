#include "dcekit/potential.hpp"

#include <cmath>
#include <limits>

#include "dcekit/error.hpp"
#include "dcekit/serialize.hpp"
#include "dcekit/welfare.hpp"

namespace dce {

std::string_view to_string(Side side) noexcept { return side == Side::Consumer ? "consumer" : "farmer"; }

std::string_view to_string(BreakEvenStatus status) noexcept {
  switch (status) {
    case BreakEvenStatus::Crossing: return "crossing";
    case BreakEvenStatus::NoCrossing: return "no_crossing";
    case BreakEvenStatus::Parallel: return "parallel";
    case BreakEvenStatus::Degenerate: return "degenerate";
  }
  return "no_crossing";
}

AttributeMeans attribute_means(const PanelDataset& dataset, const CompiledSpec& spec) {
  if (dataset.schema() != spec.schema())
    throw Error(ErrorCode::InvalidConfig, "dataset schema differs from the model schema");
  const auto tt = spec.spec().travel_time_attr.empty()
                      ? std::nullopt
                      : find_attribute(spec.schema(), spec.spec().travel_time_attr);
  struct Acc {
    std::size_t n = 0;
    double tt = 0.0;
    Eigen::VectorXd x;
  };
  std::map<Outlet, Acc> acc;
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(spec.size()));
  for (const auto& r : dataset.respondents())
    for (const auto& t : r.tasks)
      for (const auto& alt : t.alternatives) {
        if (alt.is_opt_out()) continue;
        Acc& a = acc[alt.outlet];
        if (a.x.size() == 0) a.x = Eigen::VectorXd::Zero(row.size());
        spec.fill_row(alt, row);
        a.x += row.transpose();
        if (tt) a.tt += alt.values[*tt];
        ++a.n;
      }
  AttributeMeans out;
  for (const auto& [outlet, a] : acc) {
    OutletMeans m;
    const double n = static_cast<double>(a.n);
    m.travel_time = a.tt / n;
    for (std::size_t i = 0; i < spec.size(); ++i)
      if (spec.coefficients()[i].role == CoefficientRole::Attribute)
        m.covariates[spec.coefficients()[i].name] = a.x[static_cast<Eigen::Index>(i)] / n;
    out[outlet] = std::move(m);
  }
  return out;
}

namespace {

bool is_covariate(const FitResult& fit, const std::string& name) {
  const std::string& tt = fit.spec.travel_time_attr;
  if (name.rfind("asc:", 0) == 0 || name.rfind("sd:", 0) == 0) return false;
  if (name == fit.spec.price_attr) return false;
  if (!tt.empty() && (name == tt || name.rfind(tt + ":", 0) == 0)) return false;
  return true;
}

PotentialLine make_line(const FitResult& fit, Outlet outlet, const AttributeMeans& means, Side side) {
  const Population expected = side == Side::Consumer ? Population::Consumer : Population::Farmer;
  if (fit.spec.population != expected)
    throw Error(ErrorCode::InvalidConfig, std::string(to_string(side)) + " line needs a " +
                                              std::string(to_string(side)) + " fit");
  if (outlet == Outlet::OptOut) throw Error(ErrorCode::InvalidConfig, "the opt-out has no potential line");
  auto m = means.find(outlet);
  if (m == means.end())
    throw Error(ErrorCode::MissingMeans, "no attribute means for outlet '" + std::string(to_string(outlet)) + "'");

  const std::string& price = fit.spec.price_attr;
  const double bp = fit.estimate(price);
  if (bp == 0.0) throw Error(ErrorCode::PriceCoefficientNearZero, "price coefficient is exactly zero");
  const auto p = static_cast<Eigen::Index>(fit.index_of(price));
  if (fit.covariance.rows() == fit.estimates.size()) {
    const double se = std::sqrt(fit.covariance(p, p));
    if (!(se == 0.0 || std::fabs(bp) / se >= kPriceSignificanceThreshold))
      throw Error(ErrorCode::PriceCoefficientNearZero,
                  "price coefficient is not significant (|z| < 2); the line is unreliable");
  }

  PotentialLine line;
  line.outlet = outlet;
  line.side = side;
  line.mean_travel_time = m->second.travel_time;

  const std::string asc = intercept_name(outlet);
  double level = fit.estimate(asc);
  std::string formula = "-(b[" + asc + "]";
  for (const auto& name : fit.names) {
    if (!is_covariate(fit, name)) continue;
    auto x = m->second.covariates.find(name);
    if (x == m->second.covariates.end())
      throw Error(ErrorCode::MissingMeans, "no mean of '" + name + "' for outlet '" +
                                               std::string(to_string(outlet)) + "'");
    level += fit.estimate(name) * x->second;
    formula += " + b[" + name + "]*" + format_double(x->second);
  }
  line.intercept = -level / bp;
  line.intercept_formula = formula + ") / b[" + price + "]";

  const std::string& tt = fit.spec.travel_time_attr;
  std::optional<std::string> slope_name;
  if (!tt.empty()) {
    if (fit.spec.travel_time_mode == TravelTimeMode::Pooled) {
      if (fit.find(tt)) slope_name = tt;
    } else {
      const std::string per = tt + ":" + std::string(to_string(outlet));
      if (fit.find(per)) slope_name = per;
    }
  }
  if (slope_name) {
    line.slope = -fit.estimate(*slope_name) / bp;
    line.slope_formula = "-b[" + *slope_name + "] / b[" + price + "]";
  } else {
    line.slope = 0.0;
    line.slope_formula = "0 (structural zero travel time)";
  }
  return line;
}

/// Error-free sum: a + b == s + e exactly.
void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}

}  // namespace

PotentialLine capg_line(const FitResult& consumer_fit, Outlet outlet, const AttributeMeans& means) {
  return make_line(consumer_fit, outlet, means, Side::Consumer);
}

PotentialLine cavg_line(const FitResult& farmer_fit, Outlet outlet, const AttributeMeans& means) {
  return make_line(farmer_fit, outlet, means, Side::Farmer);
}

double delta_capg(const PotentialLine& consumer, const PotentialLine& farmer, double travel_time) {
  if (consumer.outlet != farmer.outlet)
    throw Error(ErrorCode::OutletMismatch, "lines belong to '" + std::string(to_string(consumer.outlet)) +
                                               "' and '" + std::string(to_string(farmer.outlet)) + "'");
  return consumer.at(travel_time) - farmer.at(travel_time);
}

BreakEven break_even_time(const PotentialLine& consumer, const PotentialLine& farmer, double t_max) {
  if (consumer.outlet != farmer.outlet)
    throw Error(ErrorCode::OutletMismatch, "lines belong to different outlets");
  if (!(t_max >= 0.0)) throw Error(ErrorCode::InvalidConfig, "T_max must be non-negative");
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  // gap(T) = (nh + nl) - (dh + dl) * T, each pair an exact double-double.
  double nh, nl, dh, dl;
  two_sum(consumer.intercept, -farmer.intercept, nh, nl);
  two_sum(farmer.slope, -consumer.slope, dh, dl);

  BreakEven out;
  if (nh == 0.0 && dh == 0.0) {
    out.status = BreakEvenStatus::Degenerate;
    out.time = 0.0;
    out.price = consumer.at(0.0);
    return out;
  }
  if (dh == 0.0) {
    out.status = BreakEvenStatus::Parallel;
    out.time = std::numeric_limits<double>::infinity();
    out.price = nan;
    out.window_beyond_range = nh > 0.0;
    return out;
  }
  out.time = nan;
  out.price = nan;
  if (!(nh > 0.0)) {
    out.status = BreakEvenStatus::NoCrossing;
    return out;
  }
  if (dh < 0.0) {
    out.status = BreakEvenStatus::NoCrossing;
    out.window_beyond_range = true;
    return out;
  }
  const double t0 = nh / dh;
  const double residual = std::fma(-t0, dh, nh) + nl - t0 * dl;
  const double t = t0 + residual / dh;
  if (t > t_max) {
    out.status = BreakEvenStatus::NoCrossing;
    out.window_beyond_range = true;
    return out;
  }
  out.status = BreakEvenStatus::Crossing;
  out.time = t;
  out.price = consumer.at(t);
  return out;
}

std::vector<CurveRow> curve_samples(const PotentialLine& consumer, const PotentialLine& farmer, double t_max,
                                    double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorCode::InvalidConfig, "step must be positive");
  if (!(t_max >= 0.0) || !std::isfinite(t_max))
    throw Error(ErrorCode::InvalidConfig, "T_max must be non-negative");
  auto row = [&](double t) { return CurveRow{t, consumer.at(t), farmer.at(t), delta_capg(consumer, farmer, t)}; };
  std::vector<CurveRow> rows;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * step;
    if (t >= t_max - 1e-9 * step) break;
    rows.push_back(row(t));
  }
  rows.push_back(row(t_max));
  return rows;
}

}  // namespace dce

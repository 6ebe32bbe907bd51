#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dcekit/data.hpp"
#include "dcekit/design.hpp"
#include "dcekit/mixl.hpp"
#include "dcekit/mnl.hpp"
#include "dcekit/model_spec.hpp"
#include "dcekit/potential.hpp"
#include "dcekit/simulate.hpp"
#include "dcekit/welfare.hpp"

// JSON/CSV exchange formats. JSON handling stays inside the library; the
// public surface is text in, text out.

namespace dce {

Schema schema_from_json(std::string_view json);
std::string schema_to_json(const Schema& schema);

ModelSpec model_spec_from_json(std::string_view json);
std::string model_spec_to_json(const ModelSpec& spec);

/// Applies the keys of a design section on top of `base` (which supplies
/// the schema and population). Grids and fixed values merge per attribute.
DesignConfig design_config_from_json(std::string_view json, DesignConfig base);

/// {"fixed": {name: value}, "random": {name: {"mean": m, "sd": s}}}
TrueParams true_params_from_json(std::string_view json);
std::string true_params_to_json(const TrueParams& truth);

/// {outlet: {"travel_time": t, "covariates": {name: value}}}
AttributeMeans attribute_means_from_json(std::string_view json);
std::string attribute_means_to_json(const AttributeMeans& means);

/// Coefficient table (name, estimate, se, z, p), fit statistics,
/// convergence metadata, covariance and the model spec. Mixed-logit fits
/// add an "sd" table and "draws" metadata. `manifest_json`, when given,
/// is embedded verbatim under "manifest".
std::string fit_to_json(const FitResult& fit, std::string_view manifest_json = {});
FitResult fit_from_json(std::string_view json);

std::string welfare_to_json(const WelfareTable& table, std::string_view manifest_json = {});
std::string welfare_to_csv(const WelfareTable& table);

std::string curve_to_csv(const std::vector<CurveRow>& rows);

struct PotentialReport {
  PotentialLine consumer;
  PotentialLine farmer;
  BreakEven break_even;
  std::vector<CurveRow> rows;
  std::string subgroup;
  std::string consumer_model;
  std::string farmer_model;
};

std::string potential_to_json(const std::vector<PotentialReport>& reports,
                              std::string_view manifest_json = {});

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Writes through a temporary file in the same directory and renames it
/// into place. Throws Io.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace dce

#include "dcekit/welfare.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "dcekit/error.hpp"
#include "dcekit/rng.hpp"

namespace dce {

std::string_view to_string(WelfareDirection direction) noexcept {
  return direction == WelfareDirection::CAP ? "cap" : "cav";
}

WelfareDirection parse_welfare_direction(std::string_view text) {
  if (text == "cap" || text == "CAP") return WelfareDirection::CAP;
  if (text == "cav" || text == "CAV") return WelfareDirection::CAV;
  throw Error(ErrorCode::InvalidConfig, "unknown welfare direction '" + std::string(text) + "'");
}

namespace {

struct Pair {
  double beta_k = 0.0;
  double beta_p = 0.0;
  double var_k = 0.0;
  double var_p = 0.0;
  double cov = 0.0;
};

Pair extract(const FitResult& fit, std::string_view coefficient) {
  const std::string& price = fit.spec.price_attr;
  const auto k = static_cast<Eigen::Index>(fit.index_of(coefficient));
  const auto p = static_cast<Eigen::Index>(fit.index_of(price));
  if (k == p) throw Error(ErrorCode::InvalidConfig, "the price coefficient has no welfare ratio");
  Pair out;
  out.beta_k = fit.estimates[k];
  out.beta_p = fit.estimates[p];
  if (fit.covariance.rows() == fit.estimates.size() && fit.covariance.cols() == fit.estimates.size()) {
    out.var_k = fit.covariance(k, k);
    out.var_p = fit.covariance(p, p);
    out.cov = fit.covariance(k, p);
  }
  if (out.beta_p == 0.0)
    throw Error(ErrorCode::PriceCoefficientNearZero, "price coefficient is exactly zero");
  if (!(out.var_p >= 0.0))
    throw Error(ErrorCode::PriceCoefficientNearZero, "price coefficient variance is unavailable");
  const double se_p = std::sqrt(out.var_p);
  if (se_p > 0.0 && std::fabs(out.beta_p) / se_p < kPriceSignificanceThreshold)
    throw Error(ErrorCode::PriceCoefficientNearZero,
                "price coefficient is not significant (|z| < 2); ratios are unreliable");
  return out;
}

std::string reading(WelfareDirection direction, double value) {
  if (value == 0.0) return "no effect";
  if (direction == WelfareDirection::CAP)
    return value > 0 ? "buyers pay more for this attribute" : "buyers need a discount to accept this attribute";
  return value > 0 ? "sellers need a higher price to accept this attribute; higher CAV means less appreciated"
                   : "sellers accept a lower price for this attribute; lower CAV means more appreciated";
}

}  // namespace

RatioEstimate wtp_ratio(const FitResult& fit, std::string_view coefficient) {
  const Pair q = extract(fit, coefficient);
  const double bp = q.beta_p;
  RatioEstimate out;
  out.estimate = -q.beta_k / bp;
  const double var = q.var_k / (bp * bp) + q.beta_k * q.beta_k * q.var_p / (bp * bp * bp * bp) -
                     2.0 * q.beta_k * q.cov / (bp * bp * bp);
  out.se = std::sqrt(std::max(0.0, var));
  return out;
}

BootstrapResult wtp_bootstrap_se(const FitResult& fit, std::string_view coefficient, std::size_t n_rep,
                                 std::uint64_t seed) {
  if (n_rep < 2) throw Error(ErrorCode::InvalidConfig, "bootstrap needs at least 2 replicates");
  const Pair q = extract(fit, coefficient);
  BootstrapResult out;
  out.n_rep = n_rep;
  const double se_p = std::sqrt(q.var_p);
  out.heavy_tailed = se_p > 0.0 && std::fabs(q.beta_p) / se_p <= 5.0;

  Eigen::Matrix2d sigma;
  sigma << q.var_k, q.cov, q.cov, q.var_p;
  if (sigma.isZero(0.0)) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sigma);
  const Eigen::Matrix2d root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  Rng rng(substream_seed(seed, stream::bootstrap, 0));
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t r = 0; r < n_rep; ++r) {
    const Eigen::Vector2d z(rng.normal(), rng.normal());
    const Eigen::Vector2d b = Eigen::Vector2d(q.beta_k, q.beta_p) + root * z;
    const double ratio = -b[0] / b[1];
    const double delta = ratio - mean;
    mean += delta / static_cast<double>(r + 1);
    m2 += delta * (ratio - mean);
  }
  out.se = std::sqrt(m2 / static_cast<double>(n_rep - 1));
  return out;
}

const WelfareEntry& WelfareTable::entry(std::string_view coefficient) const {
  for (const auto& e : entries)
    if (e.coefficient == coefficient) return e;
  throw Error(ErrorCode::UnknownCoefficient, "welfare table has no entry '" + std::string(coefficient) + "'");
}

WelfareTable welfare_table(const FitResult& fit, WelfareDirection direction,
                           const BootstrapOptions& bootstrap) {
  WelfareTable table;
  table.population = fit.spec.population;
  table.direction = direction;
  table.model = fit.model;
  table.price_coefficient = fit.spec.price_attr;
  table.price_coefficient_used = fit.estimate(fit.spec.price_attr);
  const std::string symbol = direction == WelfareDirection::CAP ? "CAP" : "CAV";
  for (const auto& name : fit.names) {
    if (name == fit.spec.price_attr || name.rfind("sd:", 0) == 0) continue;
    const RatioEstimate r = wtp_ratio(fit, name);
    WelfareEntry e;
    e.coefficient = name;
    e.estimate = r.estimate;
    e.se = r.se;
    if (bootstrap.n_rep > 0) {
      e.se = wtp_bootstrap_se(fit, name, bootstrap.n_rep, bootstrap.seed).se;
      e.method = "bootstrap";
    }
    e.formula = symbol + " = -b[" + name + "] / b[" + fit.spec.price_attr + "]";
    e.reading = reading(direction, r.estimate);
    table.entries.push_back(std::move(e));
  }
  return table;
}

std::vector<std::string> rank_by_ratio(const WelfareTable& table, const std::vector<std::string>& coefficients) {
  std::vector<std::pair<double, std::string>> keyed;
  for (const auto& c : coefficients) keyed.emplace_back(table.entry(c).estimate, c);
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::string> out;
  for (auto& [_, c] : keyed) out.push_back(std::move(c));
  return out;
}

}  // namespace dce

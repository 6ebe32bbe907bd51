#include <cmath>

#include "doctest.h"
#include "dcekit/dcekit.hpp"
#include "support/fixtures.hpp"

using namespace dce;

namespace {

FitResult consumer_fit(double se = 0.01) {
  return test::synthetic_fit(consumer_model_preset(), consumer_design_preset(0).schema,
                             test::consumer_truth().fixed, se);
}

// Farmer per-outlet model with reference "all farmers" coefficients.
FitResult farmer_per_outlet_fit() {
  return test::synthetic_fit(farmer_model_preset(), farmer_design_preset(0).schema,
                             {{"asc:ferme", 0.404},
                              {"asc:marché", -0.402},
                              {"asc:supermarché", -0.413},
                              {"asc:drive", -0.722},
                              {"asc:association", 0.073},
                              {"price", 0.189},
                              {"tt:marché", -0.012},
                              {"tt:supermarché", -0.006},
                              {"tt:drive", -0.003},
                              {"tt:association", -0.015},
                              {"events", -0.087},
                              {"mutual_aid", 0.203}},
                             0.01);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_SUITE("welfare") {
  TEST_CASE("bio CAP from the reference consumer coefficients") {
    const RatioEstimate r = wtp_ratio(consumer_fit(), "bio");
    CHECK(std::fabs(r.estimate - 0.421 / 0.175) <= 1e-12);
    CHECK(std::round(r.estimate * 1000) / 1000 == 2.406);
  }

  TEST_CASE("zero coefficient gives a zero ratio") {
    FitResult f = consumer_fit();
    f.estimates[f.index_of("bio")] = 0.0;
    CHECK(wtp_ratio(f, "bio").estimate == 0.0);
  }

  TEST_CASE("farmer ratios follow -b/b_price literally") {
    const FitResult f = farmer_per_outlet_fit();
    const WelfareTable t = welfare_table(f, WelfareDirection::CAV);
    CHECK(t.entries.size() == 11);
    CHECK(t.entry("asc:drive").estimate == doctest::Approx(3.82).epsilon(0.005));
    CHECK(t.entry("mutual_aid").estimate == doctest::Approx(-1.07).epsilon(0.005));
    CHECK(t.entry("asc:ferme").estimate == doctest::Approx(-2.13).epsilon(0.005));
    CHECK(t.entry("asc:marché").estimate == doctest::Approx(2.12).epsilon(0.005));
    CHECK(t.entry("tt:marché").estimate == doctest::Approx(0.063).epsilon(0.01));
    // Drive is the largest outlet CAV: least appreciated.
    const auto order = rank_by_ratio(t, {"asc:ferme", "asc:marché", "asc:supermarché", "asc:drive", "asc:association"});
    CHECK(order.front() == "asc:drive");
    CHECK(t.entry("asc:drive").reading.find("less appreciated") != std::string::npos);
    CHECK(t.entry("mutual_aid").formula == "CAV = -b[mutual_aid] / b[price]");
  }

  TEST_CASE("pooled farmer mutual aid with a negative sign gives +0.95") {
    FitResult f = test::synthetic_fit(farmer_model_preset(TravelTimeMode::Pooled), farmer_design_preset(0).schema,
                                      {{"price", 0.20}, {"mutual_aid", -0.19}}, 0.01);
    CHECK(wtp_ratio(f, "mutual_aid").estimate == doctest::Approx(0.95).epsilon(1e-12));
  }

  TEST_CASE("welfare table has K - 1 rows and the reference outlet ordering") {
    const WelfareTable t = welfare_table(consumer_fit(), WelfareDirection::CAP);
    CHECK(t.entries.size() == 13);
    CHECK(t.price_coefficient_used == -0.175);
    for (const auto& e : t.entries) CHECK(e.method == "delta");
  }

  TEST_CASE("intercept-only fit with zero slopes gives zero ratios") {
    CoefficientMap m = {{"price", -0.2}, {"asc:ferme", 0.0}};
    const FitResult f = test::synthetic_fit(consumer_model_preset(), consumer_design_preset(0).schema, m);
    for (const auto& e : welfare_table(f, WelfareDirection::CAP).entries) CHECK(e.estimate == 0.0);
  }

  TEST_CASE("delta method matches the closed form with covariance") {
    FitResult f = consumer_fit(0.0);
    const auto k = f.index_of("bio"), p = f.index_of("price");
    f.covariance(k, k) = 0.034 * 0.034;
    f.covariance(p, p) = 0.007 * 0.007;
    f.covariance(k, p) = f.covariance(p, k) = 0.3 * 0.034 * 0.007;
    const double bk = 0.421, bp = -0.175;
    const double var = f.covariance(k, k) / (bp * bp) + bk * bk * f.covariance(p, p) / std::pow(bp, 4) -
                       2 * bk * f.covariance(k, p) / std::pow(bp, 3);
    CHECK(wtp_ratio(f, "bio").se == doctest::Approx(std::sqrt(var)).epsilon(1e-14));
  }

  TEST_CASE("antisymmetry and scale invariance") {
    FitResult f = consumer_fit();
    const double r = wtp_ratio(f, "events").estimate;
    f.estimates[f.index_of("events")] *= -1.0;
    CHECK(wtp_ratio(f, "events").estimate == -r);
    FitResult g = consumer_fit();
    g.estimates *= 7.5;
    g.covariance *= 7.5 * 7.5;
    const WelfareTable a = welfare_table(consumer_fit(), WelfareDirection::CAP);
    const WelfareTable b = welfare_table(g, WelfareDirection::CAP);
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      CHECK(b.entries[i].estimate == doctest::Approx(a.entries[i].estimate).epsilon(1e-14));
      CHECK(b.entries[i].se == doctest::Approx(a.entries[i].se).epsilon(1e-12));
    }
  }

  TEST_CASE("insignificant price is refused") {
    FitResult f = consumer_fit(0.1);
    CHECK(code_of([&] { wtp_ratio(f, "bio"); }) == ErrorCode::PriceCoefficientNearZero);
    f = consumer_fit();
    f.estimates[f.index_of("price")] = 0.0;
    CHECK(code_of([&] { wtp_ratio(f, "bio"); }) == ErrorCode::PriceCoefficientNearZero);
    CHECK(code_of([&] { wtp_ratio(consumer_fit(), "nope"); }) == ErrorCode::UnknownCoefficient);
  }

  TEST_CASE("bootstrap: zero covariance, agreement, heavy tails, determinism") {
    CHECK(wtp_bootstrap_se(consumer_fit(0.0), "bio", 100, 1).se == 0.0);

    FitResult f = consumer_fit(0.0);
    const auto k = f.index_of("bio"), p = f.index_of("price");
    f.covariance(k, k) = 0.05 * 0.05;
    f.covariance(p, p) = 0.02 * 0.02;
    f.covariance(k, p) = f.covariance(p, k) = -0.2 * 0.05 * 0.02;
    const BootstrapResult b = wtp_bootstrap_se(f, "bio", 100000, 11);
    CHECK_FALSE(b.heavy_tailed);
    CHECK(std::fabs(b.se / wtp_ratio(f, "bio").se - 1.0) <= 0.15);
    CHECK(wtp_bootstrap_se(f, "bio", 1000, 11).se == wtp_bootstrap_se(f, "bio", 1000, 11).se);

    f.covariance(p, p) = 0.06 * 0.06;
    f.covariance(k, p) = f.covariance(p, k) = 0.0;
    CHECK(wtp_bootstrap_se(f, "bio", 1000, 2).heavy_tailed);
  }

  TEST_CASE("bootstrap table entries are tagged") {
    BootstrapOptions o;
    o.n_rep = 500;
    o.seed = 3;
    const WelfareTable t = welfare_table(consumer_fit(), WelfareDirection::CAP, o);
    for (const auto& e : t.entries) CHECK(e.method == "bootstrap");
  }

  TEST_CASE("mixed-logit sd parameters are skipped") {
    const PanelDataset d = test::simulate_consumers(200, 3);
    MixlSpec ms;
    ms.base = consumer_model_preset();
    ms.random_set = {"bio"};
    ms.n_draws = 20;
    const MixlFit m = fit_mixl(d, ms);
    const WelfareTable t = welfare_table(m.fit, WelfareDirection::CAP);
    CHECK(t.entries.size() == 13);
    CHECK(t.model == "mixl");
  }
}

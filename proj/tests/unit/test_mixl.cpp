#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "dcekit/dcekit.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace dce;

namespace {

Eigen::VectorXd truth_vector(const CompiledSpec& spec, const TrueParams& t) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(spec.size()));
  for (std::size_t k = 0; k < spec.size(); ++k) v[static_cast<Eigen::Index>(k)] = t.fixed.at(spec.names()[k]);
  return v;
}

MixlSpec consumer_mixl(std::vector<std::string> random, std::size_t draws, std::uint64_t seed = 1) {
  MixlSpec m;
  m.base = consumer_model_preset();
  m.random_set = std::move(random);
  m.n_draws = draws;
  m.seed = seed;
  return m;
}

}  // namespace

TEST_SUITE("estimation-mixl") {
  TEST_CASE("default random set is everything but price") {
    const auto r = default_random_set(test::consumer_spec());
    CHECK(r.size() == 13);
    CHECK(std::find(r.begin(), r.end(), "price") == r.end());
  }

  TEST_CASE("price cannot be random, names must exist") {
    const PanelDataset d = test::simulate_consumers(5, 1);
    CHECK_THROWS_AS(MixlProblem(d, consumer_mixl({"price"}, 10)), Error);
    CHECK_THROWS_AS(MixlProblem(d, consumer_mixl({"nope"}, 10)), Error);
    CHECK_THROWS_AS(MixlProblem(d, consumer_mixl({"bio", "bio"}, 10)), Error);
    CHECK_THROWS_AS(MixlProblem(d, consumer_mixl({"bio"}, 0)), Error);
    const MixlProblem p(d, consumer_mixl({"bio"}, 10));
    CHECK(p.n_params() == 15);
    CHECK(p.param_names().back() == "sd:bio");
    CHECK_THROWS_AS(p.loglik(Eigen::VectorXd::Zero(14)), Error);
  }

  TEST_CASE("zero sds reproduce the MNL loglik") {
    const PanelDataset d = test::simulate_consumers(200, 2);
    const CompiledSpec spec = test::consumer_spec();
    const Eigen::VectorXd beta = truth_vector(spec, test::consumer_truth());
    const MixlProblem p(d, consumer_mixl(default_random_set(spec), 50));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.n_params()));
    x.head(14) = beta;
    const double mnl = mnl_loglik(beta, d, spec);
    CHECK(std::fabs(p.loglik(x) - mnl) <= 1e-10 * std::fabs(mnl));
  }

  TEST_CASE("gradient matches finite differences at random points") {
    const PanelDataset d = test::simulate_consumers(60, 3);
    const CompiledSpec spec = test::consumer_spec();
    const MixlProblem p(d, consumer_mixl({"asc:ferme", "tt:drive", "bio", "range"}, 40));
    const Eigen::VectorXd beta = truth_vector(spec, test::consumer_truth());
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.05, 0.6);
    auto f = [&](const Eigen::VectorXd& x) { return p.loglik(x); };
    for (int rep = 0; rep < 5; ++rep) {
      Eigen::VectorXd x(static_cast<Eigen::Index>(p.n_params()));
      x.head(14) = beta * (0.7 + u(gen));
      for (Eigen::Index k = 14; k < x.size(); ++k) x[k] = (rep % 2 ? -1.0 : 1.0) * u(gen) * (k == 15 ? 0.1 : 1.0);
      Eigen::VectorXd g;
      p.loglik(x, &g);
      CHECK(test::relative_error(g, test::numeric_gradient(f, x)) <= 1e-5);
    }
  }

  TEST_CASE("respondent scores sum to the gradient") {
    const PanelDataset d = test::simulate_consumers(30, 4);
    const MixlProblem p(d, consumer_mixl({"bio", "tt:ferme"}, 20));
    Eigen::VectorXd x = Eigen::VectorXd::Constant(16, 0.1);
    Eigen::VectorXd g;
    Eigen::MatrixXd s;
    p.loglik(x, &g, &s);
    CHECK(s.rows() == 30);
    CHECK(test::relative_error(s.colwise().sum().transpose(), g) <= 1e-12);
  }

  TEST_CASE("sign of an sd does not matter") {
    const PanelDataset d = test::simulate_consumers(40, 5);
    const MixlProblem p(d, consumer_mixl({"bio", "tt:ferme"}, 30));
    Eigen::VectorXd x = Eigen::VectorXd::Constant(16, 0.05);
    x[14] = 0.3;
    x[15] = 0.02;
    const double a = p.loglik(x);
    x[14] = -0.3;
    CHECK(p.loglik(x) == a);
  }

  TEST_CASE("single random coefficient agrees with 64-node Gauss-Hermite") {
    ModelSpec pooled = consumer_model_preset();
    pooled.travel_time_mode = TravelTimeMode::Pooled;
    TrueParams truth = test::consumer_truth();
    for (auto n : {"tt:ferme", "tt:marché", "tt:supermarché", "tt:drive", "tt:association"}) truth.fixed.erase(n);
    truth.random["tt"] = {-0.08, 0.04};
    const PanelDataset d = test::simulate_consumers(20, 6, truth, pooled);
    MixlSpec ms;
    ms.base = pooled;
    ms.random_set = {"tt"};
    ms.n_draws = 500;
    const MixlProblem p(d, ms);
    const CompiledSpec spec(pooled, d.schema());
    Eigen::VectorXd x(11);
    for (std::size_t k = 0; k < 10; ++k)
      x[static_cast<Eigen::Index>(k)] = k == 6 ? -0.08 : truth.fixed.at(spec.names()[k]);
    x[10] = 0.04;

    const test::Quadrature q = test::gauss_hermite_normal(64);
    double expected = 0.0;
    for (const auto& r : d.respondents()) {
      double prob = 0.0;
      for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        Eigen::VectorXd beta = x.head(10);
        beta[6] += 0.04 * q.nodes[i];
        double seq = 1.0;
        for (const auto& t : r.tasks) seq *= logit_probs(spec.task_matrix(t) * beta)[static_cast<Eigen::Index>(*t.chosen)];
        prob += q.weights[i] * seq;
      }
      expected += std::log(prob);
    }
    CHECK(std::fabs(p.loglik(x) - expected) <= 2e-3 * std::fabs(expected));
  }

  TEST_CASE("more draws converge") {
    // Cauchy check against the finest rule. A single randomized rule does
    // not refine monotonically, so compare RMS gaps over scramble seeds.
    const PanelDataset d = test::simulate_consumers(100, 7);
    Eigen::VectorXd x(17);
    x.head(14) = truth_vector(test::consumer_spec(), test::consumer_truth());
    x.tail(3) << 0.8, 0.05, 0.5;
    const std::vector<std::size_t> rules{125, 250, 500, 1000};
    std::vector<double> gap(rules.size(), 0.0);
    for (std::uint64_t seed = 1; seed <= 16; ++seed) {
      auto ll = [&](std::size_t r) {
        return MixlProblem(d, consumer_mixl({"bio", "tt:drive", "range"}, r, seed)).loglik(x);
      };
      const double finest = ll(2000);
      for (std::size_t i = 0; i < rules.size(); ++i) gap[i] += std::pow(ll(rules[i]) - finest, 2) / 16.0;
    }
    for (std::size_t i = 1; i < rules.size(); ++i) CHECK(gap[i] < gap[i - 1]);
  }

  TEST_CASE("panel contract: task order is irrelevant, draw assignment is not") {
    const PanelDataset d = test::simulate_consumers(50, 8);
    const MixlSpec ms = consumer_mixl({"bio", "asc:drive"}, 64);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(16, 0.1);
    x[14] = 0.7;
    x[15] = 1.1;
    const double base = MixlProblem(d, ms).loglik(x);

    std::vector<Respondent> rs = d.respondents();
    for (auto& r : rs) std::reverse(r.tasks.begin(), r.tasks.end());
    CHECK(MixlProblem(PanelDataset(d.schema(), rs, {}, {}), ms).loglik(x) == doctest::Approx(base).epsilon(1e-13));

    rs = d.respondents();
    std::rotate(rs.begin(), rs.begin() + 1, rs.end());
    CHECK(std::fabs(MixlProblem(PanelDataset(d.schema(), rs, {}, {}), ms).loglik(x) - base) > 1e-8);
  }

  TEST_CASE("one pseudo draw still runs") {
    const PanelDataset d = test::simulate_consumers(100, 9);
    MixlSpec ms = consumer_mixl({"bio"}, 1);
    ms.draw_scheme = DrawScheme::Pseudo;
    const MixlFit f = fit_mixl(d, ms);
    CHECK(f.fit.estimates.allFinite());
    CHECK(f.sds().at("bio") >= 0.0);
    CHECK(simulated_loglik(f.fit.estimates, d, ms) == f.fit.loglik);
  }

  TEST_CASE("zero-sd truth gives sds indistinguishable from zero") {
    const PanelDataset d = test::simulate_consumers(2000, 10);
    const MixlFit f = fit_mixl(d, consumer_mixl({"bio", "tt:drive"}, 100, 4));
    CHECK(f.fit.converged);
    for (const auto& name : {"bio", "tt:drive"}) {
      const double sd = f.sds().at(name);
      CHECK_MESSAGE(sd <= 2.0 * f.fit.se(std::string("sd:") + name) + 1e-6, name);
    }
    CHECK(f.fit.model == "mixl");
    CHECK(f.fit.draws->n_draws == 100);
    CHECK(f.means().size() == 2);
    CHECK(f.fixed().size() == 12);
  }

  TEST_CASE("worker count does not change the mixed fit") {
    const PanelDataset d = test::simulate_consumers(150, 11);
    MixlOptions o1, o3;
    o3.threads = 3;
    const MixlSpec ms = consumer_mixl({"bio", "tt:ferme"}, 25);
    const MixlFit a = fit_mixl(d, ms, o1), b = fit_mixl(d, ms, o3);
    CHECK(a.fit.estimates == b.fit.estimates);
    CHECK(a.fit.covariance == b.fit.covariance);
  }

  TEST_CASE("covariance options") {
    const PanelDataset d = test::simulate_consumers(150, 12);
    const MixlSpec ms = consumer_mixl({"bio"}, 25);
    for (MixlCovariance c : {MixlCovariance::Sandwich, MixlCovariance::Opg, MixlCovariance::Hessian}) {
      MixlOptions o;
      o.covariance = c;
      try {
        const MixlFit f = fit_mixl(d, ms, o);
        CHECK(f.fit.covariance.rows() == 15);
        CHECK((f.fit.covariance - f.fit.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
      } catch (const Error& e) {
        // An sd sitting on zero can leave the Hessian singular.
        CHECK(e.code() == ErrorCode::SingularHessian);
      }
    }
  }
}

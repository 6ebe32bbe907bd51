#include <cmath>
#include <numeric>

#include "doctest.h"
#include "dcekit/dcekit.hpp"
#include "dcekit/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace dce;

namespace {

Alternative alt(Outlet o, std::vector<double> values) {
  Alternative a;
  a.alt_id = "x";
  a.outlet = o;
  a.values = std::move(values);
  return a;
}

// One task of a single-attribute schema with a chosen alternative.
struct TinyProblem {
  Schema schema{{"price", AttributeKind::Continuous, {}, ""}, {"tt", AttributeKind::Continuous, {}, ""}};
  ModelSpec model;
  TinyProblem() {
    model.outlet_intercepts = {Outlet::Ferme, Outlet::Drive};
    model.travel_time_mode = TravelTimeMode::Pooled;
  }
};

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("zero coefficients and the opt-out give zero utility") {
    const CompiledSpec spec = test::consumer_spec();
    const Alternative a = alt(Outlet::Ferme, {10, 10, 1, 1, 2});
    CHECK(utility(a, Eigen::VectorXd::Zero(14), spec) == 0.0);
    CHECK(utility(Alternative{}, Eigen::VectorXd::Ones(14), spec) == 0.0);
  }

  TEST_CASE("hand utility on the reference consumer coefficients") {
    const CompiledSpec spec = test::consumer_spec();
    const Alternative a = alt(Outlet::Ferme, {10, 10, 1, 0, 0});
    CHECK(utility(a, test::consumer_truth().fixed, spec) == doctest::Approx(2.160).epsilon(1e-12));
  }

  TEST_CASE("unknown coefficient names throw") {
    const CompiledSpec spec = test::consumer_spec();
    CHECK_THROWS_AS(utility(alt(Outlet::Ferme, {1, 1, 0, 0, 0}), CoefficientMap{{"nope", 1.0}}, spec), Error);
  }

  TEST_CASE("utility is linear in the coefficients") {
    const CompiledSpec spec = test::consumer_spec();
    const Alternative a = alt(Outlet::Drive, {15, 20, 1, 0, 2});
    const Eigen::VectorXd t1 = Eigen::VectorXd::LinSpaced(14, -1, 1);
    const Eigen::VectorXd t2 = Eigen::VectorXd::LinSpaced(14, 0.5, -0.3);
    const double lhs = utility(a, (2.5 * t1 + t2).eval(), spec);
    CHECK(lhs == doctest::Approx(2.5 * utility(a, t1, spec) + utility(a, t2, spec)).epsilon(1e-12));
  }

  TEST_CASE("logit probabilities") {
    const Eigen::VectorXd six = logit_probs(Eigen::VectorXd::Zero(6));
    for (double p : six) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    const Eigen::VectorXd two = logit_probs(Eigen::Vector2d(std::log(2.0), 0.0));
    CHECK(two[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(two[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    const Eigen::VectorXd big = logit_probs(Eigen::Vector3d(1000, 1000, 999));
    CHECK(big.allFinite());
    CHECK(std::fabs(big.sum() - 1.0) <= 1e-12);
    const Eigen::VectorXd shifted = logit_probs(Eigen::Vector3d(1, 1, 0));
    CHECK((big - shifted).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("softmax is invariant to a common shift but not to shifting non-opt-out only") {
    const Eigen::VectorXd u = (Eigen::VectorXd(4) << 0.3, -1.2, 2.0, 0.0).finished();
    const Eigen::VectorXd shifted_all = (u.array() + 5.0).matrix();
    CHECK((logit_probs(u) - logit_probs(shifted_all)).cwiseAbs().maxCoeff() <= 1e-15);
    Eigen::VectorXd shifted_some = shifted_all;
    shifted_some[3] = 0.0;
    CHECK((logit_probs(u) - logit_probs(shifted_some)).cwiseAbs().maxCoeff() > 0.05);
  }

  TEST_CASE("Gumbel argmax shares match logit probabilities within 3 MC se") {
    const Eigen::VectorXd u = (Eigen::VectorXd(4) << 0.5, -0.25, 1.0, 0.0).finished();
    const Eigen::VectorXd p = logit_probs(u);
    Rng rng(99);
    const int n = 1000000;
    std::vector<int> counts(4, 0);
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double top = -1e300;
      for (int j = 0; j < 4; ++j) {
        const double v = u[j] + rng.gumbel();
        if (v > top) {
          top = v;
          best = j;
        }
      }
      ++counts[best];
    }
    for (int j = 0; j < 4; ++j) {
      const double se = std::sqrt(p[j] * (1 - p[j]) / n);
      CHECK(std::fabs(counts[j] / static_cast<double>(n) - p[j]) <= 3 * se);
    }
  }

  TEST_CASE("simulated shares converge to logit probabilities with sd = 0") {
    // 100000 identical one-alternative-plus-opt-out tasks.
    TinyProblem tp;
    const CompiledSpec spec(tp.model, tp.schema);
    Design d;
    d.schema = tp.schema;
    d.respondents.resize(20000);
    for (std::size_t i = 0; i < d.respondents.size(); ++i) {
      auto& r = d.respondents[i];
      r.respondent_id = std::to_string(i);
      for (int t = 0; t < 5; ++t) {
        ChoiceTask task;
        task.task_id = std::to_string(t);
        Alternative a = alt(Outlet::Ferme, {10, 20});
        a.alt_id = "1";
        Alternative b = alt(Outlet::Drive, {5, 10});
        b.alt_id = "2";
        Alternative o;
        o.alt_id = "3";
        task.alternatives = {a, b, o};
        r.tasks.push_back(task);
      }
    }
    TrueParams truth;
    truth.fixed = {{"asc:ferme", 1.0}, {"asc:drive", 0.5}, {"price", -0.1}, {"tt", -0.02}};
    const PanelDataset data = simulate_choices(d, truth, spec, 17);
    std::vector<double> share(3, 0.0);
    for (const auto& r : data.respondents())
      for (const auto& t : r.tasks) share[*t.chosen] += 1.0 / 100000.0;
    const Eigen::VectorXd p = logit_probs(Eigen::Vector3d(1.0 - 1.0 - 0.4, 0.5 - 0.5 - 0.2, 0.0));
    for (int j = 0; j < 3; ++j) CHECK(std::fabs(share[j] - p[j]) <= 0.01);
  }

  TEST_CASE("a dominant alternative is always chosen") {
    TinyProblem tp;
    const CompiledSpec spec(tp.model, tp.schema);
    Design d;
    d.schema = tp.schema;
    d.respondents.resize(1);
    d.respondents[0].respondent_id = "1";
    for (int t = 0; t < 100000; ++t) {
      ChoiceTask task;
      task.task_id = std::to_string(t);
      Alternative a = alt(Outlet::Ferme, {0, 0});
      a.alt_id = "1";
      Alternative o;
      o.alt_id = "2";
      task.alternatives = {a, o};
      d.respondents[0].tasks.push_back(task);
    }
    TrueParams truth;
    truth.fixed = {{"asc:ferme", 20.0}, {"asc:drive", 0.0}, {"price", -0.1}, {"tt", 0.0}};
    const PanelDataset data = simulate_choices(d, truth, spec, 3);
    std::size_t hits = 0;
    for (const auto& t : data.respondents()[0].tasks) hits += *t.chosen == 0;
    CHECK(static_cast<double>(hits) / 100000.0 >= 0.999999);
  }

  TEST_CASE("simulation is seeded and independent of workers") {
    const DesignConfig cfg = consumer_design_preset(21);
    const Design d = generate_design(cfg, 60);
    const CompiledSpec spec = test::consumer_spec();
    TrueParams truth = test::consumer_truth();
    truth.fixed.erase("tt:drive");
    truth.random["tt:drive"] = {-0.08, 0.04};
    const PanelDataset a = simulate_choices(d, truth, spec, 5, 1);
    CHECK(a == simulate_choices(d, truth, spec, 5, 3));
    CHECK_FALSE(a == simulate_choices(d, truth, spec, 6, 1));
  }

  TEST_CASE("invalid truths") {
    const CompiledSpec spec = test::consumer_spec();
    const Design d = generate_design(consumer_design_preset(1), 2);
    TrueParams t = test::consumer_truth();
    t.fixed.erase("bio");
    CHECK_THROWS_AS(simulate_choices(d, t, spec, 1), Error);
    t = test::consumer_truth();
    t.random["bio"] = {0.4, 0.1};
    CHECK_THROWS_AS(simulate_choices(d, t, spec, 1), Error);
    t = test::consumer_truth();
    t.fixed.erase("bio");
    t.random["bio"] = {0.4, -0.1};
    CHECK_THROWS_AS(simulate_choices(d, t, spec, 1), Error);
    t = test::consumer_truth();
    t.fixed["nope"] = 1.0;
    CHECK_THROWS_AS(simulate_choices(d, t, spec, 1), Error);
  }

  TEST_CASE("oracle: sd = 0 is the exact product, empty sequence is 1") {
    const PanelDataset data = test::simulate_consumers(1, 4);
    const CompiledSpec spec = test::consumer_spec();
    const auto& tasks = data.respondents()[0].tasks;
    Eigen::VectorXd beta(14);
    for (std::size_t k = 0; k < 14; ++k) beta[static_cast<Eigen::Index>(k)] = test::consumer_truth().fixed.at(spec.names()[k]);
    double product = 1.0;
    for (const auto& t : tasks) product *= logit_probs(spec.task_matrix(t) * beta)[static_cast<Eigen::Index>(*t.chosen)];
    CHECK(mixl_prob_oracle(tasks, test::consumer_truth(), spec, 1) == doctest::Approx(product).epsilon(1e-14));
    CHECK(mixl_prob_oracle({}, test::consumer_truth(), spec, 10) == 1.0);
    CHECK_THROWS_AS(mixl_prob_oracle(tasks, test::consumer_truth(), spec, 0), Error);
  }

  TEST_CASE("oracle matches 64-node Gauss-Hermite on one task") {
    TinyProblem tp;
    const CompiledSpec spec(tp.model, tp.schema);
    ChoiceTask task;
    Alternative a = alt(Outlet::Ferme, {10, 30});
    a.alt_id = "1";
    Alternative b = alt(Outlet::Drive, {5, 10});
    b.alt_id = "2";
    Alternative o;
    o.alt_id = "3";
    task.alternatives = {a, b, o};
    task.chosen = 0;
    TrueParams truth;
    truth.fixed = {{"asc:ferme", 2.0}, {"asc:drive", 1.0}, {"price", -0.1}};
    truth.random["tt"] = {-0.05, 0.04};

    const test::Quadrature q = test::gauss_hermite_normal(64);
    double expected = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
      const double btt = -0.05 + 0.04 * q.nodes[i];
      const Eigen::Vector3d u(2.0 - 1.0 + 30 * btt, 1.0 - 0.5 + 10 * btt, 0.0);
      expected += q.weights[i] * logit_probs(u)[0];
    }
    const std::vector<ChoiceTask> tasks{task};
    CHECK(std::fabs(mixl_prob_oracle(tasks, truth, spec, 1000000, 8) - expected) <= 1e-3);
  }
}

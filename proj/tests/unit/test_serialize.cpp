#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "dcekit/dcekit.hpp"
#include "support/fixtures.hpp"

using namespace dce;

TEST_SUITE("serialize") {
  TEST_CASE("format_double is shortest and round-trips") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(20.0) == "20");
    CHECK(format_double(-0.175) == "-0.175");
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
      const double x = u(gen) / 3.0;
      CHECK(std::stod(format_double(x)) == x);
    }
  }

  TEST_CASE("MNL fit JSON round-trips") {
    const FitResult f = fit_mnl(test::simulate_consumers(200, 1), test::consumer_spec());
    const std::string text = fit_to_json(f);
    const FitResult g = fit_from_json(text);
    CHECK(g.names == f.names);
    CHECK(g.estimates == f.estimates);
    CHECK(g.covariance == f.covariance);
    CHECK(g.loglik == f.loglik);
    CHECK(g.spec == f.spec);
    CHECK(g.converged == f.converged);
    CHECK(fit_to_json(g) == text);
    CHECK(text.find("\"z\"") != std::string::npos);
    CHECK(text.find("\"aic\"") != std::string::npos);
  }

  TEST_CASE("mixed fit JSON carries the sd table and draw metadata") {
    MixlSpec ms;
    ms.base = consumer_model_preset();
    ms.random_set = {"bio"};
    ms.n_draws = 16;
    ms.seed = 5;
    const MixlFit m = fit_mixl(test::simulate_consumers(100, 2), ms);
    const std::string text = fit_to_json(m.fit);
    CHECK(text.find("\"sd\"") != std::string::npos);
    CHECK(text.find("\"sobol\"") != std::string::npos);
    const FitResult g = fit_from_json(text);
    CHECK(g.model == "mixl");
    CHECK(g.draws->n_draws == 16);
    CHECK(g.draws->seed == 5);
    CHECK(g.random_coefficients == std::vector<std::string>{"bio"});
    CHECK(g.estimates == m.fit.estimates);
  }

  TEST_CASE("schema and model spec JSON") {
    const Schema s = consumer_design_preset(0).schema;
    CHECK(schema_from_json(schema_to_json(s)) == s);
    const ModelSpec m = farmer_model_preset();
    CHECK(model_spec_from_json(model_spec_to_json(m)) == m);
    const ModelSpec short_form = model_spec_from_json(R"({"population": "farmer", "travel_time_mode": "pooled", "extra_attrs": ["events", {"name": "mutual_aid", "coding": "numeric"}]})");
    CHECK(short_form.extra_attrs.size() == 2);
    CHECK(short_form.extra_attrs[1].coding == Coding::Numeric);
    CHECK_THROWS_AS(model_spec_from_json(R"({"populaton": "farmer"})"), Error);
  }

  TEST_CASE("truth and means JSON") {
    TrueParams t = test::consumer_truth();
    t.fixed.erase("bio");
    t.random["bio"] = {0.4, 0.2};
    const TrueParams back = true_params_from_json(true_params_to_json(t));
    CHECK(back.fixed == t.fixed);
    CHECK(back.random.at("bio").sd == 0.2);
    AttributeMeans m;
    m[Outlet::Marche] = {12.5, {{"bio", 0.5}}};
    const AttributeMeans mb = attribute_means_from_json(attribute_means_to_json(m));
    CHECK(mb.at(Outlet::Marche).travel_time == 12.5);
    CHECK(mb.at(Outlet::Marche).covariates.at("bio") == 0.5);
  }

  TEST_CASE("design config JSON applies on top of a preset") {
    const DesignConfig c = design_config_from_json(R"({"n_tasks": 4, "grids": {"price": [1, 2]}, "fixed_values": {"drive": {"tt": 5}}})",
                                                   consumer_design_preset(1));
    CHECK(c.n_tasks == 4);
    CHECK(c.grids.at("price") == std::vector<double>{1, 2});
    CHECK(c.grids.at("tt").size() == 6);
    CHECK(c.fixed_values.at(Outlet::Drive).at("tt") == 5.0);
    CHECK_THROWS_AS(design_config_from_json(R"({"n_taks": 4})", consumer_design_preset(1)), Error);
  }

  TEST_CASE("welfare and curve tables") {
    const FitResult f = test::synthetic_fit(consumer_model_preset(), consumer_design_preset(0).schema, test::consumer_truth().fixed);
    const WelfareTable t = welfare_table(f, WelfareDirection::CAP);
    const std::string csv = welfare_to_csv(t);
    CHECK(csv.rfind("coefficient,estimate,se,method,formula,reading\n", 0) == 0);
    CHECK(welfare_to_json(t).find("\"CAP = -b[bio] / b[price]\"") != std::string::npos);
    PotentialLine c, p;
    c.intercept = 6;
    c.slope = -0.1;
    p.intercept = 3;
    p.slope = 0.05;
    const std::string curve = curve_to_csv(curve_samples(c, p, 20, 10));
    CHECK(curve == "T,capg,cavg,delta\n0,6,3,3\n10,5,3.5,1.5\n20,4,4,0\n");
  }

  TEST_CASE("atomic writes and I/O errors") {
    const auto path = std::filesystem::temp_directory_path() / "dcekit_atomic.txt";
    write_file_atomic(path, "one");
    write_file_atomic(path, "two");
    CHECK(read_file(path) == "two");
    std::filesystem::remove(path);
    try {
      read_file(path);
      FAIL("expected Io");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Io);
    }
    CHECK_THROWS_AS(write_file_atomic("/nonexistent-dir/x.txt", "x"), Error);
  }

  TEST_CASE("error classes map to exit categories") {
    CHECK(classify(ErrorCode::DuplicateChoice) == ErrorClass::Validation);
    CHECK(classify(ErrorCode::NotConverged) == ErrorClass::Convergence);
    CHECK(classify(ErrorCode::SingularHessian) == ErrorClass::Convergence);
    CHECK(classify(ErrorCode::Io) == ErrorClass::Io);
  }
}

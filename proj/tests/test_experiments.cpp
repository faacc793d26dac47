#include <filesystem>
#include <fstream>
#include <cmath>

#include "carnot/experiments.hpp"
#include "doctest.h"

using namespace carnot;
using nlohmann::json;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("flat directions of the built-in non-strictly-convex norms") {
  const auto fl = cli::detect_flat_direction(NormModel::linf(2));
  REQUIRE(fl.has_value());
  CHECK(fl->X.isApprox(vec2(1, 0)));
  CHECK(fl->Y.isApprox(vec2(0, 1)));
  CHECK(fl->eps == 1.0);

  const auto l1 = NormModel::l1(2);
  const auto f1 = cli::detect_flat_direction(l1);
  REQUIRE(f1.has_value());
  // |X + c Y| stays 1 across the face
  for (double c : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    CHECK(l1.norm(f1->X + c * f1->eps * f1->Y) == doctest::Approx(1.0));
  }

  const auto square = NormModel::polyhedral(
      {vec2(1, 1), vec2(1, -1), vec2(-1, 1), vec2(-1, -1)});
  const auto fs = cli::detect_flat_direction(square);
  REQUIRE(fs.has_value());
  for (double c : {-1.0, 0.0, 1.0}) {
    CHECK(square.norm(fs->X + c * fs->eps * fs->Y) == doctest::Approx(1.0));
  }

  CHECK_FALSE(cli::detect_flat_direction(
      NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2))));
}

TEST_CASE("counterexample runner") {
  const auto H = StepTwoAlgebra::heisenberg(1);
  oracle::OracleOptions opts;
  opts.n_steps = 48;
  opts.restarts = 2;
  opts.seed = 5;

  const auto rep = cli::run_counterexample(H, NormModel::linf(2), std::nullopt,
                                           2.0 * M_PI, 1e-2, 0.01, opts);
  CHECK(rep.at("verified").get<bool>());
  CHECK_FALSE(rep.at("affine").get<bool>());

  // eps = 0 degenerates to a straight line: geodesic but affine
  cli::FlatDirection line;
  line.X = vec2(1, 0);
  line.Y = vec2(0, 1);
  line.eps = 0.0;
  const auto rep0 = cli::run_counterexample(H, NormModel::linf(2), line, 2.0 * M_PI,
                                            1e-2, 0.01, opts);
  CHECK(rep0.at("affine").get<bool>());
  CHECK_FALSE(rep0.at("verified").get<bool>());
  for (const auto& w : rep0.at("windows")) {
    CHECK(w.at("passed_geodesy").get<bool>());
  }

  CHECK_THROWS_AS(
      cli::run_counterexample(H, NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2)),
                              std::nullopt, 1.0, 1e-2, 0.01, opts),
      std::invalid_argument);
}

TEST_CASE("experiment dispatch and report determinism") {
  const json spec = {{"kind", "extremal"},
                     {"group", "heisenberg:1"},
                     {"norm", "euclidean"},
                     {"seed", 3},
                     {"params",
                      {{"a0", {1.0, 0.0}}, {"b", {1.0}}, {"T", 2.0}, {"dt", 1e-3}}}};
  const auto r1 = cli::run_experiment(spec);
  const auto r2 = cli::run_experiment(spec);
  CHECK(r1.dump() == r2.dump());
  CHECK(r1.at("residuals").at("extremal_within_tol").get<bool>());
  CHECK(r1.at("version").get<std::string>() == cli::kToolVersion);
  CHECK(r1.at("spec") == spec);

  const json decay_spec = {{"kind", "decay"},
                           {"group", "heisenberg:1"},
                           {"norm", "euclidean"},
                           {"seed", 3},
                           {"params",
                            {{"a0", {1.0, 0.0}},
                             {"b", {1.0}},
                             {"T", 8.0},
                             {"dt", 1e-3},
                             {"ladder", {1.0, 2.0, 4.0, 8.0}}}}};
  const auto rd = cli::run_experiment(decay_spec);
  const auto& values = rd.at("decay").at("value");
  REQUIRE(values.size() == 4);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(values[i].get<double>() <= 2.0 / std::pow(2.0, static_cast<double>(i)) + 0.05);
  }

  const json blow_spec = {{"kind", "blowdown"},
                          {"group", "heisenberg:1"},
                          {"norm", "euclidean"},
                          {"seed", 3},
                          {"params",
                           {{"a0", {1.0, 0.0}},
                            {"b", {1.0}},
                            {"T", 32.0},
                            {"dt", 1e-2},
                            {"lambdas", {1.0, 2.0, 4.0, 8.0}},
                            {"window", 2.0}}}};
  const auto rb = cli::run_experiment(blow_spec);
  CHECK(rb.contains("blowdown"));
  CHECK(rb.at("blowdown").at("pairwise_l2").size() == 3);

  CHECK_THROWS_AS(cli::run_experiment(json{{"kind", "nope"}, {"group", "heisenberg:1"}}),
                  std::invalid_argument);
}

TEST_CASE("distance problems from spec files") {
  std::filesystem::create_directories("test_artifacts");
  {
    std::ofstream g("test_artifacts/group.json");
    g << R"({"rank":2,"vdim":1,"brackets":[{"i":1,"j":2,"k":1,"coeff":1.0}]})";
  }
  {
    std::ofstream n("test_artifacts/norm.json");
    n << R"({"kind":"lp","p":4.0})";
  }
  const json spec = {{"kind", "distance"},
                     {"group", "test_artifacts/group.json"},
                     {"norm", "test_artifacts/norm.json"},
                     {"seed", 2},
                     {"params",
                      {{"h", {{"x", {1.0, 0.5}}}}, {"restarts", 2}, {"n_steps", 48}}}};
  const auto rep = cli::run_experiment(spec);
  const auto& d = rep.at("distance");
  CHECK(d.at("feasible").get<bool>());
  const auto lp4 = NormModel::lp(2, 4.0);
  CHECK(d.at("value").get<double>() ==
        doctest::Approx(lp4.norm(vec2(1.0, 0.5))).epsilon(0.01));
}

TEST_CASE("selection rules thread through run specs") {
  const json spec = {{"kind", "extremal"},
                     {"group", "heisenberg:1"},
                     {"norm", "linf"},
                     {"seed", 1},
                     {"params",
                      {{"a0", {1.0, 0.2}},
                       {"b", {0.5}},
                       {"T", 1.0},
                       {"dt", 1e-3},
                       {"selection", "lowest-index-vertex"}}}};
  const auto rep = cli::run_experiment(spec);
  CHECK(rep.at("selected_extremal").get<bool>());
}

#include <random>

#include "carnot/algebra.hpp"
#include "doctest.h"

using namespace carnot;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

GroupPoint pt(const StepTwoAlgebra& A, std::initializer_list<double> x,
              std::initializer_list<double> z) {
  return exp_point(A, vec(x), vec(z));
}

std::mt19937_64 rng(12345);

GroupPoint random_pt(const StepTwoAlgebra& A) {
  std::normal_distribution<double> g(0.0, 1.0);
  GroupPoint p = identity(A);
  for (int i = 0; i < p.x.size(); ++i) p.x[i] = g(rng);
  for (int i = 0; i < p.z.size(); ++i) p.z[i] = g(rng);
  return p;
}

}  // namespace

TEST_CASE("bracket reads the structure constants") {
  const auto H = StepTwoAlgebra::heisenberg(1);
  CHECK(H.bracket(vec({1, 0}), vec({0, 1}))[0] == doctest::Approx(1.0));
  const auto X = vec({0.3, -1.7});
  CHECK(H.bracket(X, X).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("free step-2 rank 3 bracket, expanded by hand") {
  // [e1+e2, e2+e3] = [e1,e2] + [e1,e3] + [e2,e3]
  const auto F = StepTwoAlgebra::free_step2(3);
  const auto got = F.bracket(vec({1, 1, 0}), vec({0, 1, 1}));
  CHECK(got.isApprox(vec({1, 1, 1}), 1e-15));
}

TEST_CASE("bracket is bilinear and antisymmetric") {
  const auto F = StepTwoAlgebra::free_step2(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    Eigen::VectorXd X(4), Y(4), Z(4);
    for (int i = 0; i < 4; ++i) {
      X[i] = g(rng);
      Y[i] = g(rng);
      Z[i] = g(rng);
    }
    const double a = g(rng), b = g(rng);
    const auto lhs = F.bracket(a * X + b * Y, Z);
    const Eigen::VectorXd rhs = a * F.bracket(X, Z) + b * F.bracket(Y, Z);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((F.bracket(X, Y) + F.bracket(Y, X)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("group product via second-order expansion") {
  const auto H = StepTwoAlgebra::heisenberg(1);
  const auto g1 = pt(H, {1, 0}, {0});
  const auto g2 = pt(H, {0, 1}, {0});
  const auto prod = multiply(H, g1, g2);
  CHECK(prod.x.isApprox(vec({1, 1})));
  CHECK(prod.z[0] == doctest::Approx(0.5));

  CHECK(approx_equal(multiply(H, g1, identity(H)), g1, 0.0));
  const auto twice = multiply(H, g1, g1);
  CHECK(twice.x.isApprox(vec({2, 0})));
  CHECK(twice.z[0] == 0.0);
}

TEST_CASE("inverse") {
  const auto H = StepTwoAlgebra::heisenberg(1);
  const auto g = pt(H, {1, 1}, {0.5});
  const auto gi = inverse(H, g);
  CHECK(gi.x.isApprox(vec({-1, -1})));
  CHECK(gi.z[0] == -0.5);
  CHECK(approx_equal(inverse(H, identity(H)), identity(H), 0.0));
  for (int s = 0; s < 50; ++s) {
    const auto p = random_pt(H);
    CHECK(approx_equal(multiply(H, p, inverse(H, p)), identity(H), 1e-12));
  }
}

TEST_CASE("dilations") {
  const auto H = StepTwoAlgebra::heisenberg(1);
  const auto g = pt(H, {1, 1}, {0.5});
  const auto d2 = dilate(H, 2.0, g);
  CHECK(d2.x.isApprox(vec({2, 2})));
  CHECK(d2.z[0] == doctest::Approx(2.0));
  CHECK(approx_equal(dilate(H, 1.0, g), g, 0.0));
  CHECK_THROWS_AS(dilate(H, 0.0, g), std::invalid_argument);
  CHECK_THROWS_AS(dilate(H, -2.0, g), std::invalid_argument);

  for (const auto& A : {StepTwoAlgebra::heisenberg(2), StepTwoAlgebra::free_step2(3)}) {
    std::uniform_real_distribution<double> lam(0.2, 3.0);
    for (int s = 0; s < 50; ++s) {
      const auto p = random_pt(A), q = random_pt(A);
      const double l = lam(rng), mu = lam(rng);
      CHECK(approx_equal(dilate(A, l, multiply(A, p, q)),
                         multiply(A, dilate(A, l, p), dilate(A, l, q)), 1e-12));
      CHECK(approx_equal(dilate(A, l, dilate(A, mu, p)), dilate(A, l * mu, p), 1e-12));
    }
  }
}

TEST_CASE("associativity on random triples") {
  for (const auto& A : {StepTwoAlgebra::heisenberg(1), StepTwoAlgebra::free_step2(3)}) {
    for (int s = 0; s < 100; ++s) {
      const auto g = random_pt(A), h = random_pt(A), k = random_pt(A);
      CHECK(approx_equal(multiply(A, multiply(A, g, h), k),
                         multiply(A, g, multiply(A, h, k)), 1e-12));
    }
  }
}

TEST_CASE("stratification validation") {
  CHECK(StepTwoAlgebra::heisenberg(1).validate_stratified().ok);
  CHECK(StepTwoAlgebra::heisenberg(3).validate_stratified().ok);
  CHECK(StepTwoAlgebra::free_step2(4).validate_stratified().ok);

  // vdim 2 but only one independent bracket image
  std::vector<Eigen::MatrixXd> c(2, Eigen::MatrixXd::Zero(2, 2));
  c[0](0, 1) = 1.0;
  c[0](1, 0) = -1.0;
  const auto degenerate = StepTwoAlgebra::from_raw_matrices(2, c);
  const auto rep = degenerate.validate_stratified();
  CHECK_FALSE(rep.ok);
  CHECK(rep.diagnostic.find("span") != std::string::npos);

  std::vector<Eigen::MatrixXd> bad(1, Eigen::MatrixXd::Zero(2, 2));
  bad[0](0, 1) = 1.0;
  bad[0](1, 0) = 1.0;  // not skew
  const auto rep2 = StepTwoAlgebra::from_raw_matrices(2, bad).validate_stratified();
  CHECK_FALSE(rep2.ok);
  CHECK(rep2.diagnostic.find("skew") != std::string::npos);
}

TEST_CASE("construction guards") {
  CHECK_THROWS_AS(StepTwoAlgebra(2, 2, {{1, 2, 1, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(StepTwoAlgebra(2, 1, {{1, 1, 1, 1.0}}), std::invalid_argument);
  const auto H = StepTwoAlgebra::heisenberg(1);
  CHECK_THROWS_AS(H.bracket(vec({1, 0, 0}), vec({0, 1})), std::invalid_argument);
}

TEST_CASE("json roundtrip and references") {
  const auto H = StepTwoAlgebra::from_reference("heisenberg:2");
  CHECK(H.rank() == 4);
  CHECK(H.vdim() == 1);
  const auto F = StepTwoAlgebra::from_reference("free2:3");
  CHECK(F.vdim() == 3);

  const auto j = F.to_json();
  const auto F2 = StepTwoAlgebra::from_json(j);
  const auto X = vec({0.3, -0.2, 1.1}), Y = vec({1.0, 0.5, -0.7});
  CHECK(F.bracket(X, Y).isApprox(F2.bracket(X, Y)));

  nlohmann::json custom = {
      {"rank", 2},
      {"vdim", 1},
      {"brackets", {{{"i", 1}, {"j", 2}, {"k", 1}, {"coeff", 2.0}}}}};
  const auto C = StepTwoAlgebra::from_json(custom);
  CHECK(C.bracket(vec({1, 0}), vec({0, 1}))[0] == doctest::Approx(2.0));
}

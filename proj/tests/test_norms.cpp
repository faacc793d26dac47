#include <cmath>
#include <random>

#include "carnot/norms.hpp"
#include "doctest.h"

using namespace carnot;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

NormModel square_norm() {
  return NormModel::polyhedral({vec2(1, 1), vec2(1, -1), vec2(-1, 1), vec2(-1, -1)});
}

NormModel diamond_norm() {
  return NormModel::polyhedral({vec2(1, 0), vec2(-1, 0), vec2(0, 1), vec2(0, -1)});
}

// Brute-force check of the subgradient inequality over a polar grid.
bool subdiff_brute(const NormModel& N, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& a, double tol) {
  const double Eu = 0.5 * N.norm(u) * N.norm(u);
  for (int ia = 0; ia < 360; ++ia) {
    const double phi = 2.0 * M_PI * ia / 360.0;
    for (double r = 0.0; r <= 4.0; r += 0.01) {
      const Eigen::VectorXd v = r * vec2(std::cos(phi), std::sin(phi));
      if (a.dot(v - u) > 0.5 * N.norm(v) * N.norm(v) - Eu + tol) return false;
    }
  }
  return true;
}

std::mt19937_64 rng(777);

Eigen::VectorXd rand2() {
  std::normal_distribution<double> g(0.0, 1.0);
  return vec2(g(rng), g(rng));
}

}  // namespace

TEST_CASE("norm values") {
  CHECK(NormModel::linf(2).norm(vec2(1, -0.5)) == doctest::Approx(1.0));
  CHECK(NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2)).norm(vec2(3, 4)) ==
        doctest::Approx(5.0));
  CHECK(NormModel::lp(2, 4.0).norm(vec2(1, 1)) == doctest::Approx(std::pow(2.0, 0.25)));
  CHECK(NormModel::l1(2).norm(vec2(1, -0.5)) == doctest::Approx(1.5));
}

TEST_CASE("dual norm values") {
  CHECK(NormModel::linf(2).dual_norm(vec2(0.3, 0.7)) == doctest::Approx(1.0));
  const auto E = NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2));
  CHECK(E.dual_norm(vec2(3, 4)) == doctest::Approx(5.0));
  // max over the four square vertices
  CHECK(square_norm().dual_norm(vec2(1, 0)) == doctest::Approx(1.0));
}

TEST_CASE("polyhedral gauges match the closed-form norms they encode") {
  const auto sq = square_norm();
  const auto di = diamond_norm();
  const auto linf = NormModel::linf(2);
  const auto l1 = NormModel::l1(2);
  for (int s = 0; s < 100; ++s) {
    const auto x = rand2();
    CHECK(sq.norm(x) == doctest::Approx(linf.norm(x)).epsilon(1e-9));
    CHECK(di.norm(x) == doctest::Approx(l1.norm(x)).epsilon(1e-9));
    CHECK(sq.dual_norm(x) == doctest::Approx(linf.dual_norm(x)).epsilon(1e-9));
    CHECK(di.dual_norm(x) == doctest::Approx(l1.dual_norm(x)).epsilon(1e-9));
  }
}

TEST_CASE("metric euclidean norm and dual") {
  Eigen::MatrixXd M(2, 2);
  M << 2.0, 0.3, 0.3, 1.0;
  const auto N = NormModel::euclidean(M);
  const auto x = vec2(1.0, -2.0);
  CHECK(N.norm(x) == doctest::Approx(std::sqrt(x.dot(M * x))));
  const auto a = vec2(0.5, 1.5);
  CHECK(N.dual_norm(a) ==
        doctest::Approx(std::sqrt(a.dot(M.inverse() * a))));
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
  CHECK_THROWS_AS(NormModel::euclidean(bad), std::invalid_argument);
}

TEST_CASE("subdifferential certificates") {
  const auto E = NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2));
  CHECK(E.subdiff_contains(vec2(1, 0), vec2(1, 0), 1e-12));
  CHECK_FALSE(E.subdiff_contains(vec2(1, 0), vec2(0.9, 0.1), 1e-9));

  const auto linf = NormModel::linf(2);
  // Certified against an independent grid check first.
  CHECK(subdiff_brute(linf, vec2(1, 1), vec2(0.5, 0.5), 1e-9));
  CHECK(linf.subdiff_contains(vec2(1, 1), vec2(0.5, 0.5), 1e-9));

  CHECK_FALSE(linf.subdiff_contains(vec2(1, 1), vec2(2, 0), 1e-9));
  CHECK_FALSE(subdiff_brute(linf, vec2(1, 1), vec2(2, 0), 1e-9));
  // The violation shows up along the first axis, e.g. v = (2, 0):
  // a(v - u) = 2 while E(v) - E(u) = 1.5.
  const Eigen::VectorXd v = vec2(2, 0), u = vec2(1, 1), a = vec2(2, 0);
  CHECK(a.dot(v - u) > 0.5 * linf.norm(v) * linf.norm(v) -
                           0.5 * linf.norm(u) * linf.norm(u));
}

TEST_CASE("probe check agrees with the certificate") {
  for (const auto& N : {NormModel::linf(2), NormModel::l1(2), NormModel::lp(2, 3.0),
                        square_norm()}) {
    for (int s = 0; s < 20; ++s) {
      const auto u = rand2();
      const auto a = N.subdifferential_at(u);
      CHECK(N.subdiff_contains(u, a, 1e-9));
      CHECK(N.subdiff_contains_probe(u, a, 1e-8));
      const Eigen::VectorXd bad = a + vec2(0.2, -0.3);
      CHECK(N.subdiff_contains(u, bad, 1e-6) == N.subdiff_contains_probe(u, bad, 1e-6));
    }
  }
}

TEST_CASE("legendre feedback, smooth cases") {
  const auto E = NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2));
  const auto r = E.legendre_feedback(vec2(0.6, 0.8));
  CHECK(r.unique);
  CHECK(r.selected.isApprox(vec2(0.6, 0.8)));

  const auto zero = E.legendre_feedback(vec2(0, 0));
  CHECK(zero.selected.cwiseAbs().maxCoeff() == 0.0);

  for (const auto& N :
       {NormModel::lp(2, 4.0), NormModel::lp(2, 1.5),
        NormModel::euclidean((Eigen::MatrixXd(2, 2) << 2, 0.3, 0.3, 1).finished())}) {
    for (int s = 0; s < 30; ++s) {
      const auto a = rand2();
      const auto f = N.legendre_feedback(a);
      CHECK(N.norm(f.selected) == doctest::Approx(N.dual_norm(a)).epsilon(1e-9));
      CHECK(a.dot(f.selected) ==
            doctest::Approx(N.dual_norm(a) * N.dual_norm(a)).epsilon(1e-9));
    }
  }
}

TEST_CASE("legendre feedback on a flat face") {
  const auto linf = NormModel::linf(2);
  const auto a = vec2(1, 0);

  // Grid argmax of a(v) - E(v): optimum value 1/2 on the edge x = 1.
  double best = -1e9;
  for (double x = -2; x <= 2; x += 0.002) {
    for (double y = -2; y <= 2; y += 0.002) {
      const Eigen::VectorXd v = vec2(x, y);
      best = std::max(best, a.dot(v) - 0.5 * linf.norm(v) * linf.norm(v));
    }
  }
  CHECK(best == doctest::Approx(0.5).epsilon(1e-4));

  const auto f = linf.legendre_feedback(a);
  CHECK_FALSE(f.unique);
  CHECK(f.selected.isApprox(vec2(1, 0)));  // barycenter
  REQUIRE(f.vertices.size() == 2);
  CHECK(((f.vertices[0].isApprox(vec2(1, 1)) && f.vertices[1].isApprox(vec2(1, -1))) ||
         (f.vertices[0].isApprox(vec2(1, -1)) && f.vertices[1].isApprox(vec2(1, 1)))));

  Selection fixed;
  fixed.rule = SelectionRule::fixed_vector;
  fixed.fixed = vec2(1, 0.25);
  CHECK(linf.legendre_feedback(a, fixed).selected.isApprox(vec2(1, 0.25)));

  Selection lowest;
  lowest.rule = SelectionRule::lowest_index_vertex;
  CHECK(linf.legendre_feedback(a, lowest).selected.isApprox(f.vertices[0]));

  const auto l1 = NormModel::l1(2);
  const auto g = l1.legendre_feedback(vec2(1, 1));
  CHECK_FALSE(g.unique);
  CHECK(g.selected.isApprox(vec2(0.5, 0.5)));  // barycenter of {e1, e2}
  CHECK(l1.norm(g.vertices[0]) == doctest::Approx(l1.dual_norm(vec2(1, 1))));

  const auto sq = square_norm();
  const auto h = sq.legendre_feedback(vec2(1, 0));
  CHECK_FALSE(h.unique);
  CHECK(h.selected.isApprox(vec2(1, 0)));
}

TEST_CASE("strict convexity classification") {
  CHECK(NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2)).strict_convexity_probe(100).strictly_convex);
  CHECK(NormModel::lp(2, 4.0).strict_convexity_probe(100).strictly_convex);
  const auto probe = NormModel::linf(2).strict_convexity_probe(100);
  CHECK_FALSE(probe.strictly_convex);
  const auto linf = NormModel::linf(2);
  CHECK(linf.norm(probe.u) == doctest::Approx(1.0));
  CHECK(linf.norm(probe.v) == doctest::Approx(1.0));
  CHECK(linf.norm(0.5 * (probe.u + probe.v)) >= 1.0 - 1e-12);
  CHECK_FALSE(square_norm().strict_convexity_probe(100).strictly_convex);
  CHECK_FALSE(NormModel::l1(3).strict_convexity_probe(100).strictly_convex);
}

TEST_CASE("subdifferential pairing bounds") {
  std::vector<NormModel> zoo = {NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2)),
                                NormModel::lp(2, 4.0), NormModel::lp(2, 1.5),
                                NormModel::linf(2), NormModel::l1(2), square_norm()};
  for (const auto& N : zoo) {
    for (int s = 0; s < 40; ++s) {
      const auto Y = rand2(), X = rand2();
      if (N.norm(Y) < 1e-6) continue;
      const auto a = N.subdifferential_at(Y);
      CHECK(std::abs(a.dot(X)) <= N.norm(X) * N.norm(Y) + 1e-9);
      CHECK(a.dot(Y) == doctest::Approx(N.norm(Y) * N.norm(Y)).epsilon(1e-9));
      if (N.strictly_convex()) {
        CHECK((N.legendre_feedback(a).selected - Y).norm() <= 1e-9 * (1.0 + Y.norm()));
      }
    }
  }
}

TEST_CASE("subdifferential limits along converging arguments") {
  const auto linf = NormModel::linf(2);
  Covector limit;
  for (int k = 1; k <= 6; ++k) {
    const double eps = std::pow(10.0, -k);
    limit = linf.subdifferential_at(vec2(1 + eps, 1));
  }
  // the limit point (1,0) of the gradients is a subdifferential at (1,1)
  CHECK(limit.isApprox(vec2(1, 0), 1e-5));
  CHECK(linf.subdiff_contains(vec2(1, 1), vec2(1, 0), 1e-8));
}

TEST_CASE("maximized value identity vs grid") {
  for (const auto& N : {NormModel::linf(2), NormModel::l1(2), NormModel::lp(2, 4.0),
                        square_norm()}) {
    const auto a = vec2(0.8, -0.4);
    double brute = -1e9;
    for (int ia = 0; ia < 720; ++ia) {
      const double phi = 2.0 * M_PI * ia / 720.0;
      for (double r = 0; r <= 3.0; r += 0.005) {
        const Eigen::VectorXd v = r * vec2(std::cos(phi), std::sin(phi));
        brute = std::max(brute, a.dot(v) - 0.5 * N.norm(v) * N.norm(v));
      }
    }
    CHECK(brute == doctest::Approx(0.5 * N.dual_norm(a) * N.dual_norm(a)).epsilon(1e-3));
  }
}

TEST_CASE("polyhedral gauge in three dimensions") {
  // cube vertices encode the sup norm in r = 3
  std::vector<Eigen::VectorXd> cube;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      for (double sz : {-1.0, 1.0}) {
        cube.push_back((Eigen::VectorXd(3) << sx, sy, sz).finished());
      }
    }
  }
  const auto N = NormModel::polyhedral(cube);
  const auto linf3 = NormModel::linf(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    Eigen::VectorXd x(3);
    for (int i = 0; i < 3; ++i) x[i] = g(rng);
    CHECK(N.norm(x) == doctest::Approx(linf3.norm(x)).epsilon(1e-9));
    CHECK(N.dual_norm(x) == doctest::Approx(linf3.dual_norm(x)).epsilon(1e-9));
    const auto a = N.subdifferential_at(x);
    CHECK(a.dot(x) == doctest::Approx(N.norm(x) * N.norm(x)).epsilon(1e-9));
    CHECK(N.subdiff_contains(x, a, 1e-9));
  }
}

TEST_CASE("norm model validation probe") {
  for (const auto& N : {NormModel::linf(3), NormModel::lp(3, 2.5), NormModel::l1(3)}) {
    std::string diag;
    CHECK(N.validate(200, 1e-9, &diag));
  }
}

TEST_CASE("polyhedral construction guards") {
  CHECK_THROWS_AS(NormModel::polyhedral({vec2(1, 0), vec2(0, 1)}),
                  std::invalid_argument);  // not symmetric
  CHECK_THROWS_AS(NormModel::polyhedral({vec2(1, 0), vec2(-1, 0)}),
                  std::invalid_argument);  // does not span
  CHECK_THROWS_AS(NormModel::lp(2, 1.0), std::invalid_argument);
}

TEST_CASE("json roundtrip") {
  const auto sq = square_norm();
  const auto j = sq.to_json();
  const auto sq2 = NormModel::from_json(j, 2);
  for (int s = 0; s < 20; ++s) {
    const auto x = rand2();
    CHECK(sq.norm(x) == doctest::Approx(sq2.norm(x)));
  }
  const auto lp = NormModel::from_reference("lp:4", 2);
  CHECK(lp.kind() == NormKind::lp);
  CHECK(lp.p_exponent() == doctest::Approx(4.0));
  const auto j2 = nlohmann::json{{"kind", "lp"}, {"p", 4.0}};
  CHECK(NormModel::from_json(j2, 2).norm(vec2(1, 1)) ==
        doctest::Approx(std::pow(2.0, 0.25)));
}

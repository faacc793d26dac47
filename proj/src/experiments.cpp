#include "carnot/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

namespace carnot::cli {

namespace {

using nlohmann::json;
using oracle::OracleOptions;

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed ^ (0x9E3779B97F4A7C15ULL + salt * 0xD1B54A32D192ED03ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd json_vec(const json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

StepTwoAlgebra parse_group(const json& spec) {
  const auto& g = spec.at("group");
  if (g.is_string()) return StepTwoAlgebra::from_reference(g.get<std::string>());
  return StepTwoAlgebra::from_json(g);
}

NormModel parse_norm(const json& spec, int dim_hint) {
  const auto& n = spec.at("norm");
  if (n.is_string()) return NormModel::from_reference(n.get<std::string>(), dim_hint);
  return NormModel::from_json(n, dim_hint);
}

GroupPoint parse_point(const StepTwoAlgebra& A, const json& j) {
  GroupPoint p = identity(A);
  if (j.contains("x")) p.x = json_vec(j.at("x"));
  if (j.contains("z")) p.z = json_vec(j.at("z"));
  return p;
}

Eigen::VectorXd gaussian_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

GroupPoint random_point(std::mt19937_64& rng, const StepTwoAlgebra& A) {
  return {gaussian_vec(rng, A.rank()), gaussian_vec(rng, A.vdim())};
}

OracleOptions oracle_opts(const SuiteConfig& cfg, int n_steps, int restarts,
                          std::uint64_t salt) {
  OracleOptions o;
  o.n_steps = n_steps;
  o.restarts = restarts;
  o.seed = mix(cfg.seed, salt);
  o.threads = cfg.threads;
  return o;
}

struct RandomRunConfig {
  StepTwoAlgebra algebra;
  NormModel norm;
  Covector a0;
  VerticalVector b;
  std::string label;
};

// Random extremal configurations over the built-in groups with strictly
// convex norms. The lp exponents stay in (1, 1.5] so the dual feedback map is
// C^2 and the fixed-step integrator holds its conservation tolerances.
std::vector<RandomRunConfig> random_run_configs(int count, std::uint64_t seed) {
  std::vector<RandomRunConfig> out;
  std::mt19937_64 rng(mix(seed, 0xC3));
  std::uniform_real_distribution<double> bscale(0.5, 1.5);
  for (int i = 0; i < count; ++i) {
    StepTwoAlgebra A = (i % 3 == 0)   ? StepTwoAlgebra::heisenberg(1)
                       : (i % 3 == 1) ? StepTwoAlgebra::heisenberg(2)
                                      : StepTwoAlgebra::free_step2(3);
    const char* gname = (i % 3 == 0) ? "heisenberg:1" : (i % 3 == 1) ? "heisenberg:2" : "free2:3";
    NormModel N = [&]() {
      switch (i % 5) {
        case 0:
          return NormModel::euclidean(Eigen::MatrixXd::Identity(A.rank(), A.rank()));
        case 1: {
          const Eigen::MatrixXd G = Eigen::MatrixXd::NullaryExpr(
              A.rank(), A.rank(), [&](Eigen::Index, Eigen::Index) {
                return std::normal_distribution<double>(0.0, 1.0)(rng);
              });
          return NormModel::euclidean(
              Eigen::MatrixXd::Identity(A.rank(), A.rank()) +
              0.4 * (G * G.transpose()) / A.rank());
        }
        case 2:
          return NormModel::lp(A.rank(), 1.2);
        case 3:
          return NormModel::lp(A.rank(), 1.25);
        default:
          return NormModel::lp(A.rank(), 1.5);
      }
    }();
    Covector a0 = gaussian_vec(rng, A.rank());
    a0 /= N.dual_norm(a0);  // unit-speed normalization
    VerticalVector b = gaussian_vec(rng, A.vdim());
    if (b.norm() > 0) b *= bscale(rng) / b.norm();
    out.push_back({std::move(A), std::move(N), std::move(a0), std::move(b),
                   std::string(gname) + "/" + std::to_string(i)});
  }
  return out;
}

ControlSignal circle_control(double dt, double T) {
  return sample_control(
      [](double t) {
        Eigen::VectorXd u(2);
        u << std::cos(t), std::sin(t);
        return u;
      },
      dt, T);
}

std::vector<std::pair<size_t, size_t>> dyadic_windows(size_t n, int depth) {
  std::vector<std::pair<size_t, size_t>> w;
  for (int level = 0; level <= depth; ++level) {
    const size_t pieces = size_t{1} << level;
    for (size_t p = 0; p < pieces; ++p) {
      w.emplace_back(n * p / pieces, n * (p + 1) / pieces);
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Acceptance checks
// ---------------------------------------------------------------------------

CheckResult criterion_algebra_laws(const SuiteConfig& cfg) {
  const int triples = cfg.profile == "full" ? 1000 : 200;
  const double tol = 1e-12;
  std::mt19937_64 rng(mix(cfg.seed, 1));
  std::uniform_real_distribution<double> lam(0.2, 3.0);
  double worst = 0.0;
  bool builtins_ok = true;
  for (const auto& A : {StepTwoAlgebra::heisenberg(1), StepTwoAlgebra::heisenberg(2),
                        StepTwoAlgebra::free_step2(3)}) {
    builtins_ok = builtins_ok && A.validate_stratified().ok;
    for (int s = 0; s < triples; ++s) {
      const GroupPoint g = random_point(rng, A), h = random_point(rng, A),
                       k = random_point(rng, A);
      const GroupPoint lhs = multiply(A, multiply(A, g, h), k);
      const GroupPoint rhs = multiply(A, g, multiply(A, h, k));
      worst = std::max(worst, (lhs.x - rhs.x).cwiseAbs().maxCoeff());
      worst = std::max(worst, (lhs.z - rhs.z).cwiseAbs().maxCoeff());
      const GroupPoint gi = multiply(A, g, inverse(A, g));
      worst = std::max(worst, gi.x.cwiseAbs().maxCoeff());
      worst = std::max(worst, gi.z.cwiseAbs().maxCoeff());
      const double l = lam(rng), mu = lam(rng);
      const GroupPoint dprod = dilate(A, l, multiply(A, g, h));
      const GroupPoint proddil = multiply(A, dilate(A, l, g), dilate(A, l, h));
      worst = std::max(worst, (dprod.x - proddil.x).cwiseAbs().maxCoeff());
      worst = std::max(worst, (dprod.z - proddil.z).cwiseAbs().maxCoeff());
      const GroupPoint dd = dilate(A, l, dilate(A, mu, g));
      const GroupPoint dlm = dilate(A, l * mu, g);
      worst = std::max(worst, (dd.x - dlm.x).cwiseAbs().maxCoeff());
      worst = std::max(worst, (dd.z - dlm.z).cwiseAbs().maxCoeff());
    }
  }
  CheckResult res;
  res.id = "criterion-1-algebra-laws";
  res.pass = worst <= tol && builtins_ok;
  res.details = {{"max_error", worst}, {"tol", tol}, {"triples_per_group", triples},
                 {"builtins_stratified", builtins_ok}};
  return res;
}

CheckResult criterion_pmp_closed_form(const SuiteConfig& cfg) {
  (void)cfg;
  const auto A = StepTwoAlgebra::heisenberg(1);
  const auto N = NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2));
  Covector a0(2);
  a0 << 1.0, 0.0;
  VerticalVector b(1);
  b << 1.0;
  const double dt = 1e-3, T = 10.0;
  const auto run = integrate_extremal(A, N, a0, b, identity(A), T, dt);
  double sup = 0.0;
  for (size_t k = 0; k < run.control.samples.size(); ++k) {
    const double t = dt * static_cast<double>(k);
    Eigen::VectorXd exact(2);
    exact << std::cos(t), std::sin(t);
    sup = std::max(sup, (run.control.samples[k] - exact).cwiseAbs().maxCoeff());
  }
  CheckResult res;
  res.id = "criterion-2-pmp-closed-form";
  res.pass = sup <= 1e-6;
  res.details = {{"sup_control_error", sup}, {"tol", 1e-6}, {"T", T}, {"dt", dt}};
  return res;
}

CheckResult criterion_conservation(const SuiteConfig& cfg) {
  const int count = cfg.profile == "full" ? 20 : 6;
  const double T = 10.0, dt = 1e-3, tol = 1e-6;
  double worst_dual = 0.0, worst_kernel = 0.0, worst_pairing = 0.0;
  for (const auto& rc : random_run_configs(count, cfg.seed)) {
    const auto run =
        integrate_extremal(rc.algebra, rc.norm, rc.a0, rc.b, identity(rc.algebra), T, dt);
    const BForm B = build_B(rc.algebra, rc.b);
    const auto rep = conserved_quantities(rc.norm, B, run.states, run.control);
    worst_dual = std::max(worst_dual, rep.dual_norm_drift);
    for (double d : rep.kernel_drifts) worst_kernel = std::max(worst_kernel, d);
    worst_pairing = std::max(worst_pairing, rep.pairing_residual);
  }
  CheckResult res;
  res.id = "criterion-3-conservation";
  res.pass = worst_dual <= tol && worst_kernel <= tol && worst_pairing <= tol;
  res.details = {{"runs", count},
                 {"vertical_dual_drift", 0.0},
                 {"max_dual_norm_drift", worst_dual},
                 {"max_kernel_pairing_drift", worst_kernel},
                 {"max_subdiff_pairing_residual", worst_pairing},
                 {"tol", tol}};
  return res;
}

CheckResult criterion_average_decay(const SuiteConfig& cfg) {
  const bool full = cfg.profile == "full";
  const int count = full ? 20 : 6;
  const double Tmax = full ? 64.0 : 16.0;
  const double dt = 1e-3;
  std::vector<double> ladder;
  for (double T = 1.0; T <= Tmax + 0.5; T *= 2.0) ladder.push_back(T);
  std::mt19937_64 rng(mix(cfg.seed, 4));
  double worst_excess = -1e9;
  for (const auto& rc : random_run_configs(count, cfg.seed)) {
    const auto run =
        integrate_extremal(rc.algebra, rc.norm, rc.a0, rc.b, identity(rc.algebra), Tmax, dt);
    const BForm B = build_B(rc.algebra, rc.b);
    Eigen::VectorXd X = gaussian_vec(rng, rc.algebra.rank());
    X /= rc.norm.norm(X);
    const auto prof = average_decay_profile(run.control, B, X, ladder);
    for (size_t i = 0; i < prof.horizons.size(); ++i) {
      worst_excess =
          std::max(worst_excess, prof.values[i] * prof.horizons[i] - 2.0);
    }
  }
  CheckResult res;
  res.id = "criterion-4-average-decay";
  res.pass = worst_excess <= 0.1;
  res.details = {{"runs", count},
                 {"ladder_max", Tmax},
                 {"max_T_times_value_minus_2", worst_excess},
                 {"slack", 0.1}};
  return res;
}

CheckResult criterion_kernel_evidence(const SuiteConfig& cfg) {
  const bool full = cfg.profile == "full";
  const double dt = full ? std::ldexp(1.0, -9) : std::ldexp(1.0, -7);
  const int top = full ? 10 : 8;
  const double tol = full ? 1e-2 : 2e-2;
  const double domain = std::ldexp(1.0, top);
  const auto u = circle_control(dt, domain);
  const auto A = StepTwoAlgebra::heisenberg(1);
  VerticalVector b(1);
  b << 1.0;
  const BForm B = build_B(A, b);
  std::vector<double> lambdas;
  for (int k = 0; k <= top; ++k) lambdas.push_back(std::ldexp(1.0, k));
  const auto rep = kernel_membership_check(u, B, lambdas, 1.0, tol, 2);
  CheckResult res;
  res.id = "criterion-5-kernel-evidence";
  res.pass = rep.consistent;
  res.details = {{"lambda_max", lambdas.back()},
                 {"values", rep.max_B_avg},
                 {"tol", tol},
                 {"window", 1.0},
                 {"dyadic_depth", 2},
                 {"consistent", rep.consistent}};
  return res;
}

CheckResult criterion_submetry(const SuiteConfig& cfg) {
  const bool full = cfg.profile == "full";
  const int samples = full ? 100 : 8;
  const auto A = StepTwoAlgebra::heisenberg(1);
  const auto opts = oracle_opts(cfg, 64, full ? 4 : 2, 6);
  json per_norm = json::object();
  bool pass = true;
  for (const auto* name : {"euclidean", "linf"}) {
    const NormModel N = NormModel::from_reference(name, A.rank());
    const auto rep = oracle::submetry_gap(A, N, samples, mix(cfg.seed, 60), opts);
    pass = pass && rep.min_gap >= -1e-3 && rep.max_projection_rel_err <= 0.01;
    per_norm[name] = {{"min_gap", rep.min_gap},
                      {"max_projection_rel_err", rep.max_projection_rel_err}};
  }
  CheckResult res;
  res.id = "criterion-6-submetry";
  res.pass = pass;
  res.details = {{"samples_per_norm", samples}, {"gap_tol", -1e-3},
                 {"projection_rel_tol", 0.01}, {"oracle_steps", 64},
                 {"restarts", opts.restarts}, {"norms", per_norm}};
  return res;
}

CheckResult criterion_dichotomy(const SuiteConfig& cfg) {
  const bool full = cfg.profile == "full";
  const auto A = StepTwoAlgebra::heisenberg(1);
  const auto euclid = NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2));
  const auto opts = oracle_opts(cfg, 64, full ? 16 : 4, 7);
  const double dt = 1e-3;
  json details;

  // (a) A circle extremal past its closing time is beaten by the oracle; the
  // window 0.9 * 2*pi covers 1.8 periods of the curvature-2 circle.
  Covector a0(2);
  a0 << 1.0, 0.0;
  VerticalVector b2(1);
  b2 << 2.0;
  const double Tcirc = 0.9 * 2.0 * M_PI;
  const auto circ = integrate_extremal(A, euclid, a0, b2, identity(A), Tcirc, dt);
  const bool circle_beaten = !oracle::is_geodesic_segment(
      A, euclid, circ.trajectory, 0, circ.trajectory.points.size() - 1, 0.02, opts);
  details["circle"] = {{"b", 2.0}, {"window", Tcirc}, {"rel_tol", 0.02},
                       {"failed_geodesy", circle_beaten}};

  // Straight lines stay unbeaten.
  VerticalVector b0 = VerticalVector::Zero(1);
  const double Tline = full ? 20.0 : 10.0;
  const auto line = integrate_extremal(A, euclid, a0, b0, identity(A), Tline, dt);
  const bool line_ok = oracle::is_geodesic_segment(
      A, euclid, line.trajectory, 0, line.trajectory.points.size() - 1, 0.01, opts);
  details["line"] = {{"window", Tline}, {"rel_tol", 0.01}, {"passed_geodesy", line_ok}};

  // (b) The flat-direction sine lift for the sup norm stays unbeaten on all
  // dyadic windows and is not affine.
  const auto linf = NormModel::linf(2);
  const double Tsine = 4.0 * M_PI;
  const auto sine = sample_control(
      [](double t) {
        Eigen::VectorXd u(2);
        u << 1.0, std::cos(t);
        return u;
      },
      dt, Tsine);
  const auto sine_traj = develop(A, identity(A), sine);
  bool sine_ok = true;
  json windows = json::array();
  const int depth = full ? 2 : 1;
  for (const auto& [i, j] : dyadic_windows(sine.samples.size(), depth)) {
    const bool ok = oracle::is_geodesic_segment(A, linf, sine_traj, i, j, 0.01, opts);
    windows.push_back({{"from", dt * static_cast<double>(i)},
                       {"to", dt * static_cast<double>(j)},
                       {"passed_geodesy", ok}});
    sine_ok = sine_ok && ok;
  }
  const auto aff = affinity_detector(sine);
  details["sine_lift"] = {{"norm", "linf"}, {"rel_tol", 0.01}, {"windows", windows},
                          {"affine", aff.is_affine}};

  CheckResult res;
  res.id = "criterion-7-dichotomy";
  res.pass = circle_beaten && line_ok && sine_ok && !aff.is_affine;
  res.details = details;
  return res;
}

CheckResult criterion_sublinear(const SuiteConfig& cfg) {
  const bool full = cfg.profile == "full";
  const auto A = StepTwoAlgebra::heisenberg(1);
  const auto N = NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2));
  const auto opts = oracle_opts(cfg, 64, full ? 6 : 2, 8);
  std::vector<double> ladder;
  for (double t = 1.0; t <= 64.5; t *= full ? 2.0 : 4.0) ladder.push_back(t);

  Eigen::VectorXd e1 = Eigen::VectorXd::Unit(2, 0);
  Eigen::VectorXd e2 = Eigen::VectorXd::Unit(2, 1);
  GroupPoint h = identity(A);
  h.z[0] = 1.0;

  // Parallel lines: ratio * t stays pinned at d(e, h).
  const auto same = oracle::sublinear_ratio(A, N, identity(A), h, e1, e1, ladder, opts);
  double rt_min = 1e300, rt_max = 0.0;
  json same_json = json::array();
  for (const auto& p : same) {
    rt_min = std::min(rt_min, p.ratio * p.t);
    rt_max = std::max(rt_max, p.ratio * p.t);
    same_json.push_back({{"t", p.t}, {"ratio", p.ratio}});
  }
  const bool same_ok = rt_max / rt_min <= 1.05 && std::isfinite(rt_max);

  // Diverging lines: the ratio stabilizes at d(exp X, exp Y).
  const auto diff =
      oracle::sublinear_ratio(A, N, identity(A), identity(A), e1, e2, ladder, opts);
  const auto dist = oracle::sf_distance_upper(A, N, exp_horizontal(A, e1),
                                              exp_horizontal(A, e2), opts);
  const double final_ratio = diff.back().ratio;
  const bool diff_ok = std::abs(final_ratio - dist.value) <= 0.05 * dist.value;

  CheckResult res;
  res.id = "criterion-8-sublinear-ratios";
  res.pass = same_ok && diff_ok;
  res.details = {{"parallel", same_json},
                 {"parallel_fitted_C", rt_max},
                 {"parallel_Ct_spread", rt_max / rt_min},
                 {"diverging_final_ratio", final_ratio},
                 {"diverging_reference", dist.value},
                 {"rel_tol", 0.05}};
  return res;
}

// ---------------------------------------------------------------------------
// Invariant checks
// ---------------------------------------------------------------------------

std::vector<NormModel> norm_zoo(int dim) {
  std::vector<NormModel> zoo;
  zoo.push_back(NormModel::euclidean(Eigen::MatrixXd::Identity(dim, dim)));
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(dim, dim);
  M(0, 0) = 2.0;
  if (dim > 1) M(0, 1) = M(1, 0) = 0.3;
  zoo.push_back(NormModel::euclidean(M));
  zoo.push_back(NormModel::lp(dim, 4.0));
  zoo.push_back(NormModel::lp(dim, 1.5));
  zoo.push_back(NormModel::linf(dim));
  zoo.push_back(NormModel::l1(dim));
  if (dim == 2) {
    zoo.push_back(NormModel::polyhedral(
        {(Eigen::VectorXd(2) << 1, 1).finished(), (Eigen::VectorXd(2) << 1, -1).finished(),
         (Eigen::VectorXd(2) << -1, 1).finished(),
         (Eigen::VectorXd(2) << -1, -1).finished()}));
  }
  return zoo;
}

CheckResult invariant_norms(const SuiteConfig& cfg) {
  std::mt19937_64 rng(mix(cfg.seed, 20));
  double worst_bound = 0.0, worst_pairing = 0.0, worst_roundtrip = 0.0;
  bool contains_ok = true, continuity_ok = true;
  for (const auto& N : norm_zoo(2)) {
    for (int s = 0; s < 50; ++s) {
      const Eigen::VectorXd Y = gaussian_vec(rng, 2);
      const Eigen::VectorXd X = gaussian_vec(rng, 2);
      if (N.norm(Y) < 1e-9) continue;
      const Covector a = N.subdifferential_at(Y);
      worst_bound =
          std::max(worst_bound, std::abs(a.dot(X)) - N.norm(X) * N.norm(Y));
      worst_pairing =
          std::max(worst_pairing, std::abs(a.dot(Y) - N.norm(Y) * N.norm(Y)));
      contains_ok = contains_ok && N.subdiff_contains(Y, a, 1e-9);
      if (N.strictly_convex()) {
        worst_roundtrip = std::max(
            worst_roundtrip,
            (N.legendre_feedback(a).selected - Y).cwiseAbs().maxCoeff());
      }
      // Subdifferentials follow converging arguments to the limit.
      const Eigen::VectorXd Yk = Y + gaussian_vec(rng, 2) / 1e7;
      continuity_ok =
          continuity_ok && N.subdiff_contains(Y, N.subdifferential_at(Yk), 1e-5);
    }
  }
  // Maximized-value identity against a polar grid brute force.
  double worst_value_gap = 0.0;
  for (const auto& N : norm_zoo(2)) {
    const Eigen::VectorXd a = gaussian_vec(rng, 2);
    double brute = -1e300;
    for (int ia = 0; ia < 720; ++ia) {
      const double phi = 2.0 * M_PI * ia / 720.0;
      Eigen::VectorXd d(2);
      d << std::cos(phi), std::sin(phi);
      for (double radius = 0.0; radius <= 4.0; radius += 0.005) {
        const Eigen::VectorXd v = radius * d;
        brute = std::max(brute, a.dot(v) - 0.5 * N.norm(v) * N.norm(v));
      }
    }
    const double closed = 0.5 * N.dual_norm(a) * N.dual_norm(a);
    worst_value_gap = std::max(worst_value_gap, std::abs(brute - closed));
  }
  CheckResult res;
  res.id = "invariant-norms-subdifferentials";
  res.pass = worst_bound <= 1e-9 && worst_pairing <= 1e-9 && contains_ok &&
             continuity_ok && worst_roundtrip <= 1e-9 && worst_value_gap <= 5e-4;
  res.details = {{"max_pairing_bound_excess", worst_bound},
                 {"max_pairing_identity_error", worst_pairing},
                 {"max_legendre_roundtrip_error", worst_roundtrip},
                 {"max_value_identity_gap_vs_grid", worst_value_gap},
                 {"certificates_ok", contains_ok},
                 {"continuity_ok", continuity_ok}};
  return res;
}

CheckResult invariant_control(const SuiteConfig& cfg) {
  std::mt19937_64 rng(mix(cfg.seed, 21));
  const auto A = StepTwoAlgebra::free_step2(3);
  const auto u = sample_control(
      [&](double t) {
        Eigen::VectorXd v(3);
        v << std::cos(t), std::sin(2.0 * t), 0.3 * t;
        return v;
      },
      1.0 / 64, 2.0);
  const GroupPoint g = random_point(rng, A);
  const auto t0 = develop(A, identity(A), u);
  const auto t1 = develop(A, g, u);
  double worst_left = 0.0;
  for (size_t k = 0; k < t0.points.size(); ++k) {
    const GroupPoint moved = multiply(A, g, t0.points[k]);
    worst_left = std::max(worst_left, (moved.x - t1.points[k].x).cwiseAbs().maxCoeff());
    worst_left = std::max(worst_left, (moved.z - t1.points[k].z).cwiseAbs().maxCoeff());
  }
  // Dilating the control is the same curve viewed through the dilation.
  const double lam = 2.0;
  const auto ul = dilate_control(u, lam);
  const auto tl = develop(A, identity(A), ul);
  double worst_dil = 0.0;
  for (size_t k = 0; k < tl.points.size(); ++k) {
    const GroupPoint expect = dilate(A, 1.0 / lam, t0.points[k]);
    worst_dil = std::max(worst_dil, (expect.x - tl.points[k].x).cwiseAbs().maxCoeff());
    worst_dil = std::max(worst_dil, (expect.z - tl.points[k].z).cwiseAbs().maxCoeff());
  }
  CheckResult res;
  res.id = "invariant-control-development";
  res.pass = worst_left <= 1e-12 && worst_dil <= 1e-9;
  res.details = {{"max_left_invariance_error", worst_left},
                 {"max_dilation_identity_error", worst_dil}};
  return res;
}

CheckResult invariant_pmp(const SuiteConfig& cfg) {
  const auto configs = random_run_configs(3, mix(cfg.seed, 22));
  bool skew_exact = true;
  double worst_resid = 0.0;
  for (const auto& rc : configs) {
    const BForm B = build_B(rc.algebra, rc.b);
    skew_exact = skew_exact && (B.B + B.B.transpose()).cwiseAbs().maxCoeff() == 0.0;
  }
  // Euclidean reduction: the recorded control solves the linear control ODE.
  const auto A = StepTwoAlgebra::heisenberg(1);
  const auto N = NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2));
  Covector a0(2);
  a0 << 1.0, 0.0;
  VerticalVector b(1);
  b << 1.0;
  const double dt = 1e-3;
  const auto run = integrate_extremal(A, N, a0, b, identity(A), 5.0, dt);
  const BForm B = build_B(A, b);
  for (size_t k = 1; k + 1 < run.control.samples.size(); ++k) {
    const Eigen::VectorXd du =
        (run.control.samples[k + 1] - run.control.samples[k - 1]) / (2.0 * dt);
    worst_resid = std::max(
        worst_resid,
        (du - B.B.transpose() * run.control.samples[k]).cwiseAbs().maxCoeff());
  }
  const auto resid = residual_check(A, N, run.control, run.states, run.b, 1e-2);
  CheckResult res;
  res.id = "invariant-pmp-structure";
  res.pass = skew_exact && worst_resid <= 1.0 * dt * dt + 1e-12 &&
             resid.extremal_within_tol;
  res.details = {{"skew_exact", skew_exact},
                 {"max_linear_ode_residual", worst_resid},
                 {"linear_ode_tol", 1.0 * dt * dt},
                 {"ode_residual", resid.max_ode_residual},
                 {"subdiff_violation", resid.max_subdiff_violation}};
  return res;
}

CheckResult invariant_asymptotics(const SuiteConfig& cfg) {
  (void)cfg;
  const double dt = 1e-3;
  const auto u = circle_control(dt, 32.0);
  const auto A = StepTwoAlgebra::heisenberg(1);
  VerticalVector b(1);
  b << 1.0;
  const BForm B = build_B(A, b);

  // Difference-of-averages identity on grid-aligned windows (exact).
  const double lam = 4.0;
  const Eigen::VectorXd direct = average(dilate_control(u, lam), 1.0, 2.0);
  const Eigen::VectorXd composed =
      2.0 * average(u, 0.0, 2.0 * lam) - 1.0 * average(u, 0.0, 1.0 * lam);
  const double diff_avg_err = (direct - composed).cwiseAbs().maxCoeff();

  // Quantitative decay along a recorded extremal.
  const auto N = NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2));
  Covector a0(2);
  a0 << 1.0, 0.0;
  const auto run = integrate_extremal(A, N, a0, b, identity(A), 32.0, dt);
  Eigen::VectorXd X(2);
  X << 1.0, 0.0;
  double worst_gap = -1e9;
  for (double T : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
    const double value = std::abs(B(average(run.control, 0.0, T), X));
    const size_t kT = static_cast<size_t>(std::llround(T / dt));
    const double bound = (std::abs(run.states[kT].a.dot(X)) +
                          std::abs(run.states[0].a.dot(X))) / T;
    worst_gap = std::max(worst_gap, value - bound - 10.0 * dt);
  }

  // Affinity of a line links back to the kernel of B.
  const auto line = sample_control(
      [](double) { return (Eigen::VectorXd(2) << 1.0, 0.0).finished(); }, dt, 4.0);
  const auto aff_line = affinity_detector(line);
  const auto aff_circle = affinity_detector(u);

  CheckResult res;
  res.id = "invariant-asymptotics";
  res.pass = diff_avg_err <= 1e-12 && worst_gap <= 0.0 && aff_line.is_affine &&
             !aff_circle.is_affine;
  res.details = {{"difference_of_averages_error", diff_avg_err},
                 {"max_decay_bound_gap", worst_gap},
                 {"line_affine", aff_line.is_affine},
                 {"circle_affine", aff_circle.is_affine}};
  return res;
}

CheckResult invariant_oracle(const SuiteConfig& cfg) {
  const auto A = StepTwoAlgebra::heisenberg(1);
  const auto N = NormModel::euclidean(Eigen::MatrixXd::Identity(2, 2));
  const auto opts = oracle_opts(cfg, 48, 2, 23);
  std::mt19937_64 rng(mix(cfg.seed, 23));
  bool ok = true;
  json samples = json::array();
  for (int s = 0; s < 2; ++s) {
    const GroupPoint g = random_point(rng, A), h = random_point(rng, A);
    const auto fwd = oracle::sf_distance_upper(A, N, g, h, opts);
    const auto bwd = oracle::sf_distance_upper(A, N, h, g, opts);
    const double scale = std::max(1.0, fwd.value);
    const bool sym = std::abs(fwd.value - bwd.value) <= 0.03 * scale;
    const auto dg = oracle::sf_distance_upper(A, N, identity(A), g, opts);
    const auto dgh = oracle::sf_distance_upper(
        A, N, identity(A), dilate(A, 2.0, g), opts);
    const bool homog = std::abs(dgh.value - 2.0 * dg.value) <= 0.04 * dg.value;
    const auto dh = oracle::sf_distance_upper(A, N, identity(A), h, opts);
    const auto dgh2 = oracle::sf_distance_upper(A, N, g, h, opts);
    const auto dfull = oracle::sf_distance_upper(A, N, identity(A), h, opts);
    const bool triangle = dfull.value <= dg.value + dgh2.value + 0.03 * scale;
    ok = ok && sym && homog && triangle && fwd.feasible;
    samples.push_back({{"symmetry_ok", sym}, {"homogeneity_ok", homog},
                       {"triangle_ok", triangle},
                       {"d", fwd.value}, {"d_reverse", bwd.value},
                       {"d_dilated", dgh.value}, {"d_h", dh.value}});
  }
  CheckResult res;
  res.id = "invariant-oracle-metric-axioms";
  res.pass = ok;
  res.details = {{"samples", samples}, {"oracle_steps", opts.n_steps}};
  return res;
}

}  // namespace

std::optional<FlatDirection> detect_flat_direction(const NormModel& N) {
  if (N.strictly_convex()) return std::nullopt;
  const int d = N.dim();
  switch (N.kind()) {
    case NormKind::linf: {
      FlatDirection f;
      f.X = Eigen::VectorXd::Unit(d, 0);
      f.Y = Eigen::VectorXd::Unit(d, 1);
      f.eps = 1.0;
      return f;
    }
    case NormKind::l1: {
      FlatDirection f;
      f.X = 0.5 * (Eigen::VectorXd::Unit(d, 0) + Eigen::VectorXd::Unit(d, 1));
      f.Y = 0.5 * (Eigen::VectorXd::Unit(d, 0) - Eigen::VectorXd::Unit(d, 1));
      f.eps = 1.0;
      return f;
    }
    case NormKind::polyhedral: {
      // Midpoint probing over vertex pairs: gauge 1 at the midpoint certifies
      // the whole segment lies on the sphere.
      const auto& verts = N.vertices();
      for (size_t i = 0; i < verts.size(); ++i) {
        for (size_t j = i + 1; j < verts.size(); ++j) {
          const Eigen::VectorXd mid = 0.5 * (verts[i] + verts[j]);
          if (mid.cwiseAbs().maxCoeff() < 1e-12) continue;
          if (N.norm(mid) >= 1.0 - 1e-9) {
            FlatDirection f;
            f.X = mid;
            f.Y = 0.5 * (verts[i] - verts[j]);
            f.eps = 1.0;
            return f;
          }
        }
      }
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

nlohmann::json run_counterexample(const StepTwoAlgebra& A, NormModel N,
                                  std::optional<FlatDirection> flat, double T,
                                  double dt, double rel_tol,
                                  const OracleOptions& opts) {
  if (N.strictly_convex()) {
    throw std::invalid_argument(
        "counterexample requires a norm that is not strictly convex");
  }
  if (!flat) flat = detect_flat_direction(N);
  if (!flat) {
    throw std::invalid_argument("no flat direction found for this norm");
  }
  const auto& f = *flat;
  const auto u = sample_control(
      [&](double t) { return HorizontalVector(f.X + f.eps * std::cos(t) * f.Y); },
      dt, T);
  const auto traj = develop(A, identity(A), u);
  const auto aff = affinity_detector(u);
  bool all_ok = true;
  json windows = json::array();
  for (const auto& [i, j] : dyadic_windows(u.samples.size(), 2)) {
    const bool ok = oracle::is_geodesic_segment(A, N, traj, i, j, rel_tol, opts);
    windows.push_back({{"from", dt * static_cast<double>(i)},
                       {"to", dt * static_cast<double>(j)},
                       {"passed_geodesy", ok}});
    all_ok = all_ok && ok;
  }
  return {{"X", vec_json(f.X)},
          {"Y", vec_json(f.Y)},
          {"eps", f.eps},
          {"T", T},
          {"dt", dt},
          {"rel_tol", rel_tol},
          {"resolution", opts.n_steps},
          {"restarts", opts.restarts},
          {"windows", windows},
          {"affine", aff.is_affine},
          {"verified", all_ok && !aff.is_affine},
          {"summary", all_ok && !aff.is_affine
                          ? "non-affine infinite-geodesic candidate verified at this resolution"
                          : "verification failed"}};
}

nlohmann::json run_dichotomy_suite(const StepTwoAlgebra& A,
                                   const std::vector<NormModel>& norms,
                                   const OracleOptions& opts) {
  json rows = json::array();
  bool all_ok = true;
  const double dt = 1e-3;
  for (const auto& N : norms) {
    json row;
    row["norm"] = N.to_json();
    if (N.strictly_convex()) {
      // Bent extremals eventually fail geodesy; lines never do.
      Covector a0 = Eigen::VectorXd::Zero(A.rank());
      a0[0] = 1.0;
      a0 /= N.dual_norm(a0);
      bool bent_fails = true;
      json sweeps = json::array();
      for (double beta : {1.0, 2.0}) {
        VerticalVector b = Eigen::VectorXd::Zero(A.vdim());
        b[0] = beta;
        const double T = 20.0;
        const auto run = integrate_extremal(A, N, a0, b, identity(A), T, dt);
        const bool beaten = !oracle::is_geodesic_segment(
            A, N, run.trajectory, 0, run.trajectory.points.size() - 1, 0.02, opts);
        sweeps.push_back({{"b", beta}, {"window", T}, {"failed_geodesy", beaten}});
        bent_fails = bent_fails && beaten;
      }
      VerticalVector b0 = Eigen::VectorXd::Zero(A.vdim());
      const auto lin = integrate_extremal(A, N, a0, b0, identity(A), 20.0, dt);
      const bool line_ok = oracle::is_geodesic_segment(
          A, N, lin.trajectory, 0, lin.trajectory.points.size() - 1, 0.01, opts);
      row["kind"] = "strictly_convex";
      row["bent_extremals"] = sweeps;
      row["line_passed"] = line_ok;
      row["ok"] = bent_fails && line_ok;
    } else {
      const auto rep = run_counterexample(A, N, std::nullopt, 4.0 * M_PI, dt, 0.01, opts);
      row["kind"] = "not_strictly_convex";
      row["counterexample"] = rep;
      row["ok"] = rep.at("verified").get<bool>();
    }
    all_ok = all_ok && row["ok"].get<bool>();
    rows.push_back(row);
  }
  return {{"norms", rows}, {"ok", all_ok}};
}

namespace {

template <typename Fn>
CheckResult timed(Fn&& fn, const SuiteConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult c = fn(cfg);
  c.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

}  // namespace

std::vector<CheckResult> run_acceptance_criteria(const SuiteConfig& cfg) {
  std::vector<CheckResult> out;
  out.push_back(timed(criterion_algebra_laws, cfg));
  out.push_back(timed(criterion_pmp_closed_form, cfg));
  out.push_back(timed(criterion_conservation, cfg));
  out.push_back(timed(criterion_average_decay, cfg));
  out.push_back(timed(criterion_kernel_evidence, cfg));
  out.push_back(timed(criterion_submetry, cfg));
  out.push_back(timed(criterion_dichotomy, cfg));
  out.push_back(timed(criterion_sublinear, cfg));
  return out;
}

std::vector<CheckResult> run_invariant_checks(const SuiteConfig& cfg) {
  std::vector<CheckResult> out;
  out.push_back(timed(invariant_norms, cfg));
  out.push_back(timed(invariant_control, cfg));
  out.push_back(timed(invariant_pmp, cfg));
  out.push_back(timed(invariant_asymptotics, cfg));
  out.push_back(timed(invariant_oracle, cfg));
  return out;
}

nlohmann::json run_suite(const SuiteConfig& cfg) {
  json checks = json::array();
  bool pass = true;
  for (const auto& c : run_invariant_checks(cfg)) {
    checks.push_back({{"id", c.id}, {"pass", c.pass}, {"details", c.details}});
    pass = pass && c.pass;
  }
  for (const auto& c : run_acceptance_criteria(cfg)) {
    checks.push_back({{"id", c.id}, {"pass", c.pass}, {"details", c.details}});
    pass = pass && c.pass;
  }
  return {{"version", kToolVersion},
          {"profile", cfg.profile},
          {"seed", cfg.seed},
          {"checks", checks},
          {"pass", pass}};
}

nlohmann::json run_experiment(const nlohmann::json& spec) {
  const std::string kind = spec.at("kind").get<std::string>();
  const std::uint64_t seed = spec.value("seed", std::uint64_t{0});
  json report;
  report["spec"] = spec;
  report["version"] = kToolVersion;

  const std::string out_dir = spec.value("out_dir", std::string{});
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const json params = spec.value("params", json::object());

  auto opts_from = [&](int def_steps, int def_restarts, std::uint64_t salt) {
    OracleOptions o;
    o.n_steps = params.value("n_steps", def_steps);
    o.restarts = params.value("restarts", def_restarts);
    o.seed = mix(seed, salt);
    return o;
  };

  if (kind == "suite") {
    SuiteConfig cfg;
    cfg.profile = params.value("profile", std::string("quick"));
    cfg.seed = seed;
    report = run_suite(cfg);
    report["spec"] = spec;
    if (!out_dir.empty()) {
      std::ofstream f(out_dir + "/suite_report.json", std::ios::binary);
      f << report.dump(2) << '\n';
    }
    return report;
  }

  const StepTwoAlgebra A = parse_group(spec);

  if (kind == "extremal" || kind == "decay" || kind == "blowdown") {
    NormModel N = parse_norm(spec, A.rank());
    const Covector a0 = json_vec(params.at("a0"));
    const VerticalVector b = json_vec(params.at("b"));
    const double T = params.value("T", 10.0);
    const double dt = params.value("dt", 1e-3);
    GroupPoint start = identity(A);
    if (params.contains("start")) start = parse_point(A, params.at("start"));
    if (params.contains("selection")) {
      json nj = N.to_json();
      nj["selection"] = params.at("selection");
      if (params.contains("fixed")) nj["fixed"] = params.at("fixed");
      N = NormModel::from_json(nj, A.rank());
    }
    const auto run = integrate_extremal(A, N, a0, b, start, T, dt);
    const BForm B = build_B(A, b);
    const double tol = params.value("tol", 1e-2);
    const auto resid = residual_check(A, N, run.control, run.states, run.b, tol);
    const auto cons = conserved_quantities(N, B, run.states, run.control);
    report["tolerances"] = {{"residual_tol", tol}};
    report["residuals"] = {{"ode", resid.max_ode_residual},
                           {"subdifferential", resid.max_subdiff_violation},
                           {"vertical_drift", resid.vertical_drift},
                           {"extremal_within_tol", resid.extremal_within_tol},
                           {"violations", resid.violations}};
    report["conservation"] = {{"dual_norm_drift", cons.dual_norm_drift},
                              {"pairing_residual", cons.pairing_residual},
                              {"kernel_drifts", cons.kernel_drifts},
                              {"kernel_dim", cons.kernel.cols()}};
    report["selected_extremal"] = run.selected_extremal;
    if (!out_dir.empty()) {
      write_csv(run.trajectory, out_dir + "/trajectory.csv");
      write_csv(run.control, out_dir + "/control.csv");
      write_states_csv(run, out_dir + "/states.csv");
    }
    if (kind == "decay") {
      std::vector<double> ladder;
      if (params.contains("ladder")) {
        for (const auto& t : params.at("ladder")) ladder.push_back(t.get<double>());
      } else {
        for (double t = 1.0; t <= T + 0.5; t *= 2.0) ladder.push_back(t);
      }
      Eigen::VectorXd X = params.contains("probe") ? json_vec(params.at("probe"))
                                                   : Eigen::VectorXd::Unit(A.rank(), 0);
      X /= N.norm(X);
      const auto prof = average_decay_profile(run.control, B, X, ladder);
      report["decay"] = {{"T", prof.horizons}, {"value", prof.values},
                         {"fitted_C", prof.fitted_C}, {"probe", vec_json(prof.probe)}};
      if (!out_dir.empty()) write_csv(prof, out_dir + "/decay.csv");
    }
    if (kind == "blowdown") {
      std::vector<double> lambdas;
      for (const auto& l : params.value("lambdas", json::array({1.0, 2.0, 4.0, 8.0}))) {
        lambdas.push_back(l.get<double>());
      }
      const double window = params.value("window", 1.0);
      const auto sigs = blowdown_samples(run.control, lambdas, window);
      json avgs = json::array();
      for (size_t i = 0; i < sigs.size(); ++i) {
        avgs.push_back({{"lambda", lambdas[i]},
                        {"window_average", vec_json(average(sigs[i], 0.0, window))}});
      }
      json dists = json::array();
      for (size_t i = 0; i + 1 < sigs.size(); ++i) {
        dists.push_back({{"lambda_low", lambdas[i]}, {"lambda_high", lambdas[i + 1]},
                         {"l2_distance", l2_distance(sigs[i], sigs[i + 1], window)}});
      }
      const double tol = params.value("tol", 1e-2);
      const auto kmr = kernel_membership_check(run.control, B, lambdas, window, tol);
      report["blowdown"] = {{"window", window}, {"averages", avgs},
                            {"pairwise_l2", dists},
                            {"kernel_membership",
                             {{"max_B_avg", kmr.max_B_avg},
                              {"consistent_evidence", kmr.consistent},
                              {"tol", kmr.tol}}}};
    }
    return report;
  }

  if (kind == "counterexample") {
    NormModel N = parse_norm(spec, A.rank());
    std::optional<FlatDirection> flat;
    if (params.contains("X") && params.contains("Y")) {
      FlatDirection f;
      f.X = json_vec(params.at("X"));
      f.Y = json_vec(params.at("Y"));
      f.eps = params.value("eps", 1.0);
      flat = f;
    }
    report["counterexample"] =
        run_counterexample(A, N, flat, params.value("T", 4.0 * M_PI),
                           params.value("dt", 1e-3), params.value("rel_tol", 0.01),
                           opts_from(64, 8, 101));
    return report;
  }

  if (kind == "distance") {
    NormModel N = parse_norm(spec, A.rank());
    const GroupPoint g = params.contains("g") ? parse_point(A, params.at("g")) : identity(A);
    const GroupPoint h = parse_point(A, params.at("h"));
    const auto opts = opts_from(64, 4, 106);
    const auto res = oracle::sf_distance_upper(A, N, g, h, opts);
    report["distance"] = {{"value", res.value},
                          {"n_steps", opts.n_steps},
                          {"restarts", opts.restarts},
                          {"seed", opts.seed},
                          {"feasible", res.feasible},
                          {"endpoint_mismatch", res.endpoint_mismatch},
                          {"best_restart", res.best_restart}};
    if (!out_dir.empty()) {
      write_csv(res.control, out_dir + "/oracle_control.csv");
      report["distance"]["control_csv"] = "oracle_control.csv";
    }
    return report;
  }

  if (kind == "submetry") {
    NormModel N = parse_norm(spec, A.rank());
    const int samples = params.value("samples", 20);
    const auto rep =
        oracle::submetry_gap(A, N, samples, mix(seed, 102), opts_from(64, 4, 103));
    report["submetry"] = {{"samples", samples},
                          {"min_gap", rep.min_gap},
                          {"max_projection_rel_err", rep.max_projection_rel_err}};
    return report;
  }

  if (kind == "sublinear") {
    NormModel N = parse_norm(spec, A.rank());
    const GroupPoint g = params.contains("g") ? parse_point(A, params.at("g")) : identity(A);
    const GroupPoint h = params.contains("h") ? parse_point(A, params.at("h")) : identity(A);
    std::vector<double> ladder;
    for (const auto& t : params.value("ladder", json::array({1.0, 2.0, 4.0, 8.0, 16.0}))) {
      ladder.push_back(t.get<double>());
    }
    const auto pts = oracle::sublinear_ratio(A, N, g, h, json_vec(params.at("X")),
                                             json_vec(params.at("Y")), ladder,
                                             opts_from(64, 4, 104));
    json rows = json::array();
    for (const auto& p : pts) rows.push_back({{"t", p.t}, {"ratio", p.ratio}});
    report["sublinear"] = rows;
    return report;
  }

  if (kind == "dichotomy") {
    std::vector<NormModel> norms;
    if (params.contains("norms")) {
      for (const auto& n : params.at("norms")) {
        norms.push_back(n.is_string()
                            ? NormModel::from_reference(n.get<std::string>(), A.rank())
                            : NormModel::from_json(n, A.rank()));
      }
    } else {
      norms.push_back(NormModel::euclidean(Eigen::MatrixXd::Identity(A.rank(), A.rank())));
      norms.push_back(NormModel::lp(A.rank(), 4.0));
      norms.push_back(NormModel::linf(A.rank()));
      norms.push_back(NormModel::l1(A.rank()));
    }
    report["dichotomy"] = run_dichotomy_suite(A, norms, opts_from(64, 8, 105));
    if (!out_dir.empty()) {
      std::ofstream f(out_dir + "/dichotomy_report.json", std::ios::binary);
      f << report.dump(2) << '\n';
    }
    return report;
  }

  throw std::invalid_argument("unknown experiment kind: " + kind);
}

}  // namespace carnot::cli

#include "carnot/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace carnot::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Normalized transcription problem: identity to `target`, n cells on [0,1].
class Transcription {
 public:
  Transcription(const StepTwoAlgebra& A, const NormModel& N, GroupPoint target, int n)
      : A_(A), N_(N), target_(std::move(target)), K_(n), dt_(1.0 / n) {}

  int vars() const { return K_ * A_.rank(); }
  int K() const { return K_; }
  double dt() const { return dt_; }
  const StepTwoAlgebra& algebra() const { return A_; }
  const NormModel& norm_model() const { return N_; }

  Eigen::VectorXd constraint(const Eigen::VectorXd& u) const {
    const int r = A_.rank(), m = A_.vdim();
    Eigen::VectorXd S = Eigen::VectorXd::Zero(r);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < K_; ++k) {
      const auto uk = u.segment(k * r, r);
      z += 0.5 * dt_ * dt_ * A_.bracket(S, uk);
      S += uk;
    }
    Eigen::VectorXd c(r + m);
    c.head(r) = dt_ * S - target_.x;
    c.tail(m) = z - target_.z;
    return c;
  }

  Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& u) const {
    const int r = A_.rank(), m = A_.vdim();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(r + m, vars());
    Eigen::VectorXd total = Eigen::VectorXd::Zero(r);
    for (int k = 0; k < K_; ++k) total += u.segment(k * r, r);
    Eigen::VectorXd prefix = Eigen::VectorXd::Zero(r);
    for (int k = 0; k < K_; ++k) {
      const auto uk = u.segment(k * r, r);
      const Eigen::VectorXd suffix = total - prefix - uk;
      for (int i = 0; i < r; ++i) J(i, k * r + i) = dt_;
      for (int km = 0; km < m; ++km) {
        const auto& C = A_.structure_matrix(km);
        J.row(r + km).segment(k * r, r) =
            (0.5 * dt_ * dt_) * (C * (suffix - prefix)).transpose();
      }
      prefix += uk;
    }
    return J;
  }

  // Augmented objective: energy + Tikhonov + y'c + (mu/2)|c|^2.
  double value_and_gradient(const Eigen::VectorXd& u, const Eigen::VectorXd& y,
                            double mu, double eps, Eigen::VectorXd& grad) const {
    const int r = A_.rank(), m = A_.vdim();
    grad.setZero(vars());
    double J = 0.0;
    for (int k = 0; k < K_; ++k) {
      const Eigen::VectorXd uk = u.segment(k * r, r);
      const double nu = N_.norm(uk);
      J += 0.5 * dt_ * nu * nu + eps * dt_ * uk.squaredNorm();
      grad.segment(k * r, r) = dt_ * N_.subdifferential_at(uk) + 2.0 * eps * dt_ * uk;
    }
    const Eigen::VectorXd c = constraint(u);
    const Eigen::VectorXd w = y + mu * c;
    J += y.dot(c) + 0.5 * mu * c.squaredNorm();

    // J^T w added analytically: x-rows contribute dt * w_x to every cell;
    // z-row km contributes (dt^2/2) C_km (suffix - prefix) per cell.
    Eigen::MatrixXd Cw = Eigen::MatrixXd::Zero(r, r);
    for (int km = 0; km < m; ++km) Cw += w[r + km] * A_.structure_matrix(km);
    Eigen::VectorXd total = Eigen::VectorXd::Zero(r);
    for (int k = 0; k < K_; ++k) total += u.segment(k * r, r);
    Eigen::VectorXd prefix = Eigen::VectorXd::Zero(r);
    for (int k = 0; k < K_; ++k) {
      const Eigen::VectorXd uk = u.segment(k * r, r);
      const Eigen::VectorXd suffix = total - prefix - uk;
      grad.segment(k * r, r) +=
          dt_ * w.head(r) + (0.5 * dt_ * dt_) * (Cw * (suffix - prefix));
      prefix += uk;
    }
    return J;
  }

  double length(const Eigen::VectorXd& u) const {
    const int r = A_.rank();
    double L = 0.0;
    for (int k = 0; k < K_; ++k) L += dt_ * N_.norm(u.segment(k * r, r));
    return L;
  }

 private:
  const StepTwoAlgebra& A_;
  const NormModel& N_;
  GroupPoint target_;
  int K_;
  double dt_;
};

// Limited-memory BFGS with Armijo backtracking.
void lbfgs_minimize(const Transcription& prob, const Eigen::VectorXd& y, double mu,
                    double eps, Eigen::VectorXd& x, int max_iters) {
  const int mem = 8;
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  Eigen::VectorXd g(x.size()), g_new(x.size());
  double f = prob.value_and_gradient(x, y, mu, eps, g);
  for (int iter = 0; iter < max_iters; ++iter) {
    if (g.norm() <= 1e-10 * std::max(1.0, std::abs(f))) break;
    Eigen::VectorXd d = -g;
    if (!S.empty()) {
      Eigen::VectorXd q = g;
      std::vector<double> alpha(S.size());
      for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
        alpha[i] = rho[i] * S[i].dot(q);
        q -= alpha[i] * Y[i];
      }
      q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
      for (size_t i = 0; i < S.size(); ++i) {
        const double beta = rho[i] * Y[i].dot(q);
        q += (alpha[i] - beta) * S[i];
      }
      d = -q;
    }
    if (d.dot(g) >= -1e-14 * d.norm() * g.norm()) d = -g;

    double step = 1.0;
    const double slope = d.dot(g);
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Eigen::VectorXd x_try = x + step * d;
      const double f_try = prob.value_and_gradient(x_try, y, mu, eps, g_new);
      if (f_try <= f + 1e-4 * step * slope) {
        const Eigen::VectorXd s = x_try - x;
        const Eigen::VectorXd dg = g_new - g;
        const double sy = s.dot(dg);
        if (sy > 1e-12 * s.norm() * dg.norm()) {
          S.push_back(s);
          Y.push_back(dg);
          rho.push_back(1.0 / sy);
          if (static_cast<int>(S.size()) > mem) {
            S.pop_front();
            Y.pop_front();
            rho.pop_front();
          }
        }
        x = x_try;
        f = f_try;
        g = g_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
}

// Subgradient descent with diminishing steps; keeps the best iterate.
void subgradient_minimize(const Transcription& prob, const Eigen::VectorXd& y,
                          double mu, double eps, Eigen::VectorXd& x, int iters) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd best = x;
  double best_f = prob.value_and_gradient(x, y, mu, eps, g);
  const double alpha0 = 0.25;
  for (int t = 1; t <= iters; ++t) {
    const double f = prob.value_and_gradient(x, y, mu, eps, g);
    if (f < best_f) {
      best_f = f;
      best = x;
    }
    const double gn = g.norm();
    if (gn <= 1e-12) break;
    x -= (alpha0 / std::sqrt(static_cast<double>(t))) * (g / gn);
  }
  Eigen::VectorXd gf(x.size());
  if (prob.value_and_gradient(x, y, mu, eps, gf) > best_f) x = best;
}

// Newton projection onto the endpoint manifold; the constraint is quadratic,
// so this converges to machine precision in a few steps.
bool restore_feasibility(const Transcription& prob, Eigen::VectorXd& u,
                         double target_tol) {
  for (int it = 0; it < 60; ++it) {
    const Eigen::VectorXd c = prob.constraint(u);
    if (c.norm() <= target_tol) return true;
    const Eigen::MatrixXd J = prob.constraint_jacobian(u);
    Eigen::MatrixXd JJt = J * J.transpose();
    const double damp = 1e-12 * (JJt.trace() / JJt.rows() + 1.0);
    JJt.diagonal().array() += damp;
    const Eigen::VectorXd delta = J.transpose() * JJt.ldlt().solve(-c);
    if (!delta.allFinite()) return false;
    u += delta;
  }
  return prob.constraint(u).norm() <= target_tol;
}

struct Candidate {
  double length = kInf;
  double mismatch = kInf;
  bool feasible = false;
  Eigen::VectorXd u;
};

Candidate solve_one(const Transcription& prob, Eigen::VectorXd u,
                    const OracleOptions& opts, bool smooth) {
  std::vector<double> mus = opts.penalty_schedule;
  if (mus.empty()) mus = {10.0, 1e2, 1e3, 1e4, 1e5, 1e5, 1e5, 1e6};
  Eigen::VectorXd y = Eigen::VectorXd::Zero(prob.constraint(u).size());
  double eps = 1e-2;
  for (size_t round = 0; round < mus.size(); ++round) {
    if (smooth) {
      lbfgs_minimize(prob, y, mus[round], eps, u, opts.max_inner_iterations);
    } else {
      subgradient_minimize(prob, y, mus[round], eps, u, opts.subgradient_iterations);
    }
    const Eigen::VectorXd c = prob.constraint(u);
    y += mus[round] * c;
    eps = std::max(eps * 0.1, 0.0);
    if (eps < 1e-6) eps = 0.0;
    if (round >= 4 && c.norm() < 0.1 * opts.endpoint_tol) break;
  }
  Candidate cand;
  restore_feasibility(prob, u, 1e-12);
  cand.mismatch = prob.constraint(u).norm();
  cand.feasible = cand.mismatch <= opts.endpoint_tol;
  cand.u = u;
  cand.length = prob.length(u);
  return cand;
}

// Deterministic loop-plus-line initialization: a closed loop in the
// coordinate plane with the strongest coupling to the dominant vertical
// target component, superposed with the straight line to the horizontal
// target. Gives the optimizer a basin near circle-type lifts.
Eigen::VectorXd initial_guess(const Transcription& prob, const GroupPoint& target,
                              int restart, std::uint64_t seed) {
  const auto& A = prob.algebra();
  const int r = A.rank(), K = prob.K();
  Eigen::VectorXd u(K * r);
  for (int k = 0; k < K; ++k) u.segment(k * r, r) = target.x;
  if (target.z.size() > 0 && target.z.cwiseAbs().maxCoeff() > 0.0) {
    int kz = 0;
    target.z.cwiseAbs().maxCoeff(&kz);
    const auto& C = A.structure_matrix(kz);
    int bi = 0, bj = 1;
    double bc = 0.0;
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j) {
        if (std::abs(C(i, j)) > std::abs(bc)) {
          bc = C(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (bc != 0.0) {
      // Signed area needed in the (bi,bj)-plane for one full loop.
      const double area = target.z[kz] / bc;
      const double radius = std::sqrt(std::abs(area) / M_PI);
      const double omega = 2.0 * M_PI * (area >= 0.0 ? 1.0 : -1.0);
      for (int k = 0; k < K; ++k) {
        const double t = (k + 0.5) / K;
        u[k * r + bi] += radius * std::abs(omega) * std::cos(omega * t);
        u[k * r + bj] += radius * std::abs(omega) * std::sin(omega * t);
      }
    }
  }
  if (restart > 0) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(restart)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sigma = 0.3 * (1.0 + 0.5 * restart);
    for (int i = 0; i < u.size(); ++i) u[i] += sigma * gauss(rng);
  }
  return u;
}

}  // namespace

int thread_cap(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CARNOT_SF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

ControlSignal recover_control(const StepTwoAlgebra& A, const Trajectory& traj) {
  if (traj.points.size() < 2) throw std::invalid_argument("recover_control: too few points");
  ControlSignal u;
  u.dt = traj.dt;
  u.samples.reserve(traj.points.size() - 1);
  for (size_t k = 0; k + 1 < traj.points.size(); ++k) {
    const GroupPoint step = multiply(A, inverse(A, traj.points[k]), traj.points[k + 1]);
    u.samples.push_back(step.x / traj.dt);
  }
  return u;
}

OracleResult sf_distance_upper(const StepTwoAlgebra& A, const NormModel& N,
                               const GroupPoint& g, const GroupPoint& h,
                               const OracleOptions& opts,
                               const ControlSignal* warm_start) {
  const int r = A.rank();
  if (opts.n_steps < 2) throw std::invalid_argument("oracle: n_steps must be >= 2");
  const GroupPoint p = multiply(A, inverse(A, g), h);

  const double sx = p.x.norm();
  const double sz = p.z.size() > 0 ? std::sqrt(p.z.norm()) : 0.0;
  const double scale = std::max(sx, sz);
  OracleResult res;
  if (scale < 1e-14) {
    res.value = 0.0;
    res.feasible = true;
    res.endpoint_mismatch = 0.0;
    res.best_restart = 0;
    res.control.dt = 1.0 / opts.n_steps;
    res.control.samples.assign(static_cast<size_t>(opts.n_steps),
                               Eigen::VectorXd::Zero(r));
    return res;
  }
  const GroupPoint target = dilate(A, 1.0 / scale, p);
  Transcription prob(A, N, target, opts.n_steps);
  const bool smooth =
      N.kind() == NormKind::euclidean || N.kind() == NormKind::lp;

  const int total = opts.restarts + (warm_start ? 1 : 0);
  std::vector<Candidate> cands(static_cast<size_t>(total));
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int idx = next.fetch_add(1);
      if (idx >= total) return;
      Eigen::VectorXd u0;
      if (warm_start && idx == 0) {
        u0.resize(prob.vars());
        for (int k = 0; k < prob.K(); ++k) {
          // warm start arrives in physical scale on [0,1]
          u0.segment(k * r, r) =
              warm_start->samples[static_cast<size_t>(k)] / scale;
        }
      } else {
        const int restart = warm_start ? idx - 1 : idx;
        u0 = initial_guess(prob, target, restart, opts.seed);
      }
      cands[static_cast<size_t>(idx)] = solve_one(prob, std::move(u0), opts, smooth);
    }
  };
  const int n_threads = std::min(thread_cap(opts.threads), total);
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  int best = -1;
  for (int i = 0; i < total; ++i) {
    const auto& c = cands[static_cast<size_t>(i)];
    if (!c.feasible) continue;
    if (best < 0 || c.length < cands[static_cast<size_t>(best)].length - 1e-15) best = i;
  }
  if (best < 0) {
    // Infeasible after the full schedule: report the least-violating attempt.
    int least = 0;
    for (int i = 1; i < total; ++i) {
      if (cands[static_cast<size_t>(i)].mismatch <
          cands[static_cast<size_t>(least)].mismatch) {
        least = i;
      }
    }
    best = least;
  }
  const auto& win = cands[static_cast<size_t>(best)];
  res.value = scale * win.length;
  res.feasible = win.feasible;
  res.endpoint_mismatch = win.mismatch;
  res.best_restart = warm_start ? best - 1 : best;
  res.control.dt = 1.0 / opts.n_steps;
  res.control.samples.resize(static_cast<size_t>(opts.n_steps));
  for (int k = 0; k < opts.n_steps; ++k) {
    res.control.samples[static_cast<size_t>(k)] = scale * win.u.segment(k * r, r);
  }
  return res;
}

bool is_geodesic_segment(const StepTwoAlgebra& A, const NormModel& N,
                         const Trajectory& traj, std::size_t i, std::size_t j,
                         double rel_tol, const OracleOptions& opts) {
  if (j >= traj.points.size() || i >= j) {
    throw std::out_of_range("is_geodesic_segment: bad indices");
  }
  const ControlSignal full = recover_control(A, traj);
  const double seg_time = traj.dt * static_cast<double>(j - i);
  double seg_length = 0.0;
  for (std::size_t k = i; k < j; ++k) seg_length += traj.dt * N.norm(full.samples[k]);

  // Segment control resampled onto the oracle grid over [0,1].
  ControlSignal warm;
  warm.dt = 1.0 / opts.n_steps;
  warm.samples.reserve(static_cast<size_t>(opts.n_steps));
  for (int q = 0; q < opts.n_steps; ++q) {
    const double t = traj.dt * static_cast<double>(i) +
                     (q + 0.5) * warm.dt * seg_time;
    warm.samples.push_back(seg_time * full.at(t));
  }
  const auto res =
      sf_distance_upper(A, N, traj.points[i], traj.points[j], opts, &warm);
  return res.value >= seg_length * (1.0 - rel_tol);
}

SubmetryGapReport submetry_gap(const StepTwoAlgebra& A, const NormModel& N,
                               int n_samples, std::uint64_t seed,
                               const OracleOptions& opts) {
  SubmetryGapReport rep;
  rep.min_gap = kInf;
  rep.samples = n_samples;
  std::mt19937_64 rng(mix_seed(seed, 0xABCDEF));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> rad(0.7, 1.5);
  const GroupPoint e = identity(A);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd X(A.rank());
    for (int i = 0; i < X.size(); ++i) X[i] = gauss(rng);
    X *= rad(rng) / std::max(N.norm(X), 1e-12);
    Eigen::VectorXd Z(A.vdim());
    for (int i = 0; i < Z.size(); ++i) Z[i] = gauss(rng);
    if (Z.size() > 0 && Z.norm() > 0.0) Z *= rad(rng) / Z.norm();

    const double nx = N.norm(X);
    const auto lifted = sf_distance_upper(A, N, e, exp_point(A, X, Z), opts);
    rep.min_gap = std::min(rep.min_gap, lifted.value - nx);

    const auto flat = sf_distance_upper(A, N, e, exp_horizontal(A, X), opts);
    rep.max_projection_rel_err =
        std::max(rep.max_projection_rel_err, std::abs(flat.value - nx) / nx);
  }
  return rep;
}

std::vector<SublinearPoint> sublinear_ratio(const StepTwoAlgebra& A, const NormModel& N,
                                            const GroupPoint& g, const GroupPoint& h,
                                            const HorizontalVector& X,
                                            const HorizontalVector& Y,
                                            const std::vector<double>& t_ladder,
                                            const OracleOptions& opts) {
  std::vector<SublinearPoint> out;
  out.reserve(t_ladder.size());
  for (double t : t_ladder) {
    if (!(t > 0.0)) throw std::invalid_argument("sublinear_ratio: t must be > 0");
    const GroupPoint left = multiply(A, g, exp_horizontal(A, t * X));
    const GroupPoint right = multiply(A, h, exp_horizontal(A, t * Y));
    const auto d = sf_distance_upper(A, N, left, right, opts);
    out.push_back({t, d.value / t});
  }
  return out;
}

}  // namespace carnot::oracle

#include "carnot/pmp.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace carnot {

BForm build_B(const StepTwoAlgebra& A, const VerticalVector& b) {
  if (b.size() != A.vdim()) throw std::invalid_argument("build_B: b dimension");
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(A.rank(), A.rank());
  for (int k = 0; k < A.vdim(); ++k) B += b[k] * A.structure_matrix(k);
  return {B};
}

Eigen::MatrixXd kernel_B(const BForm& Bf) {
  const auto n = Bf.B.rows();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Bf.B, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  if (smax == 0.0) return Eigen::MatrixXd::Identity(n, n);
  const double tol = 1e-10 * smax;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

ExtremalRun integrate_extremal(const StepTwoAlgebra& A, const NormModel& N,
                               const Covector& a0, const VerticalVector& b,
                               const GroupPoint& start, double T, double dt,
                               const std::optional<Selection>& selection) {
  if (!(dt > 0.0) || !(T > 0.0)) {
    throw std::invalid_argument("integrate_extremal: T, dt must be positive");
  }
  if (a0.size() != A.rank()) throw std::invalid_argument("integrate_extremal: a0 dim");
  const Selection sel = selection.value_or(N.selection());
  const BForm Bf = build_B(A, b);
  const Eigen::MatrixXd Bt = Bf.B.transpose();

  const auto n = static_cast<size_t>(std::llround(T / dt));
  ExtremalRun run;
  run.b = b;
  run.selected_extremal = !N.strictly_convex();
  run.states.reserve(n + 1);
  run.control.dt = dt;
  run.control.samples.reserve(n);

  auto rhs = [&](const Covector& a) -> Eigen::VectorXd {
    return Bt * N.legendre_feedback(a, sel).selected;
  };

  Covector a = a0;
  for (size_t k = 0; k <= n; ++k) {
    const double t = dt * static_cast<double>(k);
    if (!a.allFinite()) {
      throw std::runtime_error("integrate_extremal: non-finite dual state at t = " +
                               std::to_string(t));
    }
    run.states.push_back({t, a});
    if (k == n) break;
    const Eigen::VectorXd u0 = N.legendre_feedback(a, sel).selected;
    run.control.samples.push_back(u0);
    const Eigen::VectorXd k1 = Bt * u0;
    const Eigen::VectorXd k2 = rhs(a + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = rhs(a + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = rhs(a + dt * k3);
    a += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  run.trajectory = develop(A, start, run.control);
  return run;
}

ResidualReport residual_check(const StepTwoAlgebra& A, const NormModel& N,
                              const ControlSignal& u,
                              const std::vector<ExtremalState>& states,
                              const VerticalVector& b, double tol) {
  if (states.size() != u.samples.size() + 1) {
    throw std::invalid_argument("residual_check: grid mismatch between control and states");
  }
  const BForm Bf = build_B(A, b);
  const Eigen::MatrixXd Bt = Bf.B.transpose();
  ResidualReport rep;
  rep.tol = tol;
  for (size_t k = 0; k < u.samples.size(); ++k) {
    const Eigen::VectorXd da = (states[k + 1].a - states[k].a) / u.dt;
    rep.max_ode_residual =
        std::max(rep.max_ode_residual, (da - Bt * u.samples[k]).norm());
    // Certificate slack: how far (u_k, a_k) sits from the subdifferential set.
    const double nu = N.norm(u.samples[k]);
    const double slack = std::max(N.dual_norm(states[k].a) - nu,
                                  nu * nu - states[k].a.dot(u.samples[k]));
    rep.max_subdiff_violation = std::max(rep.max_subdiff_violation, std::max(0.0, slack));
  }
  rep.vertical_drift = 0.0;  // single stored vertical dual
  if (rep.max_ode_residual > tol) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "dual ODE residual %.3e exceeds tol %.3e",
                  rep.max_ode_residual, tol);
    rep.violations.emplace_back(buf);
  }
  if (rep.max_subdiff_violation > tol) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "subdifferential violation %.3e exceeds tol %.3e",
                  rep.max_subdiff_violation, tol);
    rep.violations.emplace_back(buf);
  }
  rep.extremal_within_tol = rep.violations.empty();
  return rep;
}

ConservationReport conserved_quantities(const NormModel& N, const BForm& B,
                                        const std::vector<ExtremalState>& states,
                                        const ControlSignal& u) {
  if (states.empty()) throw std::invalid_argument("conserved_quantities: no states");
  ConservationReport rep;
  rep.kernel = kernel_B(B);
  rep.kernel_drifts.assign(static_cast<size_t>(rep.kernel.cols()), 0.0);
  const Eigen::VectorXd pairings0 = rep.kernel.transpose() * states.front().a;
  const double dual0 = N.dual_norm(states.front().a);
  for (size_t k = 0; k < states.size(); ++k) {
    const Eigen::VectorXd pairings = rep.kernel.transpose() * states[k].a;
    for (int c = 0; c < rep.kernel.cols(); ++c) {
      rep.kernel_drifts[static_cast<size_t>(c)] =
          std::max(rep.kernel_drifts[static_cast<size_t>(c)],
                   std::abs(pairings[c] - pairings0[c]));
    }
    rep.dual_norm_drift =
        std::max(rep.dual_norm_drift, std::abs(N.dual_norm(states[k].a) - dual0));
    if (k < u.samples.size()) {
      const double nu = N.norm(u.samples[k]);
      rep.pairing_residual = std::max(
          rep.pairing_residual, std::abs(states[k].a.dot(u.samples[k]) - nu * nu));
    }
  }
  return rep;
}

void write_states_csv(const ExtremalRun& run, const std::string& path) {
  std::string out = "t";
  const int r = run.states.empty() ? 0 : static_cast<int>(run.states[0].a.size());
  for (int i = 1; i <= r; ++i) out += ",a_" + std::to_string(i);
  for (int i = 1; i <= run.b.size(); ++i) out += ",b_" + std::to_string(i);
  out += '\n';
  char buf[64];
  for (const auto& s : run.states) {
    std::snprintf(buf, sizeof(buf), "%.17g", s.t);
    out += buf;
    for (int i = 0; i < s.a.size(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", s.a[i]);
      out += buf;
    }
    for (int i = 0; i < run.b.size(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", run.b[i]);
      out += buf;
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << out;
}

}  // namespace carnot

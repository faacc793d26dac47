#include "carnot/control.hpp"
#include <limits>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace carnot {

namespace {

void append_row(std::string& out, double t, const Eigen::VectorXd& a,
                const Eigen::VectorXd* b = nullptr) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", t);
  out += buf;
  for (int i = 0; i < a.size(); ++i) {
    std::snprintf(buf, sizeof(buf), ",%.17g", a[i]);
    out += buf;
  }
  if (b) {
    for (int i = 0; i < b->size(); ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", (*b)[i]);
      out += buf;
    }
  }
  out += '\n';
}

}  // namespace

const HorizontalVector& ControlSignal::at(double t) const {
  if (samples.empty()) throw std::out_of_range("empty control");
  auto k = static_cast<long>(std::floor(t / dt));
  k = std::clamp(k, 0L, static_cast<long>(samples.size()) - 1);
  return samples[static_cast<size_t>(k)];
}

ControlSignal sample_control(const std::function<HorizontalVector(double)>& u,
                             double dt, double T) {
  if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("sample_control: dt, T > 0");
  const auto n = static_cast<size_t>(std::llround(T / dt));
  ControlSignal out;
  out.dt = dt;
  out.samples.reserve(n);
  for (size_t k = 0; k < n; ++k) out.samples.push_back(u(dt * static_cast<double>(k)));
  return out;
}

Trajectory develop(const StepTwoAlgebra& A, const GroupPoint& start,
                   const ControlSignal& u) {
  if (u.count() < 1) throw std::invalid_argument("develop: empty control");
  if (u.dim() != A.rank()) throw std::invalid_argument("develop: dimension mismatch");
  Trajectory traj;
  traj.dt = u.dt;
  traj.points.reserve(u.samples.size() + 1);
  traj.points.push_back(start);
  for (const auto& uk : u.samples) {
    traj.points.push_back(
        multiply(A, traj.points.back(), exp_horizontal(A, u.dt * uk)));
  }
  return traj;
}

ControlSignal dilate_control(const ControlSignal& u, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("dilate_control: lambda must be > 0");
  ControlSignal out = u;
  out.dt = u.dt / lambda;
  return out;
}

ControlSignal restrict_control(const ControlSignal& u, double T_window) {
  if (!(T_window > 0.0) || T_window > u.T() * (1.0 + 1e-12)) {
    throw std::invalid_argument("restrict_control: window outside domain");
  }
  const auto n = static_cast<size_t>(std::llround(T_window / u.dt));
  if (n < 1 || n > u.samples.size()) {
    throw std::invalid_argument("restrict_control: window not on the sample grid");
  }
  ControlSignal out;
  out.dt = u.dt;
  out.samples.assign(u.samples.begin(), u.samples.begin() + static_cast<long>(n));
  return out;
}

HorizontalVector average(const ControlSignal& u, double t0, double t1) {
  if (!(t0 >= 0.0) || !(t1 > t0) || t1 > u.T() * (1.0 + 1e-12)) {
    throw std::invalid_argument("average: window must satisfy 0 <= t0 < t1 <= T");
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(u.dim());
  const auto k0 = static_cast<size_t>(std::floor(t0 / u.dt));
  const auto k1 = std::min(static_cast<size_t>(std::ceil(t1 / u.dt)),
                           u.samples.size());
  for (size_t k = k0; k < k1; ++k) {
    const double lo = std::max(t0, u.dt * static_cast<double>(k));
    const double hi = std::min(t1, u.dt * static_cast<double>(k + 1));
    if (hi > lo) acc += (hi - lo) * u.samples[k];
  }
  return acc / (t1 - t0);
}

std::vector<ControlSignal> blowdown_samples(const ControlSignal& u,
                                            const std::vector<double>& lambdas,
                                            double T_window) {
  std::vector<ControlSignal> out;
  out.reserve(lambdas.size());
  for (double lam : lambdas) {
    if (lam * T_window > u.T() * (1.0 + 1e-12)) {
      throw std::invalid_argument("blowdown_samples: lambda * window exceeds domain");
    }
    out.push_back(restrict_control(dilate_control(u, lam), T_window));
  }
  return out;
}

bool is_unit_speed(const ControlSignal& u, const NormModel& N, double tol) {
  for (const auto& s : u.samples) {
    if (std::abs(N.norm(s) - 1.0) > tol) return false;
  }
  return !u.samples.empty();
}

double l2_distance(const ControlSignal& u, const ControlSignal& v, double T_window) {
  if (u.dim() != v.dim()) throw std::invalid_argument("l2_distance: dimension");
  if (T_window > u.T() * (1.0 + 1e-12) || T_window > v.T() * (1.0 + 1e-12)) {
    throw std::invalid_argument("l2_distance: window exceeds a domain");
  }
  const double inf = std::numeric_limits<double>::infinity();
  double acc = 0.0;
  double t = 0.0;
  size_t iu = 0, iv = 0;
  while (t < T_window) {
    const double next_u =
        iu + 1 < u.samples.size() ? u.dt * static_cast<double>(iu + 1) : inf;
    const double next_v =
        iv + 1 < v.samples.size() ? v.dt * static_cast<double>(iv + 1) : inf;
    const double next = std::min({next_u, next_v, T_window});
    acc += (next - t) * (u.samples[iu] - v.samples[iv]).squaredNorm();
    t = next;
    if (next == next_u) ++iu;
    if (next == next_v) ++iv;
  }
  return std::sqrt(acc);
}

void write_csv(const Trajectory& traj, const std::string& path) {
  std::string out = "t";
  const int r = traj.points.empty() ? 0 : static_cast<int>(traj.points[0].x.size());
  const int m = traj.points.empty() ? 0 : static_cast<int>(traj.points[0].z.size());
  for (int i = 1; i <= r; ++i) out += ",x_" + std::to_string(i);
  for (int i = 1; i <= m; ++i) out += ",z_" + std::to_string(i);
  out += '\n';
  for (size_t k = 0; k < traj.points.size(); ++k) {
    append_row(out, traj.dt * static_cast<double>(k), traj.points[k].x,
               &traj.points[k].z);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << out;
}

void write_csv(const ControlSignal& u, const std::string& path) {
  std::string out = "t";
  for (int i = 1; i <= u.dim(); ++i) out += ",u_" + std::to_string(i);
  out += '\n';
  for (size_t k = 0; k < u.samples.size(); ++k) {
    append_row(out, u.dt * static_cast<double>(k), u.samples[k]);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << out;
}

}  // namespace carnot

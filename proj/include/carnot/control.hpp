#pragma once

#include <functional>
#include <string>
#include <vector>

#include "carnot/algebra.hpp"
#include "carnot/norms.hpp"

namespace carnot {

/// Piecewise-constant control on a uniform grid: samples[k] is the value on
/// [k*dt, (k+1)*dt).
struct ControlSignal {
  double dt = 0.0;
  std::vector<HorizontalVector> samples;

  double T() const { return dt * static_cast<double>(samples.size()); }
  int count() const { return static_cast<int>(samples.size()); }
  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].size()); }

  /// Value at time t (right-open cells; t == T returns the last sample).
  const HorizontalVector& at(double t) const;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<GroupPoint> points;  // samples.count + 1 grid points
};

/// Samples u(t) at cell left endpoints over [0, T].
ControlSignal sample_control(const std::function<HorizontalVector(double)>& u,
                             double dt, double T);

/// Horizontal development: points[k+1] = points[k] * exp(dt * u_k).
/// Exact for piecewise-constant controls.
Trajectory develop(const StepTwoAlgebra& A, const GroupPoint& start,
                   const ControlSignal& u);

/// Time rescale t -> lambda*t: same samples on a grid of step dt/lambda.
ControlSignal dilate_control(const ControlSignal& u, double lambda);

/// Truncates to [0, T_window] (T_window must be a grid multiple within domain).
ControlSignal restrict_control(const ControlSignal& u, double T_window);

/// Exact integral average of u over [t0, t1].
HorizontalVector average(const ControlSignal& u, double t0, double t1);

/// Dilated copies of u for each lambda, restricted to [0, T_window].
std::vector<ControlSignal> blowdown_samples(const ControlSignal& u,
                                            const std::vector<double>& lambdas,
                                            double T_window);

bool is_unit_speed(const ControlSignal& u, const NormModel& N, double tol);

/// Exact L2 distance of two piecewise-constant signals on [0, T_window]
/// (componentwise Euclidean), handling different grids by merging breakpoints.
double l2_distance(const ControlSignal& u, const ControlSignal& v, double T_window);

void write_csv(const Trajectory& traj, const std::string& path);
void write_csv(const ControlSignal& u, const std::string& path);

}  // namespace carnot

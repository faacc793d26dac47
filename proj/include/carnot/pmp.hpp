#pragma once

#include <optional>
#include <string>
#include <vector>

#include "carnot/algebra.hpp"
#include "carnot/control.hpp"
#include "carnot/norms.hpp"

namespace carnot {

/// The time-independent skew form driving the dual ODE: B(X,Y) = b([X,Y]),
/// with matrix B_ij = sum_k b_k c_k(i,j).
struct BForm {
  Eigen::MatrixXd B;

  double operator()(const HorizontalVector& X, const HorizontalVector& Y) const {
    return X.dot(B * Y);
  }
};

BForm build_B(const StepTwoAlgebra& A, const VerticalVector& b);

/// Orthonormal basis of ker B as matrix columns (SVD, relative tol 1e-10).
/// Skew matrices have even rank, so dim ker has the parity of the dimension.
Eigen::MatrixXd kernel_B(const BForm& B);

/// Dual state along an extremal. The vertical dual is constant in time and is
/// stored once per run (see ExtremalRun), never per state.
struct ExtremalState {
  double t = 0.0;
  Covector a;
};

struct ExtremalRun {
  VerticalVector b;  // constant vertical dual of the whole run
  std::vector<ExtremalState> states;
  ControlSignal control;
  Trajectory trajectory;
  bool selected_extremal = false;  // set-valued feedback closed by a selection rule
};

/// Integrates the extremal system: RK4 on the dual ODE da/dt = B^T u with
/// u = legendre_feedback(N, a) at every stage; the group trajectory is the
/// exact development of the recorded piecewise-constant control.
///
/// For non-strictly-convex norms the feedback is closed by the selection rule
/// (the norm's own, unless overridden) and the run is flagged as a selected
/// extremal.
ExtremalRun integrate_extremal(const StepTwoAlgebra& A, const NormModel& N,
                               const Covector& a0, const VerticalVector& b,
                               const GroupPoint& start, double T, double dt,
                               const std::optional<Selection>& selection = {});

struct ResidualReport {
  double max_ode_residual = 0.0;       // sup_k |Δa/dt - B^T u_k|
  double max_subdiff_violation = 0.0;  // sup_k certificate slack at (u_k, a_k)
  double vertical_drift = 0.0;         // identically zero by construction
  double tol = 0.0;
  bool extremal_within_tol = false;
  std::vector<std::string> violations;
};

ResidualReport residual_check(const StepTwoAlgebra& A, const NormModel& N,
                              const ControlSignal& u,
                              const std::vector<ExtremalState>& states,
                              const VerticalVector& b, double tol);

struct ConservationReport {
  Eigen::MatrixXd kernel;             // basis used for the pairing drifts
  std::vector<double> kernel_drifts;  // sup_t |a(t)Y - a(0)Y| per kernel column
  double dual_norm_drift = 0.0;       // sup_t | ||a(t)||_* - ||a(0)||_* |
  double pairing_residual = 0.0;      // sup_k |a_k(u_k) - ||u_k||^2|
};

ConservationReport conserved_quantities(const NormModel& N, const BForm& B,
                                        const std::vector<ExtremalState>& states,
                                        const ControlSignal& u);

void write_states_csv(const ExtremalRun& run, const std::string& path);

}  // namespace carnot

#pragma once

#include <string>
#include <vector>

#include "carnot/control.hpp"
#include "carnot/pmp.hpp"

namespace carnot {

/// |B(avg(u, 0, T), X)| sampled over a ladder of horizons, with the fitted
/// constant C = max_T value(T) * T for the 1/T envelope.
struct DecayProfile {
  std::vector<double> horizons;
  std::vector<double> values;
  HorizontalVector probe;
  double fitted_C = 0.0;
};

DecayProfile average_decay_profile(const ControlSignal& u, const BForm& B,
                                   const HorizontalVector& X,
                                   const std::vector<double>& T_ladder);

/// Dyadic-window evidence that blowdown controls land in ker B: for each
/// lambda, the max over dyadic subwindows (depth levels of halving) of
/// |B . avg| for the dilated control. Consistency means the sequence is
/// non-increasing and drops below tol at the largest lambda. This is
/// evidence on finitely many windows, not a verification of the a.e. claim.
struct KernelMembershipReport {
  std::vector<double> lambdas;
  std::vector<double> max_B_avg;
  double tol = 0.0;
  int depth = 2;
  bool consistent = false;
};

KernelMembershipReport kernel_membership_check(const ControlSignal& u, const BForm& B,
                                               const std::vector<double>& lambda_ladder,
                                               double window, double tol,
                                               int depth = 2);

struct AffinityResult {
  bool is_affine = false;
  HorizontalVector direction;
  double max_deviation = 0.0;
  double tol = 0.0;
};

/// A control is affine when it never strays from its mean. Negative tol
/// selects the default 1e-6 * sup|u|.
AffinityResult affinity_detector(const ControlSignal& u, double tol = -1.0);

void write_csv(const DecayProfile& profile, const std::string& path);

}  // namespace carnot

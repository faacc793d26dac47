#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "carnot/algebra.hpp"
#include "carnot/control.hpp"
#include "carnot/norms.hpp"

namespace carnot::oracle {

/// Direct-transcription settings. Restarts are independent seeded trials; the
/// reducer keeps the best feasible value, so results are deterministic per
/// seed regardless of thread scheduling.
struct OracleOptions {
  int n_steps = 64;
  int restarts = 4;
  std::uint64_t seed = 0;
  double endpoint_tol = 1e-8;            // on the dilation-normalized problem
  std::vector<double> penalty_schedule;  // empty selects the default ramp
  int max_inner_iterations = 150;        // quasi-Newton steps per penalty round
  int subgradient_iterations = 400;      // subgradient steps per round (l1/linf/polyhedral)
  int threads = 0;                       // 0 = CARNOT_SF_THREADS or hardware
};

struct OracleResult {
  double value = 0.0;           // norm-length of the best feasible control
  ControlSignal control;        // on [0,1], n_steps cells, physical scale
  bool feasible = false;
  double endpoint_mismatch = 0.0;  // normalized residual of the best candidate
  int best_restart = -2;           // -1 denotes the warm start
};

/// Best found upper bound for the sub-Finsler distance between g and h:
/// piecewise-constant transcription, penalty rounds with multiplier updates
/// annealed to tight feasibility, quadratic regularization annealed to zero,
/// multi-start. The problem is dilation-normalized to unit scale first.
/// The returned value is the length of an explicit control whose endpoint
/// matches within endpoint_tol, hence always an upper bound.
OracleResult sf_distance_upper(const StepTwoAlgebra& A, const NormModel& N,
                               const GroupPoint& g, const GroupPoint& h,
                               const OracleOptions& opts = {},
                               const ControlSignal* warm_start = nullptr);

/// Verdict "not beaten at this resolution": true iff the oracle cannot find a
/// path from points[i] to points[j] shorter than (1 - rel_tol) times the
/// path's own length over the window. The trajectory segment itself is fed
/// back as a warm start, keeping the comparison sound.
bool is_geodesic_segment(const StepTwoAlgebra& A, const NormModel& N,
                         const Trajectory& traj, std::size_t i, std::size_t j,
                         double rel_tol, const OracleOptions& opts = {});

struct SubmetryGapReport {
  double min_gap = 0.0;                 // min over samples of d(e, exp(X+Y)) - |X|
  double max_projection_rel_err = 0.0;  // max over samples of |d(e, exp X) - |X|| / |X|
  int samples = 0;
};

/// Samples the submetry inequality |X| <= d(e, exp(X+Y)) and the identity
/// d(e, exp X) = |X| on random horizontal/vertical pairs.
SubmetryGapReport submetry_gap(const StepTwoAlgebra& A, const NormModel& N,
                               int n_samples, std::uint64_t seed,
                               const OracleOptions& opts = {});

struct SublinearPoint {
  double t = 0.0;
  double ratio = 0.0;  // d(g exp(tX), h exp(tY)) / t
};

std::vector<SublinearPoint> sublinear_ratio(const StepTwoAlgebra& A, const NormModel& N,
                                            const GroupPoint& g, const GroupPoint& h,
                                            const HorizontalVector& X,
                                            const HorizontalVector& Y,
                                            const std::vector<double>& t_ladder,
                                            const OracleOptions& opts = {});

/// Control of a trajectory recovered from consecutive points; exact because
/// development is exact for piecewise-constant controls.
ControlSignal recover_control(const StepTwoAlgebra& A, const Trajectory& traj);

int thread_cap(int requested);

}  // namespace carnot::oracle

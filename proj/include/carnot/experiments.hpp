#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "carnot/asymptotics.hpp"
#include "carnot/oracle.hpp"
#include "carnot/pmp.hpp"
#include "json.hpp"

namespace carnot::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// A direction pair on a flat piece of the unit sphere: |X + cY| is constant
/// for |c| <= eps. Detected from edges for the built-in non-strictly-convex
/// kinds; midpoint probing over vertex pairs for polyhedral balls.
struct FlatDirection {
  HorizontalVector X;
  HorizontalVector Y;
  double eps = 0.0;
};

std::optional<FlatDirection> detect_flat_direction(const NormModel& N);

/// Runs one experiment described by a JSON spec with fields
///   kind:    extremal | decay | blowdown | counterexample | submetry |
///            sublinear | distance | dichotomy | suite
///   group:   "heisenberg:n" | "free2:r" | group JSON object
///   norm:    "euclidean" | "lp:p" | "linf" | "l1" | norm JSON object
///   seed:    integer
///   out_dir: optional directory for CSV artifacts
///   params:  kind-specific settings
/// The returned report embeds the spec, tool version, and all tolerances, and
/// is byte-deterministic for a fixed spec and seed.
nlohmann::json run_experiment(const nlohmann::json& spec);

struct SuiteConfig {
  std::string profile = "quick";  // "quick" or "full" check sizes
  std::uint64_t seed = 0;
  int threads = 0;
};

struct CheckResult {
  std::string id;
  bool pass = false;
  nlohmann::json details;
  // wall time of the check; reported on stderr/stdout only, never serialized
  // into suite reports (those must be byte-reproducible)
  double elapsed_seconds = 0.0;
};

/// The nine acceptance checks (criterion 9, determinism, is evaluated by the
/// caller by running the suite twice and comparing reports).
std::vector<CheckResult> run_acceptance_criteria(const SuiteConfig& cfg);

/// Cross-module invariants exercised on random samples.
std::vector<CheckResult> run_invariant_checks(const SuiteConfig& cfg);

/// Full verification report: invariants plus acceptance checks; "pass" is the
/// conjunction. Deterministic for fixed config.
nlohmann::json run_suite(const SuiteConfig& cfg);

nlohmann::json run_counterexample(const StepTwoAlgebra& A, NormModel N,
                                  std::optional<FlatDirection> flat, double T,
                                  double dt, double rel_tol,
                                  const oracle::OracleOptions& opts);

nlohmann::json run_dichotomy_suite(const StepTwoAlgebra& A,
                                   const std::vector<NormModel>& norms,
                                   const oracle::OracleOptions& opts);

}  // namespace carnot::cli

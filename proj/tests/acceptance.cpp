// Acceptance suite: runs every gate check at full size and prints one
// pass/fail line per criterion. Exit code is nonzero when any line fails.

#include <cstdio>
#include <map>
#include <string>

#include "carnot/experiments.hpp"

using carnot::cli::CheckResult;
using carnot::cli::SuiteConfig;

namespace {

int failures = 0;

void report(const std::string& id, bool pass, const std::string& info) {
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), info.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void report_check(const CheckResult& c, double budget_seconds) {
  const bool in_budget = budget_seconds <= 0.0 || c.elapsed_seconds <= budget_seconds;
  std::string info = c.details.dump();
  if (info.size() > 500) info = info.substr(0, 500) + "...}";
  char timing[96];
  if (budget_seconds > 0.0) {
    std::snprintf(timing, sizeof(timing), " [%.2fs / budget %.0fs]",
                  c.elapsed_seconds, budget_seconds);
  } else {
    std::snprintf(timing, sizeof(timing), " [%.2fs]", c.elapsed_seconds);
  }
  report(c.id, c.pass && in_budget, info + timing);
}

}  // namespace

int main() {
  SuiteConfig cfg;
  cfg.profile = "full";
  cfg.seed = 0;

  const std::map<std::string, double> budgets = {
      {"criterion-1-algebra-laws", 1.0},
      {"criterion-2-pmp-closed-form", 5.0},
      {"criterion-7-dichotomy", 600.0},
  };

  for (const auto& c : carnot::cli::run_acceptance_criteria(cfg)) {
    const auto it = budgets.find(c.id);
    report_check(c, it == budgets.end() ? 0.0 : it->second);
  }

  // Criterion 9: identical seeds reproduce byte-identical suite reports.
  {
    SuiteConfig quick;
    quick.profile = "quick";
    quick.seed = 7;
    const std::string first = carnot::cli::run_suite(quick).dump(2);
    const std::string second = carnot::cli::run_suite(quick).dump(2);
    char info[128];
    std::snprintf(info, sizeof(info),
                  "two quick-profile suite runs, %zu bytes each, identical=%s",
                  first.size(), first == second ? "true" : "false");
    report("criterion-9-determinism", first == second, info);
  }

  for (const auto& c : carnot::cli::run_invariant_checks(cfg)) {
    report_check(c, 0.0);
  }

  std::printf("%s: %d failing check(s)\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              failures);
  return failures == 0 ? 0 : 1;
}

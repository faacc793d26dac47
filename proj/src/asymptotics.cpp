#include "carnot/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace carnot {

DecayProfile average_decay_profile(const ControlSignal& u, const BForm& B,
                                   const HorizontalVector& X,
                                   const std::vector<double>& T_ladder) {
  DecayProfile prof;
  prof.probe = X;
  double prev = 0.0;
  for (double T : T_ladder) {
    if (T <= prev) throw std::invalid_argument("decay profile: ladder must increase");
    if (T > u.T() * (1.0 + 1e-12)) {
      throw std::invalid_argument("decay profile: ladder exceeds control domain");
    }
    prev = T;
    const double value = std::abs(B(average(u, 0.0, T), X));
    prof.horizons.push_back(T);
    prof.values.push_back(value);
    prof.fitted_C = std::max(prof.fitted_C, value * T);
  }
  return prof;
}

KernelMembershipReport kernel_membership_check(const ControlSignal& u, const BForm& B,
                                               const std::vector<double>& lambda_ladder,
                                               double window, double tol, int depth) {
  if (!(window > 0.0)) throw std::invalid_argument("kernel check: window must be > 0");
  KernelMembershipReport rep;
  rep.tol = tol;
  rep.depth = depth;
  for (double lam : lambda_ladder) {
    if (lam * window > u.T() * (1.0 + 1e-12)) {
      throw std::invalid_argument("kernel check: lambda * window exceeds domain");
    }
    const ControlSignal ul = dilate_control(u, lam);
    double worst = 0.0;
    for (int level = 0; level <= depth; ++level) {
      const int pieces = 1 << level;
      const double len = window / pieces;
      for (int p = 0; p < pieces; ++p) {
        const Eigen::VectorXd avg = average(ul, p * len, (p + 1) * len);
        worst = std::max(worst, (B.B * avg).norm());
      }
    }
    rep.lambdas.push_back(lam);
    rep.max_B_avg.push_back(worst);
  }
  bool monotone = true;
  for (size_t i = 1; i < rep.max_B_avg.size(); ++i) {
    if (rep.max_B_avg[i] > rep.max_B_avg[i - 1] + 1e-12) monotone = false;
  }
  rep.consistent = monotone && !rep.max_B_avg.empty() && rep.max_B_avg.back() <= tol;
  return rep;
}

AffinityResult affinity_detector(const ControlSignal& u, double tol) {
  if (u.count() < 1) throw std::invalid_argument("affinity_detector: empty control");
  AffinityResult res;
  res.direction = average(u, 0.0, u.T());
  if (tol < 0.0) {
    double sup = 0.0;
    for (const auto& s : u.samples) sup = std::max(sup, s.cwiseAbs().maxCoeff());
    tol = 1e-6 * sup;
  }
  res.tol = tol;
  for (const auto& s : u.samples) {
    res.max_deviation = std::max(res.max_deviation, (s - res.direction).norm());
  }
  res.is_affine = res.max_deviation <= tol;
  return res;
}

void write_csv(const DecayProfile& profile, const std::string& path) {
  std::string out = "T,value,envelope\n";
  char buf[96];
  for (size_t i = 0; i < profile.horizons.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", profile.horizons[i],
                  profile.values[i], 2.0 / profile.horizons[i]);
    out += buf;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << out;
}

}  // namespace carnot

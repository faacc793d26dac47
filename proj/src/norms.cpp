#include "carnot/norms.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace carnot {

namespace {

constexpr double kFaceTol = 1e-10;

// ---------------------------------------------------------------------------
// Dense two-phase simplex for  min c'x  s.t.  A x = b, x >= 0.
// Problems here are tiny (rank r rows, one column per ball vertex), so a
// tableau with Bland's rule is plenty. The dual vector is recovered from the
// final basis and doubles as a subgradient of the polyhedral gauge.
// ---------------------------------------------------------------------------

struct LpSolution {
  bool feasible = false;
  double value = 0.0;
  Eigen::VectorXd primal;
  Eigen::VectorXd dual;
};

LpSolution solve_equality_lp(Eigen::MatrixXd A, Eigen::VectorXd b,
                             const Eigen::VectorXd& c) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  const double tol = 1e-11;

  std::vector<bool> flipped(m, false);
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0) {
      b[i] = -b[i];
      A.row(i) = -A.row(i);
      flipped[i] = true;
    }
  }

  // Tableau columns: n structural + m artificial + rhs.
  Eigen::MatrixXd T(m, n + m + 1);
  T.leftCols(n) = A;
  T.middleCols(n, m) = Eigen::MatrixXd::Identity(m, m);
  T.col(n + m) = b;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  auto run_simplex = [&](const Eigen::VectorXd& cost, bool allow_artificial) {
    for (int iter = 0; iter < 20000; ++iter) {
      Eigen::VectorXd cb(m);
      for (int i = 0; i < m; ++i) cb[i] = cost[basis[i]];
      int enter = -1;
      const int limit = allow_artificial ? n + m : n;
      for (int j = 0; j < limit; ++j) {
        const double reduced = cost[j] - cb.dot(T.col(j));
        if (reduced < -tol) {
          enter = j;  // Bland: first improving column
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        if (T(i, enter) > tol) {
          const double ratio = T(i, n + m) / T(i, enter);
          if (leave < 0 || ratio < best_ratio - tol ||
              (ratio < best_ratio + tol && basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return false;  // unbounded
      T.row(leave) /= T(leave, enter);
      for (int i = 0; i < m; ++i) {
        if (i != leave && std::abs(T(i, enter)) > 0.0) {
          T.row(i) -= T(i, enter) * T.row(leave);
        }
      }
      basis[leave] = enter;
    }
    return false;
  };

  LpSolution sol;
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  if (!run_simplex(phase1, true)) return sol;
  double infeas = 0.0;
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= n) infeas += T(i, n + m);
  }
  if (infeas > 1e-8) return sol;

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = c;
  if (!run_simplex(phase2, false)) return sol;

  sol.feasible = true;
  sol.primal = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) sol.primal[basis[i]] = T(i, n + m);
  }
  sol.value = c.dot(sol.primal);

  // Dual from the final basis: solve B' y = c_B (artificial columns are unit
  // vectors with zero cost).
  Eigen::MatrixXd B(m, m);
  Eigen::VectorXd cB(m);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) {
      B.col(i) = A.col(basis[i]);
      cB[i] = c[basis[i]];
    } else {
      B.col(i) = Eigen::VectorXd::Unit(m, basis[i] - n);
      cB[i] = 0.0;
    }
  }
  sol.dual = B.transpose().colPivHouseholderQr().solve(cB);
  for (int i = 0; i < m; ++i) {
    if (flipped[i]) sol.dual[i] = -sol.dual[i];  // undo the row sign changes
  }
  return sol;
}

double lp_norm_scaled(const Eigen::VectorXd& x, double p) {
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / m, p);
  return m * std::pow(s, 1.0 / p);
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

NormModel NormModel::euclidean(Eigen::MatrixXd metric) {
  if (metric.rows() != metric.cols() || metric.rows() < 1) {
    throw std::invalid_argument("euclidean metric must be square");
  }
  if ((metric - metric.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, metric.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("euclidean metric must be symmetric");
  }
  NormModel n;
  n.kind_ = NormKind::euclidean;
  n.dim_ = static_cast<int>(metric.rows());
  n.metric_ = std::move(metric);
  n.metric_llt_.compute(n.metric_);
  if (n.metric_llt_.info() != Eigen::Success) {
    throw std::invalid_argument("euclidean metric must be positive definite");
  }
  return n;
}

NormModel NormModel::lp(int dim, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw std::invalid_argument("lp exponent must satisfy 1 < p < inf");
  }
  NormModel n;
  n.kind_ = NormKind::lp;
  n.dim_ = dim;
  n.p_ = p;
  n.q_ = p / (p - 1.0);
  return n;
}

NormModel NormModel::linf(int dim) {
  NormModel n;
  n.kind_ = NormKind::linf;
  n.dim_ = dim;
  return n;
}

NormModel NormModel::l1(int dim) {
  NormModel n;
  n.kind_ = NormKind::l1;
  n.dim_ = dim;
  return n;
}

NormModel NormModel::polyhedral(std::vector<Eigen::VectorXd> vertices,
                                Selection selection) {
  if (vertices.empty()) throw std::invalid_argument("polyhedral: empty vertex set");
  const int dim = static_cast<int>(vertices.front().size());
  Eigen::MatrixXd V(dim, vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i].size() != dim) {
      throw std::invalid_argument("polyhedral: inconsistent vertex dimensions");
    }
    V.col(static_cast<int>(i)) = vertices[i];
  }
  // Unit ball of a norm: symmetric and full-dimensional.
  for (const auto& v : vertices) {
    bool has_neg = false;
    for (const auto& w : vertices) {
      if ((v + w).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, v.cwiseAbs().maxCoeff())) {
        has_neg = true;
        break;
      }
    }
    if (!has_neg) throw std::invalid_argument("polyhedral: vertex set is not symmetric");
  }
  if (V.colPivHouseholderQr().rank() < dim) {
    throw std::invalid_argument("polyhedral: vertices do not span the space");
  }
  NormModel n;
  n.kind_ = NormKind::polyhedral;
  n.dim_ = dim;
  n.vertices_ = std::move(vertices);
  n.vertex_matrix_ = std::move(V);
  n.selection_ = std::move(selection);
  return n;
}

double NormModel::norm(const HorizontalVector& x) const {
  if (x.size() != dim_) throw std::invalid_argument("norm: dimension mismatch");
  switch (kind_) {
    case NormKind::euclidean:
      return std::sqrt(std::max(0.0, x.dot(metric_ * x)));
    case NormKind::lp:
      return lp_norm_scaled(x, p_);
    case NormKind::linf:
      return x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
    case NormKind::l1:
      return x.cwiseAbs().sum();
    case NormKind::polyhedral: {
      const double scale = x.cwiseAbs().maxCoeff();
      if (scale == 0.0) return 0.0;
      const int nv = static_cast<int>(vertices_.size());
      auto sol = solve_equality_lp(vertex_matrix_, x / scale,
                                   Eigen::VectorXd::Ones(nv));
      if (!sol.feasible) throw std::runtime_error("polyhedral gauge: infeasible LP");
      return scale * sol.value;
    }
  }
  return 0.0;
}

double NormModel::dual_norm(const Covector& a) const {
  if (a.size() != dim_) throw std::invalid_argument("dual_norm: dimension mismatch");
  switch (kind_) {
    case NormKind::euclidean:
      return std::sqrt(std::max(0.0, a.dot(metric_llt_.solve(a))));
    case NormKind::lp:
      return lp_norm_scaled(a, q_);
    case NormKind::linf:
      return a.cwiseAbs().sum();
    case NormKind::l1:
      return a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
    case NormKind::polyhedral: {
      double best = 0.0;
      for (const auto& v : vertices_) best = std::max(best, a.dot(v));
      return best;
    }
  }
  return 0.0;
}

bool NormModel::subdiff_contains(const HorizontalVector& u, const Covector& a,
                                 double tol) const {
  if (tol < 0.0) throw std::invalid_argument("subdiff_contains: tol must be >= 0");
  const double nu = norm(u);
  const double da = dual_norm(a);
  if (nu <= tol) return da <= tol;
  return da <= nu + tol && a.dot(u) >= nu * nu - tol * std::max(1.0, nu);
}

std::vector<Eigen::VectorXd> NormModel::probe_directions(int per_slice) const {
  std::vector<Eigen::VectorXd> dirs;
  if (dim_ == 1) {
    dirs.push_back(Eigen::VectorXd::Constant(1, 1.0));
    dirs.push_back(Eigen::VectorXd::Constant(1, -1.0));
    return dirs;
  }
  if (dim_ == 2) {
    for (int k = 0; k < per_slice; ++k) {
      const double phi = 2.0 * M_PI * k / per_slice;
      Eigen::VectorXd d(2);
      d << std::cos(phi), std::sin(phi);
      dirs.push_back(d);
    }
    return dirs;
  }
  std::mt19937_64 rng(0x9E3779B97F4A7C15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int count = per_slice * (dim_ - 1);
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd d(dim_);
    for (int i = 0; i < dim_; ++i) d[i] = gauss(rng);
    if (d.norm() > 1e-12) dirs.push_back(d.normalized());
  }
  for (int i = 0; i < dim_; ++i) {
    dirs.push_back(Eigen::VectorXd::Unit(dim_, i));
    dirs.push_back(-Eigen::VectorXd::Unit(dim_, i));
  }
  return dirs;
}

bool NormModel::subdiff_contains_probe(const HorizontalVector& u, const Covector& a,
                                       double tol) const {
  const double nu = norm(u);
  const double Eu = 0.5 * nu * nu;
  std::vector<double> radii;
  if (nu > 0.0) {
    radii = {0.5 * nu, nu, 2.0 * nu, 1.0};
  } else {
    radii = {1.0};
  }
  auto check = [&](const Eigen::VectorXd& v) {
    const double nv = norm(v);
    return a.dot(v - u) <= 0.5 * nv * nv - Eu + tol;
  };
  for (const auto& d : probe_directions(64)) {
    const double nd = norm(d);
    if (nd <= 0.0) continue;
    for (double r : radii) {
      if (!check((r / nd) * d)) return false;
    }
  }
  if (kind_ == NormKind::polyhedral) {
    for (const auto& v : vertices_) {
      for (double r : radii) {
        if (!check(r * v)) return false;
      }
    }
  }
  if (kind_ == NormKind::l1 || kind_ == NormKind::linf) {
    for (int i = 0; i < dim_; ++i) {
      for (double s : {1.0, -1.0}) {
        for (double r : radii) {
          if (!check(s * r * Eigen::VectorXd::Unit(dim_, i))) return false;
        }
      }
    }
  }
  return check(Eigen::VectorXd::Zero(dim_));
}

LegendreResult NormModel::legendre_feedback(const Covector& a) const {
  return legendre_feedback(a, selection_);
}

namespace {

Eigen::VectorXd select_from_vertices(const std::vector<Eigen::VectorXd>& verts,
                                     const Selection& sel,
                                     const Eigen::VectorXd& barycenter) {
  switch (sel.rule) {
    case SelectionRule::barycenter:
      return barycenter;
    case SelectionRule::lowest_index_vertex:
      return verts.front();
    case SelectionRule::fixed_vector: {
      if (sel.fixed.size() != barycenter.size()) return barycenter;
      int best = 0;
      double best_dot = verts[0].dot(sel.fixed);
      for (size_t i = 1; i < verts.size(); ++i) {
        const double d = verts[i].dot(sel.fixed);
        if (d > best_dot + 1e-15) {
          best = static_cast<int>(i);
          best_dot = d;
        }
      }
      return verts[best];
    }
  }
  return barycenter;
}

}  // namespace

LegendreResult NormModel::legendre_feedback(const Covector& a,
                                            const Selection& sel) const {
  if (a.size() != dim_) throw std::invalid_argument("legendre_feedback: dimension");
  LegendreResult out;
  const double da = dual_norm(a);
  if (da <= 0.0) {
    out.selected = Eigen::VectorXd::Zero(dim_);
    out.unique = true;
    return out;
  }
  switch (kind_) {
    case NormKind::euclidean:
      out.selected = metric_llt_.solve(a);
      out.unique = true;
      return out;
    case NormKind::lp: {
      const double m = a.cwiseAbs().maxCoeff();
      const Eigen::VectorXd w = a / m;
      const double wq = lp_norm_scaled(w, q_);
      Eigen::VectorXd u(dim_);
      for (int i = 0; i < dim_; ++i) {
        u[i] = sign_of(w[i]) * std::pow(std::abs(w[i]), q_ - 1.0);
      }
      out.selected = u * std::pow(wq, 2.0 - q_) * m;
      out.unique = true;
      return out;
    }
    case NormKind::linf: {
      std::vector<int> free_idx;
      Eigen::VectorXd base(dim_);
      for (int i = 0; i < dim_; ++i) {
        base[i] = da * sign_of(a[i]);
        if (a[i] == 0.0) free_idx.push_back(i);
      }
      out.unique = free_idx.empty();
      if (out.unique) {
        out.selected = base;
        return out;
      }
      if (free_idx.size() <= 12) {
        const size_t combos = size_t{1} << free_idx.size();
        for (size_t mask = 0; mask < combos; ++mask) {
          Eigen::VectorXd v = base;
          for (size_t b = 0; b < free_idx.size(); ++b) {
            v[free_idx[b]] = (mask >> b) & 1 ? -da : da;
          }
          out.vertices.push_back(v);
        }
      }
      if (sel.rule == SelectionRule::fixed_vector && sel.fixed.size() == dim_) {
        Eigen::VectorXd v = base;
        for (int i : free_idx) v[i] = std::clamp(sel.fixed[i], -da, da);
        out.selected = v;
      } else if (sel.rule == SelectionRule::lowest_index_vertex && !out.vertices.empty()) {
        out.selected = out.vertices.front();
      } else {
        out.selected = base;  // barycenter of the box face
      }
      return out;
    }
    case NormKind::l1: {
      std::vector<int> achieving;
      for (int i = 0; i < dim_; ++i) {
        if (std::abs(a[i]) >= da * (1.0 - kFaceTol)) achieving.push_back(i);
      }
      for (int i : achieving) {
        out.vertices.push_back(da * sign_of(a[i]) * Eigen::VectorXd::Unit(dim_, i));
      }
      out.unique = achieving.size() == 1;
      Eigen::VectorXd bary = Eigen::VectorXd::Zero(dim_);
      for (const auto& v : out.vertices) bary += v;
      bary /= static_cast<double>(out.vertices.size());
      out.selected = out.unique ? out.vertices.front()
                                : select_from_vertices(out.vertices, sel, bary);
      if (out.unique) out.vertices.clear();
      return out;
    }
    case NormKind::polyhedral: {
      std::vector<int> achieving;
      for (size_t i = 0; i < vertices_.size(); ++i) {
        if (a.dot(vertices_[i]) >= da * (1.0 - kFaceTol)) {
          achieving.push_back(static_cast<int>(i));
        }
      }
      for (int i : achieving) out.vertices.push_back(da * vertices_[i]);
      out.unique = achieving.size() == 1;
      Eigen::VectorXd bary = Eigen::VectorXd::Zero(dim_);
      for (const auto& v : out.vertices) bary += v;
      bary /= static_cast<double>(out.vertices.size());
      if (out.unique) {
        out.selected = out.vertices.front();
        out.vertices.clear();
      } else if (sel.rule == SelectionRule::fixed_vector && sel.fixed.size() == dim_ &&
                 std::abs(norm(sel.fixed) - da) <= 1e-9 * std::max(1.0, da) &&
                 a.dot(sel.fixed) >= da * da * (1.0 - 1e-9)) {
        out.selected = sel.fixed;
      } else {
        out.selected = select_from_vertices(out.vertices, sel, bary);
      }
      return out;
    }
  }
  out.selected = Eigen::VectorXd::Zero(dim_);
  return out;
}

bool NormModel::strictly_convex() const {
  if (dim_ <= 1) return true;
  switch (kind_) {
    case NormKind::euclidean:
    case NormKind::lp:
      return true;
    case NormKind::linf:
    case NormKind::l1:
    case NormKind::polyhedral:
      return false;
  }
  return true;
}

ConvexityProbe NormModel::strict_convexity_probe(int n_samples) const {
  ConvexityProbe probe;
  probe.strictly_convex = strictly_convex();
  if (probe.strictly_convex || dim_ < 2) return probe;
  switch (kind_) {
    case NormKind::linf: {
      probe.u = Eigen::VectorXd::Unit(dim_, 0) + Eigen::VectorXd::Unit(dim_, 1);
      probe.v = Eigen::VectorXd::Unit(dim_, 0) - Eigen::VectorXd::Unit(dim_, 1);
      return probe;
    }
    case NormKind::l1: {
      probe.u = Eigen::VectorXd::Unit(dim_, 0);
      probe.v = Eigen::VectorXd::Unit(dim_, 1);
      return probe;
    }
    case NormKind::polyhedral: {
      for (size_t i = 0; i < vertices_.size(); ++i) {
        for (size_t j = i + 1; j < vertices_.size(); ++j) {
          const Eigen::VectorXd mid = 0.5 * (vertices_[i] + vertices_[j]);
          if (mid.cwiseAbs().maxCoeff() < 1e-12) continue;
          if (norm(mid) >= 1.0 - 1e-9) {
            probe.u = vertices_[i];
            probe.v = vertices_[j];
            return probe;
          }
        }
      }
      break;
    }
    default:
      break;
  }
  // Sampled fallback: random distinct unit pairs with midpoint on the sphere.
  std::mt19937_64 rng(0xC0FFEEULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd u(dim_), v(dim_);
    for (int i = 0; i < dim_; ++i) {
      u[i] = gauss(rng);
      v[i] = gauss(rng);
    }
    if (norm(u) == 0.0 || norm(v) == 0.0) continue;
    u /= norm(u);
    v /= norm(v);
    if ((u - v).cwiseAbs().maxCoeff() < 1e-3) continue;
    if (norm(0.5 * (u + v)) >= 1.0 - 1e-12) {
      probe.u = u;
      probe.v = v;
      return probe;
    }
  }
  return probe;
}

Covector NormModel::subdifferential_at(const HorizontalVector& u) const {
  if (u.size() != dim_) throw std::invalid_argument("subdifferential_at: dimension");
  const double nu = norm(u);
  if (nu == 0.0) return Eigen::VectorXd::Zero(dim_);
  switch (kind_) {
    case NormKind::euclidean:
      return metric_ * u;
    case NormKind::lp: {
      const double m = u.cwiseAbs().maxCoeff();
      const Eigen::VectorXd w = u / m;
      const double wp = lp_norm_scaled(w, p_);
      Eigen::VectorXd a(dim_);
      for (int i = 0; i < dim_; ++i) {
        a[i] = sign_of(w[i]) * std::pow(std::abs(w[i]), p_ - 1.0);
      }
      return a * std::pow(wp, 2.0 - p_) * m;
    }
    case NormKind::linf: {
      std::vector<int> achieving;
      for (int i = 0; i < dim_; ++i) {
        if (std::abs(u[i]) >= nu * (1.0 - kFaceTol)) achieving.push_back(i);
      }
      Eigen::VectorXd a = Eigen::VectorXd::Zero(dim_);
      for (int i : achieving) {
        a[i] = nu * sign_of(u[i]) / static_cast<double>(achieving.size());
      }
      return a;
    }
    case NormKind::l1: {
      Eigen::VectorXd a(dim_);
      for (int i = 0; i < dim_; ++i) a[i] = nu * sign_of(u[i]);
      return a;
    }
    case NormKind::polyhedral: {
      const double scale = u.cwiseAbs().maxCoeff();
      const int nv = static_cast<int>(vertices_.size());
      auto sol = solve_equality_lp(vertex_matrix_, u / scale,
                                   Eigen::VectorXd::Ones(nv));
      if (!sol.feasible) throw std::runtime_error("polyhedral gauge: infeasible LP");
      return nu * sol.dual;
    }
  }
  return Eigen::VectorXd::Zero(dim_);
}

bool NormModel::validate(int n_samples, double tol, std::string* diagnostic) const {
  std::mt19937_64 rng(0xBADC0DEULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  auto sample = [&] {
    Eigen::VectorXd v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = gauss(rng);
    return v;
  };
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::VectorXd x = sample(), y = sample();
    const double t = scale(rng);
    const double nx = norm(x), ny = norm(y);
    if (nx < 0.0 || std::abs(norm(t * x) - std::abs(t) * nx) > tol * (1.0 + nx)) {
      if (diagnostic) *diagnostic = "homogeneity failure";
      return false;
    }
    if (norm(x + y) > nx + ny + tol * (1.0 + nx + ny)) {
      if (diagnostic) *diagnostic = "triangle inequality failure";
      return false;
    }
    const double pairing = std::abs(x.dot(y));
    if (pairing > dual_norm(x) * ny + tol * (1.0 + pairing)) {
      if (diagnostic) *diagnostic = "dual pairing failure";
      return false;
    }
  }
  return true;
}

NormModel NormModel::from_json(const nlohmann::json& j, int dim_hint) {
  const std::string kind = j.at("kind").get<std::string>();
  Selection sel;
  if (j.contains("selection")) {
    const std::string s = j.at("selection").get<std::string>();
    if (s == "barycenter") {
      sel.rule = SelectionRule::barycenter;
    } else if (s == "lowest-index-vertex") {
      sel.rule = SelectionRule::lowest_index_vertex;
    } else if (s == "fixed-vector") {
      sel.rule = SelectionRule::fixed_vector;
      const auto& f = j.at("fixed");
      sel.fixed.resize(f.size());
      for (size_t i = 0; i < f.size(); ++i) sel.fixed[i] = f[i].get<double>();
    } else {
      throw std::invalid_argument("unknown selection rule: " + s);
    }
  }
  if (kind == "euclidean") {
    if (j.contains("metric")) {
      const auto& rows = j.at("metric");
      const int n = static_cast<int>(rows.size());
      Eigen::MatrixXd M(n, n);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) M(r, c) = rows[r][c].get<double>();
      }
      return euclidean(M);
    }
    return euclidean(Eigen::MatrixXd::Identity(dim_hint, dim_hint));
  }
  if (kind == "lp") return lp(dim_hint, j.at("p").get<double>());
  if (kind == "linf") return linf(dim_hint);
  if (kind == "l1") return l1(dim_hint);
  if (kind == "polyhedral") {
    std::vector<Eigen::VectorXd> verts;
    for (const auto& row : j.at("vertices")) {
      Eigen::VectorXd v(row.size());
      for (size_t i = 0; i < row.size(); ++i) v[i] = row[i].get<double>();
      verts.push_back(v);
    }
    return polyhedral(std::move(verts), std::move(sel));
  }
  throw std::invalid_argument("unknown norm kind: " + kind);
}

NormModel NormModel::from_reference(const std::string& ref, int dim_hint) {
  if (ref == "euclidean") {
    return euclidean(Eigen::MatrixXd::Identity(dim_hint, dim_hint));
  }
  if (ref.rfind("lp:", 0) == 0) return lp(dim_hint, std::stod(ref.substr(3)));
  if (ref == "linf") return linf(dim_hint);
  if (ref == "l1") return l1(dim_hint);
  std::ifstream in(ref);
  if (!in) throw std::invalid_argument("cannot open norm file: " + ref);
  nlohmann::json j;
  in >> j;
  return from_json(j, dim_hint);
}

nlohmann::json NormModel::to_json() const {
  nlohmann::json j;
  switch (kind_) {
    case NormKind::euclidean: {
      j["kind"] = "euclidean";
      nlohmann::json rows = nlohmann::json::array();
      for (int r = 0; r < dim_; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < dim_; ++c) row.push_back(metric_(r, c));
        rows.push_back(row);
      }
      j["metric"] = rows;
      break;
    }
    case NormKind::lp:
      j["kind"] = "lp";
      j["p"] = p_;
      break;
    case NormKind::linf:
      j["kind"] = "linf";
      break;
    case NormKind::l1:
      j["kind"] = "l1";
      break;
    case NormKind::polyhedral: {
      j["kind"] = "polyhedral";
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& v : vertices_) {
        nlohmann::json row = nlohmann::json::array();
        for (int i = 0; i < v.size(); ++i) row.push_back(v[i]);
        rows.push_back(row);
      }
      j["vertices"] = rows;
      break;
    }
  }
  switch (selection_.rule) {
    case SelectionRule::barycenter:
      j["selection"] = "barycenter";
      break;
    case SelectionRule::lowest_index_vertex:
      j["selection"] = "lowest-index-vertex";
      break;
    case SelectionRule::fixed_vector: {
      j["selection"] = "fixed-vector";
      nlohmann::json f = nlohmann::json::array();
      for (int i = 0; i < selection_.fixed.size(); ++i) f.push_back(selection_.fixed[i]);
      j["fixed"] = f;
      break;
    }
  }
  j["dim"] = dim_;
  return j;
}

}  // namespace carnot

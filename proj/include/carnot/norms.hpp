#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "carnot/algebra.hpp"
#include "json.hpp"

namespace carnot {

enum class NormKind { euclidean, lp, linf, l1, polyhedral };

enum class SelectionRule { barycenter, lowest_index_vertex, fixed_vector };

struct Selection {
  SelectionRule rule = SelectionRule::barycenter;
  Eigen::VectorXd fixed;  // only for fixed_vector
};

/// Result of the Hamiltonian maximization argmax_v { a(v) - (1/2)||v||^2 }.
///
/// The maximizer set is dual_norm(a) times an exposed face of the unit ball.
/// For strictly convex norms the face is a point; otherwise `vertices` holds
/// the extreme points of the face (already scaled by dual_norm(a)) and
/// `selected` is the representative picked by the selection rule.
struct LegendreResult {
  Eigen::VectorXd selected;
  bool unique = true;
  std::vector<Eigen::VectorXd> vertices;
};

struct ConvexityProbe {
  bool strictly_convex = true;
  // witness pair of unit vectors with midpoint on the sphere, when not
  Eigen::VectorXd u, v;
};

/// Norm on the horizontal layer together with its dual norm, the
/// subdifferential certificate for E = (1/2)||.||^2, and the feedback map
/// used to close the extremal ODE.
class NormModel {
 public:
  static NormModel euclidean(Eigen::MatrixXd metric);
  static NormModel lp(int dim, double p);
  static NormModel linf(int dim);
  static NormModel l1(int dim);
  static NormModel polyhedral(std::vector<Eigen::VectorXd> vertices,
                              Selection selection = {});

  NormKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double p_exponent() const { return p_; }
  const std::vector<Eigen::VectorXd>& vertices() const { return vertices_; }
  const Eigen::MatrixXd& metric() const { return metric_; }

  const Selection& selection() const { return selection_; }
  void set_selection(Selection s) { selection_ = std::move(s); }

  double norm(const HorizontalVector& x) const;
  double dual_norm(const Covector& a) const;

  /// Certificate for a ∈ ∂E(u), E = (1/2)||.||^2: equivalent to
  /// ||a||_* <= ||u|| and a(u) >= ||u||^2, checked with slack tol.
  bool subdiff_contains(const HorizontalVector& u, const Covector& a, double tol) const;

  /// Direct check of the subgradient inequality a(v-u) <= E(v) - E(u) + tol
  /// over a deterministic probe set (spheres of radii {||u||/2, ||u||, 2||u||, 1},
  /// 64 directions per circle slice, plus extreme directions of the ball).
  bool subdiff_contains_probe(const HorizontalVector& u, const Covector& a,
                              double tol) const;

  LegendreResult legendre_feedback(const Covector& a) const;
  LegendreResult legendre_feedback(const Covector& a, const Selection& sel) const;

  /// Exact classification for the built-in kinds; the sampled midpoint probe
  /// is used to produce a witness pair when the norm is not strictly convex.
  ConvexityProbe strict_convexity_probe(int n_samples) const;
  bool strictly_convex() const;

  /// For smooth kinds, the unique subdifferential of E at u (gradient).
  /// For non-smooth kinds returns a deterministic selection from ∂E(u).
  Covector subdifferential_at(const HorizontalVector& u) const;

  /// Sampled sanity check of homogeneity and the triangle inequality.
  bool validate(int n_samples, double tol, std::string* diagnostic = nullptr) const;

  static NormModel from_json(const nlohmann::json& j, int dim_hint);
  /// Accepts "euclidean", "lp:4", "linf", "l1", or a path to a JSON norm file.
  static NormModel from_reference(const std::string& ref, int dim_hint);
  nlohmann::json to_json() const;

 private:
  NormModel() = default;
  std::vector<Eigen::VectorXd> probe_directions(int per_slice) const;

  NormKind kind_ = NormKind::euclidean;
  int dim_ = 0;
  double p_ = 2.0;  // lp only
  double q_ = 2.0;  // dual exponent
  Eigen::MatrixXd metric_;
  Eigen::LLT<Eigen::MatrixXd> metric_llt_;
  std::vector<Eigen::VectorXd> vertices_;  // polyhedral only
  Eigen::MatrixXd vertex_matrix_;          // dim x n_vertices
  Selection selection_;
};

}  // namespace carnot

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"

namespace carnot {

using HorizontalVector = Eigen::VectorXd;  // components in the V1 basis
using VerticalVector = Eigen::VectorXd;    // components in the V2 basis
using Covector = Eigen::VectorXd;          // element of V1* in the dual basis

/// A step-2 stratified Lie algebra g = V1 ⊕ V2 described by structure
/// constants [X_i, X_j] = Σ_k c_k(i,j) Z_k, with each c_k skew-symmetric.
///
/// The group itself is handled in exponential coordinates of the first kind,
/// where the product is the (finite) step-2 BCH formula. All operations are
/// exact up to floating point; there is no series truncation anywhere.
class StepTwoAlgebra {
 public:
  struct BracketEntry {
    int i, j, k;  // 1-based: [X_i, X_j] += coeff * Z_k
    double coeff;
  };

  /// Builds from sparse bracket entries (i<j expected; skew completion applied).
  StepTwoAlgebra(int rank, int vdim, const std::vector<BracketEntry>& entries);

  /// Builds from full structure matrices; no skew completion, no validation.
  /// Used to probe validate_stratified with malformed constants.
  static StepTwoAlgebra from_raw_matrices(int rank, std::vector<Eigen::MatrixXd> c);

  int rank() const { return rank_; }  // dim V1
  int vdim() const { return static_cast<int>(c_.size()); }

  /// Structure matrix of the k-th vertical coordinate (0-based), r x r.
  const Eigen::MatrixXd& structure_matrix(int k) const { return c_.at(k); }

  /// [X, Y] expressed in the V2 basis; bilinear and antisymmetric.
  VerticalVector bracket(const HorizontalVector& X, const HorizontalVector& Y) const;

  struct ValidationReport {
    bool ok = false;
    std::string diagnostic;
  };

  /// Checks skew-symmetry of the constants and that the pairwise brackets
  /// span V2 (rank test with relative tolerance 1e-10 * sigma_max).
  ValidationReport validate_stratified() const;

  /// Heisenberg group H^n: rank 2n, vdim 1, [X_i, Y_i] = Z.
  static StepTwoAlgebra heisenberg(int n);

  /// Free step-2 algebra of rank r: vdim r(r-1)/2, vertical basis indexed by
  /// pairs (i,j), i<j, in lexicographic order.
  static StepTwoAlgebra free_step2(int r);

  static StepTwoAlgebra from_json(const nlohmann::json& j);

  /// Accepts "heisenberg:n", "free2:r", or a path to a JSON group file.
  static StepTwoAlgebra from_reference(const std::string& ref);

  nlohmann::json to_json() const;

 private:
  StepTwoAlgebra() = default;
  int rank_ = 0;
  std::vector<Eigen::MatrixXd> c_;  // vdim matrices, r x r
};

/// Point of the group in exponential coordinates: g = exp(x + z).
struct GroupPoint {
  Eigen::VectorXd x;  // horizontal part, R^r
  Eigen::VectorXd z;  // vertical part, R^m
};

GroupPoint identity(const StepTwoAlgebra& A);
GroupPoint exp_point(const StepTwoAlgebra& A, const HorizontalVector& X,
                     const VerticalVector& Z);
GroupPoint exp_horizontal(const StepTwoAlgebra& A, const HorizontalVector& X);

/// Group product: x = g.x + h.x, z = g.z + h.z + (1/2)[g.x, h.x].
GroupPoint multiply(const StepTwoAlgebra& A, const GroupPoint& g, const GroupPoint& h);

GroupPoint inverse(const StepTwoAlgebra& A, const GroupPoint& g);

/// Dilation automorphism: (x, z) -> (lambda x, lambda^2 z). Requires lambda > 0.
GroupPoint dilate(const StepTwoAlgebra& A, double lambda, const GroupPoint& g);

bool approx_equal(const GroupPoint& g, const GroupPoint& h, double tol);

}  // namespace carnot

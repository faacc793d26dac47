#include "carnot/algebra.hpp"

#include <Eigen/SVD>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace carnot {

namespace {

void check_dim(const StepTwoAlgebra& A, const Eigen::VectorXd& v, const char* what) {
  if (v.size() != A.rank()) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(A.rank()) + ", got " +
                                std::to_string(v.size()));
  }
}

void check_point(const StepTwoAlgebra& A, const GroupPoint& g, const char* what) {
  if (g.x.size() != A.rank() || g.z.size() != A.vdim()) {
    throw std::invalid_argument(std::string(what) + ": point dimensions (" +
                                std::to_string(g.x.size()) + "," +
                                std::to_string(g.z.size()) + ") do not match group (" +
                                std::to_string(A.rank()) + "," +
                                std::to_string(A.vdim()) + ")");
  }
}

}  // namespace

StepTwoAlgebra::StepTwoAlgebra(int rank, int vdim,
                               const std::vector<BracketEntry>& entries) {
  if (rank <= 0) throw std::invalid_argument("rank must be positive");
  if (vdim < 0) throw std::invalid_argument("vdim must be non-negative");
  const int max_vdim = rank * (rank - 1) / 2;
  if (vdim > max_vdim) {
    throw std::invalid_argument("vdim " + std::to_string(vdim) +
                                " exceeds r(r-1)/2 = " + std::to_string(max_vdim));
  }
  rank_ = rank;
  c_.assign(vdim, Eigen::MatrixXd::Zero(rank, rank));
  for (const auto& e : entries) {
    if (e.i < 1 || e.i > rank || e.j < 1 || e.j > rank || e.k < 1 || e.k > vdim) {
      throw std::invalid_argument("bracket entry indices out of range");
    }
    if (e.i == e.j) throw std::invalid_argument("bracket entry with i == j");
    c_[e.k - 1](e.i - 1, e.j - 1) += e.coeff;
    c_[e.k - 1](e.j - 1, e.i - 1) -= e.coeff;
  }
}

StepTwoAlgebra StepTwoAlgebra::from_raw_matrices(int rank,
                                                 std::vector<Eigen::MatrixXd> c) {
  StepTwoAlgebra A;
  A.rank_ = rank;
  for (const auto& m : c) {
    if (m.rows() != rank || m.cols() != rank) {
      throw std::invalid_argument("structure matrix has wrong shape");
    }
  }
  A.c_ = std::move(c);
  return A;
}

VerticalVector StepTwoAlgebra::bracket(const HorizontalVector& X,
                                       const HorizontalVector& Y) const {
  check_dim(*this, X, "bracket X");
  check_dim(*this, Y, "bracket Y");
  VerticalVector out(vdim());
  for (int k = 0; k < vdim(); ++k) out[k] = X.dot(c_[k] * Y);
  return out;
}

StepTwoAlgebra::ValidationReport StepTwoAlgebra::validate_stratified() const {
  ValidationReport rep;
  for (int k = 0; k < vdim(); ++k) {
    const double skew = (c_[k] + c_[k].transpose()).cwiseAbs().maxCoeff();
    if (skew > 0.0) {
      rep.diagnostic = "structure matrix " + std::to_string(k + 1) +
                       " is not skew-symmetric (max |c + c^T| = " +
                       std::to_string(skew) + ")";
      return rep;
    }
  }
  if (vdim() == 0) {
    rep.ok = true;
    rep.diagnostic = "abelian (vdim 0)";
    return rep;
  }
  // Columns are the bracket images [e_i, e_j] for i < j; V2 must be spanned.
  const int pairs = rank_ * (rank_ - 1) / 2;
  Eigen::MatrixXd images(vdim(), pairs);
  int col = 0;
  for (int i = 0; i < rank_; ++i) {
    for (int j = i + 1; j < rank_; ++j, ++col) {
      for (int k = 0; k < vdim(); ++k) images(k, col) = c_[k](i, j);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(images);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  const double tol = 1e-10 * smax;
  int rank_images = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > tol && sv[i] > 0.0) ++rank_images;
  }
  if (rank_images < vdim()) {
    rep.diagnostic = "bracket images span a subspace of dimension " +
                     std::to_string(rank_images) + " < vdim " +
                     std::to_string(vdim());
    return rep;
  }
  rep.ok = true;
  rep.diagnostic = "ok";
  return rep;
}

StepTwoAlgebra StepTwoAlgebra::heisenberg(int n) {
  if (n < 1) throw std::invalid_argument("heisenberg index must be >= 1");
  std::vector<BracketEntry> entries;
  entries.reserve(n);
  for (int i = 1; i <= n; ++i) entries.push_back({i, n + i, 1, 1.0});
  return StepTwoAlgebra(2 * n, 1, entries);
}

StepTwoAlgebra StepTwoAlgebra::free_step2(int r) {
  if (r < 2) throw std::invalid_argument("free2 rank must be >= 2");
  std::vector<BracketEntry> entries;
  int k = 1;
  for (int i = 1; i <= r; ++i) {
    for (int j = i + 1; j <= r; ++j) entries.push_back({i, j, k++, 1.0});
  }
  return StepTwoAlgebra(r, r * (r - 1) / 2, entries);
}

StepTwoAlgebra StepTwoAlgebra::from_json(const nlohmann::json& j) {
  const int rank = j.at("rank").get<int>();
  const int vdim = j.at("vdim").get<int>();
  std::vector<BracketEntry> entries;
  if (j.contains("brackets")) {
    for (const auto& b : j.at("brackets")) {
      entries.push_back({b.at("i").get<int>(), b.at("j").get<int>(),
                         b.at("k").get<int>(), b.at("coeff").get<double>()});
    }
  }
  StepTwoAlgebra A(rank, vdim, entries);
  const auto rep = A.validate_stratified();
  if (!rep.ok) {
    throw std::invalid_argument("group definition is not stratified: " + rep.diagnostic);
  }
  return A;
}

StepTwoAlgebra StepTwoAlgebra::from_reference(const std::string& ref) {
  const auto colon = ref.find(':');
  if (ref.rfind("heisenberg:", 0) == 0) {
    return heisenberg(std::stoi(ref.substr(colon + 1)));
  }
  if (ref.rfind("free2:", 0) == 0) {
    return free_step2(std::stoi(ref.substr(colon + 1)));
  }
  std::ifstream in(ref);
  if (!in) throw std::invalid_argument("cannot open group file: " + ref);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

nlohmann::json StepTwoAlgebra::to_json() const {
  nlohmann::json brackets = nlohmann::json::array();
  for (int k = 0; k < vdim(); ++k) {
    for (int i = 0; i < rank_; ++i) {
      for (int j = i + 1; j < rank_; ++j) {
        if (c_[k](i, j) != 0.0) {
          brackets.push_back({{"i", i + 1}, {"j", j + 1}, {"k", k + 1},
                              {"coeff", c_[k](i, j)}});
        }
      }
    }
  }
  return {{"rank", rank_}, {"vdim", vdim()}, {"brackets", brackets}};
}

GroupPoint identity(const StepTwoAlgebra& A) {
  return {Eigen::VectorXd::Zero(A.rank()), Eigen::VectorXd::Zero(A.vdim())};
}

GroupPoint exp_point(const StepTwoAlgebra& A, const HorizontalVector& X,
                     const VerticalVector& Z) {
  check_dim(A, X, "exp_point X");
  if (Z.size() != A.vdim()) throw std::invalid_argument("exp_point Z dimension");
  return {X, Z};
}

GroupPoint exp_horizontal(const StepTwoAlgebra& A, const HorizontalVector& X) {
  return exp_point(A, X, Eigen::VectorXd::Zero(A.vdim()));
}

GroupPoint multiply(const StepTwoAlgebra& A, const GroupPoint& g, const GroupPoint& h) {
  check_point(A, g, "multiply g");
  check_point(A, h, "multiply h");
  return {g.x + h.x, g.z + h.z + 0.5 * A.bracket(g.x, h.x)};
}

GroupPoint inverse(const StepTwoAlgebra& A, const GroupPoint& g) {
  check_point(A, g, "inverse g");
  return {-g.x, -g.z};
}

GroupPoint dilate(const StepTwoAlgebra& A, double lambda, const GroupPoint& g) {
  check_point(A, g, "dilate g");
  if (!(lambda > 0.0)) throw std::invalid_argument("dilation factor must be > 0");
  return {lambda * g.x, lambda * lambda * g.z};
}

bool approx_equal(const GroupPoint& g, const GroupPoint& h, double tol) {
  if (g.x.size() != h.x.size() || g.z.size() != h.z.size()) return false;
  const double dx = (g.x - h.x).cwiseAbs().maxCoeff();
  const double dz = g.z.size() > 0 ? (g.z - h.z).cwiseAbs().maxCoeff() : 0.0;
  return dx <= tol && dz <= tol;
}

}  // namespace carnot

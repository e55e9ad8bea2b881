#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "conan/errors.hpp"

namespace conan {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Node permutation: output node i is input node perm[i].
using Permutation = std::vector<Eigen::Index>;

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kSimplexTol = 1e-9;

/// Attributed graph in its optimal-transport view: node features, a symmetric
/// pairwise structure matrix and a probability vector over nodes.
template <typename Scalar>
struct AttributedGraph {
  Matrix<Scalar> H;      // n x d
  Matrix<Scalar> A;      // n x n
  Vector<Scalar> omega;  // n, on the simplex

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index d() const { return H.cols(); }
};

using Graph = AttributedGraph<double>;

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }
};

template <typename Scalar>
Vector<Scalar> uniform_weights(Eigen::Index n) {
  return Vector<Scalar>::Constant(n, Scalar(1) / Scalar(n));
}

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(static_cast<double>(m(i, j)))) return false;
  return true;
}

inline std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

template <typename Scalar>
ValidationReport validate_graph(const AttributedGraph<Scalar>& g) {
  ValidationReport report;
  auto& out = report.violations;
  const Eigen::Index n = g.A.rows();
  if (n < 1) out.push_back("graph has no nodes");
  if (g.A.cols() != n)
    out.push_back("A is " + std::to_string(g.A.rows()) + "x" + std::to_string(g.A.cols()) +
                  ", expected square");
  if (g.H.rows() != n)
    out.push_back("H has " + std::to_string(g.H.rows()) + " rows, expected " + std::to_string(n));
  if (g.H.cols() < 1) out.push_back("feature dimension must be positive");
  if (g.omega.size() != n)
    out.push_back("omega has length " + std::to_string(g.omega.size()) + ", expected " +
                  std::to_string(n));
  if (!out.empty()) return report;

  if (!detail::all_finite(g.H)) out.push_back("H has non-finite entries");
  if (!detail::all_finite(g.A)) out.push_back("A has non-finite entries");
  if (!detail::all_finite(g.omega)) out.push_back("omega has non-finite entries");
  if (!out.empty()) return report;

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double a = static_cast<double>(g.A(i, j));
      const double b = static_cast<double>(g.A(j, i));
      if (std::abs(a - b) > kSymmetryTol * std::max(1.0, std::abs(a))) {
        out.push_back("A is asymmetric at (" + std::to_string(i) + "," + std::to_string(j) +
                      "): " + detail::fmt_num(a) + " vs " + detail::fmt_num(b));
        i = n;
        break;
      }
    }
  }

  if ((g.omega.array() < Scalar(0)).any()) out.push_back("omega has negative entries");
  const double total = static_cast<double>(g.omega.sum());
  if (std::abs(total - 1.0) > kSimplexTol)
    out.push_back("weights sum " + detail::fmt_num(total) + " ≠ 1");
  return report;
}

/// Builds a graph, filling uniform weights when none are given and
/// symmetrizing A when it is symmetric up to float noise. Throws InvalidInput
/// when the result violates any graph invariant.
template <typename Scalar>
AttributedGraph<Scalar> make_graph(Matrix<Scalar> H, Matrix<Scalar> A,
                                   std::optional<Vector<Scalar>> omega = std::nullopt) {
  AttributedGraph<Scalar> g;
  g.H = std::move(H);
  g.A = std::move(A);
  g.omega = omega ? std::move(*omega) : uniform_weights<Scalar>(g.A.rows());
  auto report = validate_graph(g);
  if (!report.ok()) throw InvalidInput(report.violations.front());
  Matrix<Scalar> sym = (g.A + g.A.transpose()) / Scalar(2);
  g.A = std::move(sym);
  return g;
}

inline bool is_permutation(const Permutation& perm, Eigen::Index n) {
  if (static_cast<Eigen::Index>(perm.size()) != n) return false;
  std::vector<bool> seen(perm.size(), false);
  for (auto p : perm) {
    if (p < 0 || p >= n || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

inline Permutation inverse_permutation(const Permutation& perm) {
  Permutation inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<Eigen::Index>(i);
  return inv;
}

template <typename Scalar>
AttributedGraph<Scalar> permute_nodes(const AttributedGraph<Scalar>& g, const Permutation& perm) {
  const Eigen::Index n = g.n();
  if (static_cast<Eigen::Index>(perm.size()) != n) throw InvalidInput("permutation size ≠ n");
  if (!is_permutation(perm, n)) throw InvalidInput("permutation is not a bijection on [0, n)");
  AttributedGraph<Scalar> out;
  out.H.resize(n, g.d());
  out.A.resize(n, n);
  out.omega.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.H.row(i) = g.H.row(perm[i]);
    out.omega(i) = g.omega(perm[i]);
    for (Eigen::Index j = 0; j < n; ++j) out.A(i, j) = g.A(perm[i], perm[j]);
  }
  return out;
}

/// M[i,j] = |H1[i] - H2[j]|^p with the Euclidean norm. Differences are formed
/// explicitly so identical rows give an exact zero.
template <typename Scalar>
Matrix<Scalar> feature_distance_matrix(const Matrix<Scalar>& H1, const Matrix<Scalar>& H2,
                                       double p = 2.0) {
  if (H1.cols() != H2.cols())
    throw InvalidInput("feature dimension mismatch: " + std::to_string(H1.cols()) + " vs " +
                       std::to_string(H2.cols()));
  if (!(p > 0)) throw InvalidInput("exponent p must be positive");
  Matrix<Scalar> M(H1.rows(), H2.rows());
  for (Eigen::Index j = 0; j < H2.rows(); ++j) {
    for (Eigen::Index i = 0; i < H1.rows(); ++i) {
      const Scalar sq = (H1.row(i) - H2.row(j)).squaredNorm();
      if (p == 2.0) {
        M(i, j) = sq;
      } else {
        using std::pow;
        using std::sqrt;
        M(i, j) = pow(sqrt(sq), Scalar(p));
      }
    }
  }
  return M;
}

}  // namespace conan

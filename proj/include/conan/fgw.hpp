#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "conan/errors.hpp"
#include "conan/graph.hpp"
#include "conan/sinkhorn.hpp"

namespace conan {

enum class LossKind { Square, Kl };

inline const char* to_string(LossKind loss) { return loss == LossKind::Square ? "l2" : "kl"; }

inline LossKind parse_loss(const std::string& s) {
  if (s == "l2" || s == "square" || s == "L2") return LossKind::Square;
  if (s == "kl" || s == "KL") return LossKind::Kl;
  throw InvalidInput("unknown loss '" + s + "', expected l2 or kl");
}

struct FgwParams {
  double alpha = 0.5;
  double p = 2.0;
  double epsilon = 0.1;
  LossKind loss = LossKind::Square;
  int inner_iters = 30;
  int sinkhorn_iters = 50;
  int outer_iters = 10;
  /// relative-change threshold for the FGW and barycenter loops
  double tol = 1e-6;
  /// marginal-error threshold for each Sinkhorn solve
  double sinkhorn_tol = 1e-9;
  /// KL loss: lift structure entries in [0, floor) to floor before taking logs
  bool kl_clamp = true;
  double kl_floor = 1e-12;
  /// Start each Sinkhorn solve from the previous solve's potentials.
  bool warm_start = false;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in [0, 1]");
    if (!(p > 0.0)) throw InvalidInput("p must be positive");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw InvalidInput("epsilon must be positive");
    if (inner_iters < 1 || sinkhorn_iters < 1 || outer_iters < 1)
      throw InvalidInput("iteration caps must be >= 1");
    if (!(tol >= 0.0) || !(sinkhorn_tol >= 0.0))
      throw InvalidInput("tolerances must be non-negative");
  }
};

/// Factorization of L(a, b) = f1(a) + f2(b) - h1(a) h2(b) so that the
/// tensor-matrix product (L(A1, A2) (x) pi) = l_const - h1_a1 pi h2_a2^T.
template <typename Scalar>
struct LossDecomposition {
  Matrix<Scalar> l_const;
  Matrix<Scalar> h1_a1;
  Matrix<Scalar> h2_a2;
  LossKind loss = LossKind::Square;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> kl_prepare(const Matrix<Scalar>& A, bool clamp, double floor) {
  Matrix<Scalar> out = A;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      Scalar& v = out(i, j);
      if (clamp && v >= Scalar(0) && v < Scalar(floor)) v = Scalar(floor);
      if (!(v > Scalar(0))) throw InvalidInput("KL loss requires positive structure");
    }
  }
  return out;
}

/// Elementwise structure loss used by the brute-force paths.
template <typename Scalar>
Scalar pointwise_loss(Scalar a, Scalar b, LossKind loss, double p) {
  using std::abs;
  using std::log;
  using std::pow;
  if (loss == LossKind::Kl) return a * log(a / b) - a + b;
  const Scalar diff = abs(a - b);
  return p == 2.0 ? diff * diff : pow(diff, Scalar(p));
}

}  // namespace detail

template <typename Scalar>
LossDecomposition<Scalar> loss_decomposition(const Matrix<Scalar>& A1, const Matrix<Scalar>& A2,
                                             const Vector<Scalar>& omega1,
                                             const Vector<Scalar>& omega2, LossKind loss,
                                             bool kl_clamp = true, double kl_floor = 1e-12) {
  if (A1.rows() != A1.cols() || A2.rows() != A2.cols())
    throw InvalidInput("structure matrices must be square");
  if (omega1.size() != A1.rows() || omega2.size() != A2.rows())
    throw InvalidInput("weight vector length does not match structure matrix");

  LossDecomposition<Scalar> dec;
  dec.loss = loss;
  Matrix<Scalar> f1, f2;
  if (loss == LossKind::Square) {
    f1 = A1.array().square().matrix();
    f2 = A2.array().square().matrix();
    dec.h1_a1 = A1;
    dec.h2_a2 = Scalar(2) * A2;
  } else {
    const Matrix<Scalar> a1 = detail::kl_prepare(A1, kl_clamp, kl_floor);
    const Matrix<Scalar> a2 = detail::kl_prepare(A2, kl_clamp, kl_floor);
    f1 = (a1.array() * a1.array().log() - a1.array()).matrix();
    f2 = a2;
    dec.h1_a1 = a1;
    dec.h2_a2 = a2.array().log().matrix();
  }
  const Vector<Scalar> left = f1 * omega1;
  const Vector<Scalar> right = f2 * omega2;
  dec.l_const = left.replicate(1, A2.rows()) + right.transpose().replicate(A1.rows(), 1);
  if (!detail::all_finite(dec.l_const)) throw InvalidInput("structure loss is not finite");
  return dec;
}

/// (L(A1, A2) (x) pi)[i,j] = sum_kl L(A1[i,k], A2[j,l]) pi[k,l]
template <typename Scalar>
Matrix<Scalar> tensor_product(const LossDecomposition<Scalar>& dec, const Matrix<Scalar>& pi) {
  if (pi.rows() != dec.h1_a1.rows() || pi.cols() != dec.h2_a2.rows())
    throw InvalidInput("coupling shape does not match the loss decomposition");
  return dec.l_const - dec.h1_a1 * pi * dec.h2_a2.transpose();
}

/// C = (1 - alpha) M + 2 alpha (L (x) pi), the linearized cost of one FGW step.
template <typename Scalar>
Matrix<Scalar> apply_cost_tensor(const LossDecomposition<Scalar>& dec, const Matrix<Scalar>& M,
                                 const Matrix<Scalar>& pi, double alpha) {
  if (M.rows() != dec.l_const.rows() || M.cols() != dec.l_const.cols())
    throw InvalidInput("feature cost shape does not match the loss decomposition");
  const Scalar a(alpha);
  return (Scalar(1) - a) * M + Scalar(2) * a * tensor_product(dec, pi);
}

/// O(n^4) reference: sum_kl L(A1[i,k], A2[j,l]) pi[k,l] straight from the loss.
template <typename Scalar>
Matrix<Scalar> tensor_product_direct(const Matrix<Scalar>& A1, const Matrix<Scalar>& A2,
                                     const Matrix<Scalar>& pi, LossKind loss, double p = 2.0) {
  const Eigen::Index n1 = A1.rows();
  const Eigen::Index n2 = A2.rows();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(n1, n2);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j) {
      Scalar s(0);
      for (Eigen::Index k = 0; k < n1; ++k)
        for (Eigen::Index l = 0; l < n2; ++l)
          s += detail::pointwise_loss(A1(i, k), A2(j, l), loss, p) * pi(k, l);
      out(i, j) = s;
    }
  return out;
}

namespace detail {

template <typename Scalar>
Scalar objective_from(const Matrix<Scalar>& M, const LossDecomposition<Scalar>& dec,
                      const Matrix<Scalar>& pi, double alpha) {
  const Scalar a(alpha);
  const Scalar feature = (M.array() * pi.array()).sum();
  const Scalar structure = (tensor_product(dec, pi).array() * pi.array()).sum();
  return (Scalar(1) - a) * feature + a * structure;
}

template <typename Scalar>
void check_coupling(const Matrix<Scalar>& pi, const Vector<Scalar>& w1, const Vector<Scalar>& w2) {
  if (pi.rows() != w1.size() || pi.cols() != w2.size())
    throw InvalidInput("coupling is " + std::to_string(pi.rows()) + "x" +
                       std::to_string(pi.cols()) + ", expected " + std::to_string(w1.size()) +
                       "x" + std::to_string(w2.size()));
  if (!all_finite(pi)) throw InvalidInput("coupling has non-finite entries");
  if ((pi.array() < Scalar(0)).any()) throw InvalidInput("coupling has negative entries");
  if (marginal_error(pi, w1, w2) > 1e-3)
    throw InvalidInput("coupling marginals do not match the graph weights");
}

}  // namespace detail

/// <(1 - alpha) M + alpha L(A1, A2) (x) pi, pi> at a fixed coupling. The
/// square loss with p = 2 and the KL loss go through the decomposition; any
/// other exponent is evaluated from the 4-tensor directly.
template <typename Scalar>
Scalar fgw_objective(const AttributedGraph<Scalar>& g1, const AttributedGraph<Scalar>& g2,
                     const Matrix<Scalar>& pi, double alpha, double p = 2.0,
                     LossKind loss = LossKind::Square) {
  detail::check_coupling(pi, g1.omega, g2.omega);
  const Matrix<Scalar> M = feature_distance_matrix(g1.H, g2.H, p);
  if (loss == LossKind::Square && p != 2.0) {
    const Scalar a(alpha);
    const Scalar feature = (M.array() * pi.array()).sum();
    const Matrix<Scalar> lp = tensor_product_direct(g1.A, g2.A, pi, loss, p);
    return (Scalar(1) - a) * feature + a * (lp.array() * pi.array()).sum();
  }
  const auto dec = loss_decomposition(g1.A, g2.A, g1.omega, g2.omega, loss);
  return detail::objective_from(M, dec, pi, alpha);
}

template <typename Scalar>
struct FgwResult {
  Coupling<Scalar> coupling;
  /// transport cost at the returned coupling, entropy excluded
  Scalar cost = Scalar(0);
  /// cost - epsilon * H(pi)
  Scalar value_entropic = Scalar(0);
  int inner_iterations = 0;
  bool converged = false;
  double marginal_err = 0.0;
  int sinkhorn_sweeps = 0;
  /// objective at every iterate, starting from the product coupling
  std::vector<double> objective_trace;
  DualPotentials<Scalar> potentials;
};

/// Entropic FGW by repeated entropic OT solves on the linearized cost.
/// Starts from the product coupling and stops when the relative Frobenius
/// change of pi drops below params.tol or after params.inner_iters solves.
template <typename Scalar>
FgwResult<Scalar> entropic_fgw(const AttributedGraph<Scalar>& g1,
                               const AttributedGraph<Scalar>& g2, const FgwParams& params,
                               const Matrix<Scalar>* initial_pi = nullptr) {
  params.validate();
  if (params.p != 2.0) throw InvalidInput("entropic_fgw supports p = 2 only");
  if (g1.d() != g2.d())
    throw InvalidInput("feature dimension mismatch: " + std::to_string(g1.d()) + " vs " +
                       std::to_string(g2.d()));
  for (const auto* g : {&g1, &g2}) {
    auto report = validate_graph(*g);
    if (!report.ok()) throw InvalidInput(report.violations.front());
  }

  const Matrix<Scalar> M = feature_distance_matrix(g1.H, g2.H, params.p);
  const auto dec = loss_decomposition(g1.A, g2.A, g1.omega, g2.omega, params.loss,
                                      params.kl_clamp, params.kl_floor);
  const Scalar eps(params.epsilon);

  FgwResult<Scalar> res;
  Matrix<Scalar> pi = initial_pi ? *initial_pi : Matrix<Scalar>(g1.omega * g2.omega.transpose());
  res.objective_trace.push_back(static_cast<double>(detail::objective_from(M, dec, pi, params.alpha)));

  DualPotentials<Scalar> pot;
  for (int k = 1; k <= params.inner_iters; ++k) {
    const Matrix<Scalar> C = apply_cost_tensor(dec, M, pi, params.alpha);
    auto sk = sinkhorn_lse<Scalar>(C, g1.omega, g2.omega, eps, params.sinkhorn_iters,
                                   params.sinkhorn_tol,
                                   (params.warm_start && k > 1) ? &pot : nullptr);
    pot = sk.potentials;
    res.marginal_err = sk.marginal_err;
    res.sinkhorn_sweeps += sk.iterations;

    const double denom = std::max(static_cast<double>(pi.norm()), 1e-300);
    const double change = static_cast<double>((sk.coupling.pi - pi).norm()) / denom;
    pi = std::move(sk.coupling.pi);
    res.inner_iterations = k;
    res.objective_trace.push_back(
        static_cast<double>(detail::objective_from(M, dec, pi, params.alpha)));
    if (change < params.tol) {
      res.converged = true;
      break;
    }
  }

  res.cost = detail::objective_from(M, dec, pi, params.alpha);
  res.value_entropic = res.cost - eps * entropy(pi);
  res.potentials = std::move(pot);
  res.coupling.pi = std::move(pi);
  res.coupling.mu1 = g1.omega;
  res.coupling.mu2 = g2.omega;
  return res;
}

}  // namespace conan

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "conan/errors.hpp"
#include "conan/graph.hpp"

namespace conan {

/// Transport plan together with the marginals it is meant to satisfy.
template <typename Scalar>
struct Coupling {
  Matrix<Scalar> pi;
  Vector<Scalar> mu1;
  Vector<Scalar> mu2;
};

template <typename Scalar>
struct DualPotentials {
  Vector<Scalar> f;
  Vector<Scalar> g;
};

template <typename Scalar>
struct SinkhornResult {
  Coupling<Scalar> coupling;
  DualPotentials<Scalar> potentials;
  int iterations = 0;
  double marginal_err = std::numeric_limits<double>::infinity();
  bool converged = false;
  /// marginal_err after every full (f, g) sweep
  std::vector<double> error_trace;
};

/// max(|pi 1 - mu1|_1, |pi^T 1 - mu2|_1)
template <typename Scalar>
double marginal_error(const Matrix<Scalar>& pi, const Vector<Scalar>& mu1,
                      const Vector<Scalar>& mu2) {
  if (pi.rows() != mu1.size() || pi.cols() != mu2.size())
    throw InvalidInput("coupling is " + std::to_string(pi.rows()) + "x" +
                       std::to_string(pi.cols()) + " but marginals have lengths " +
                       std::to_string(mu1.size()) + " and " + std::to_string(mu2.size()));
  const double row_err = static_cast<double>((pi.rowwise().sum() - mu1).cwiseAbs().sum());
  const double col_err =
      static_cast<double>((pi.colwise().sum().transpose() - mu2).cwiseAbs().sum());
  return std::max(row_err, col_err);
}

/// H(pi) = -sum pi (log pi - 1), with 0 log 0 = 0.
template <typename Scalar>
Scalar entropy(const Matrix<Scalar>& pi) {
  using std::log;
  Scalar h(0);
  for (Eigen::Index j = 0; j < pi.cols(); ++j) {
    for (Eigen::Index i = 0; i < pi.rows(); ++i) {
      const Scalar v = pi(i, j);
      if (v < Scalar(0)) throw InvalidInput("entropy: coupling has a negative entry");
      if (v > Scalar(0)) h -= v * (log(v) - Scalar(1));
    }
  }
  return h;
}

namespace detail {

/// Row-wise log-sum-exp with max subtraction.
template <typename Scalar>
Vector<Scalar> rowwise_lse(const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x) {
  Vector<Scalar> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Scalar m = x.row(i).maxCoeff();
    if (!std::isfinite(static_cast<double>(m))) {
      out(i) = m;
      continue;
    }
    out(i) = m + std::log((x.row(i) - m).exp().sum());
  }
  return out;
}

template <typename Scalar>
void check_marginal(const Vector<Scalar>& mu, const char* name) {
  if (mu.size() < 1) throw InvalidInput(std::string(name) + " is empty");
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (!(mu(i) > Scalar(0)) || !std::isfinite(static_cast<double>(mu(i))))
      throw InvalidInput("marginal must be strictly positive");
}

}  // namespace detail

/// pi = exp((f + g - C) / eps) * (mu1 mu2^T), evaluated in the log domain.
template <typename Scalar>
Matrix<Scalar> coupling_from_potentials(const Matrix<Scalar>& C, const Vector<Scalar>& mu1,
                                        const Vector<Scalar>& mu2,
                                        const DualPotentials<Scalar>& pot, Scalar epsilon) {
  Matrix<Scalar> pi(C.rows(), C.cols());
  const Vector<Scalar> a = pot.f / epsilon + mu1.array().log().matrix();
  const Vector<Scalar> b = pot.g / epsilon + mu2.array().log().matrix();
  for (Eigen::Index j = 0; j < C.cols(); ++j)
    for (Eigen::Index i = 0; i < C.rows(); ++i)
      pi(i, j) = std::exp(a(i) + b(j) - C(i, j) / epsilon);
  return pi;
}

/// Entropic OT in the dual (log) domain with stabilized log-sum-exp sweeps.
/// Stops once marginal_error of the current coupling drops below tol, or
/// after max_iters sweeps. Potentials start at zero unless `warm` is given.
template <typename Scalar>
SinkhornResult<Scalar> sinkhorn_lse(const Matrix<Scalar>& C, const Vector<Scalar>& mu1,
                                    const Vector<Scalar>& mu2, Scalar epsilon, int max_iters,
                                    double tol, const DualPotentials<Scalar>* warm = nullptr) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (!(epsilon > Scalar(0))) throw InvalidInput("epsilon must be positive");
  if (max_iters < 1) throw InvalidInput("sinkhorn iteration cap must be >= 1");
  detail::check_marginal(mu1, "mu1");
  detail::check_marginal(mu2, "mu2");
  if (C.rows() != mu1.size() || C.cols() != mu2.size())
    throw InvalidInput("cost matrix shape does not match marginals");
  if (!detail::all_finite(C)) throw InvalidInput("cost matrix has non-finite entries");

  const Eigen::Index n1 = C.rows();
  const Eigen::Index n2 = C.cols();
  const Vector<Scalar> log_mu1 = mu1.array().log().matrix();
  const Vector<Scalar> log_mu2 = mu2.array().log().matrix();
  const Array neg_c = -C.array() / epsilon;

  SinkhornResult<Scalar> res;
  auto& pot = res.potentials;
  if (warm && warm->f.size() == n1 && warm->g.size() == n2) {
    pot = *warm;
  } else {
    pot.f = Vector<Scalar>::Zero(n1);
    pot.g = Vector<Scalar>::Zero(n2);
  }

  for (int it = 1; it <= max_iters; ++it) {
    // f[i] = -eps LSE_k(log mu2[k] + g[k]/eps - C[i,k]/eps)
    const Vector<Scalar> row_shift = log_mu2 + pot.g / epsilon;
    Array xf = neg_c.rowwise() + row_shift.transpose().array();
    pot.f = -epsilon * detail::rowwise_lse<Scalar>(xf);
    // g[j] = -eps LSE_k(log mu1[k] + f[k]/eps - C[k,j]/eps)
    const Vector<Scalar> col_shift = log_mu1 + pot.f / epsilon;
    Array xg = neg_c.transpose().rowwise() + col_shift.transpose().array();
    pot.g = -epsilon * detail::rowwise_lse<Scalar>(xg);

    if (!detail::all_finite(pot.f) || !detail::all_finite(pot.g))
      throw SolverError("sinkhorn produced non-finite potentials at sweep " +
                        std::to_string(it));

    res.coupling.pi = coupling_from_potentials(C, mu1, mu2, pot, epsilon);
    res.marginal_err = marginal_error(res.coupling.pi, mu1, mu2);
    res.error_trace.push_back(res.marginal_err);
    res.iterations = it;
    if (res.marginal_err < tol) {
      res.converged = true;
      break;
    }
  }
  res.coupling.mu1 = mu1;
  res.coupling.mu2 = mu2;
  return res;
}

}  // namespace conan

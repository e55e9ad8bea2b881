#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "conan/errors.hpp"
#include "conan/fgw.hpp"
#include "conan/graph.hpp"
#include "conan/parallel.hpp"

namespace conan {

template <typename Scalar>
struct BarycenterResult {
  AttributedGraph<Scalar> graph;
  /// one coupling per input graph, in input order; pi_s in Pi(omega_bar, omega_s)
  std::vector<Coupling<Scalar>> couplings;
  int outer_iterations = 0;
  std::vector<double> objective_trace;
  bool converged = false;
};

struct BarycenterOptions {
  /// 0 picks the hardware concurrency (FGW_THREADS still wins)
  int threads = 0;
  /// KL structure update: force a zero diagonal afterwards
  bool kl_zero_diagonal = true;
};

namespace detail {

template <typename Scalar>
void check_simplex(const Vector<Scalar>& w, const char* name, bool strictly_positive) {
  if (w.size() < 1) throw InvalidInput(std::string(name) + " is empty");
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double v = static_cast<double>(w(i));
    if (!std::isfinite(v) || v < 0.0 || (strictly_positive && v == 0.0))
      throw InvalidInput(strictly_positive ? "barycenter weight must be positive"
                                           : std::string(name) + " has negative entries");
  }
  if (std::abs(static_cast<double>(w.sum()) - 1.0) > kSimplexTol)
    throw InvalidInput(std::string(name) + " does not sum to 1");
}

template <typename Scalar>
void check_update_inputs(const std::vector<Matrix<Scalar>>& couplings, std::size_t k_inputs,
                         const Vector<Scalar>& omega_bar, const Vector<Scalar>& lambdas) {
  if (couplings.empty()) throw InvalidInput("no couplings given");
  if (couplings.size() != k_inputs)
    throw InvalidInput("got " + std::to_string(couplings.size()) + " couplings for " +
                       std::to_string(k_inputs) + " inputs");
  if (lambdas.size() != static_cast<Eigen::Index>(couplings.size()))
    throw InvalidInput("lambda length does not match the number of inputs");
  check_simplex(omega_bar, "omega_bar", true);
  check_simplex(lambdas, "lambdas", false);
  for (const auto& pi : couplings)
    if (pi.rows() != omega_bar.size())
      throw InvalidInput("coupling row count does not match the barycenter size");
}

}  // namespace detail

/// Closed-form structure step for fixed couplings:
///   square loss: A_bar = (sum_s l_s pi_s A_s pi_s^T) / (w w^T)
///   KL loss:     A_bar = exp((sum_s l_s pi_s log(A_s) pi_s^T) / (w w^T))
/// The sum runs in index order and the result is symmetrized.
template <typename Scalar>
Matrix<Scalar> structure_update(const std::vector<Matrix<Scalar>>& couplings,
                                const std::vector<Matrix<Scalar>>& structures,
                                const Vector<Scalar>& omega_bar, const Vector<Scalar>& lambdas,
                                LossKind loss, bool kl_zero_diagonal = true,
                                double kl_floor = 1e-12) {
  detail::check_update_inputs(couplings, structures.size(), omega_bar, lambdas);
  const Eigen::Index n = omega_bar.size();
  Matrix<Scalar> acc = Matrix<Scalar>::Zero(n, n);
  for (std::size_t s = 0; s < couplings.size(); ++s) {
    const auto& pi = couplings[s];
    if (pi.cols() != structures[s].rows() || structures[s].rows() != structures[s].cols())
      throw InvalidInput("coupling " + std::to_string(s) + " does not match its structure");
    if (loss == LossKind::Square) {
      acc += lambdas(s) * (pi * structures[s] * pi.transpose());
    } else {
      const Matrix<Scalar> log_a =
          detail::kl_prepare(structures[s], true, kl_floor).array().log().matrix();
      acc += lambdas(s) * (pi * log_a * pi.transpose());
    }
  }
  Matrix<Scalar> out = acc.array() / (omega_bar * omega_bar.transpose()).array();
  if (loss == LossKind::Kl) {
    out = out.array().exp().matrix();
    if (kl_zero_diagonal) out.diagonal().setZero();
  }
  Matrix<Scalar> sym = (out + out.transpose()) / Scalar(2);
  return sym;
}

/// H_bar = diag(1 / w) sum_s l_s pi_s H_s
template <typename Scalar>
Matrix<Scalar> feature_update(const std::vector<Matrix<Scalar>>& couplings,
                              const std::vector<Matrix<Scalar>>& features,
                              const Vector<Scalar>& omega_bar, const Vector<Scalar>& lambdas) {
  detail::check_update_inputs(couplings, features.size(), omega_bar, lambdas);
  const Eigen::Index d = features.front().cols();
  Matrix<Scalar> acc = Matrix<Scalar>::Zero(omega_bar.size(), d);
  for (std::size_t s = 0; s < couplings.size(); ++s) {
    if (features[s].cols() != d) throw InvalidInput("feature dimension mismatch across inputs");
    if (couplings[s].cols() != features[s].rows())
      throw InvalidInput("coupling " + std::to_string(s) + " does not match its features");
    acc += lambdas(s) * (couplings[s] * features[s]);
  }
  return omega_bar.cwiseInverse().asDiagonal() * acc;
}

namespace detail {

/// Ordering of input graphs that ignores both list order and node labels,
/// so the solve (warm start and reduction order) is a function of the set.
template <typename Scalar>
std::vector<std::size_t> canonical_order(const std::vector<AttributedGraph<Scalar>>& graphs) {
  auto sorted_values = [](const auto& m) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) v.push_back(static_cast<double>(m(i, j)));
    std::sort(v.begin(), v.end());
    return v;
  };
  struct Key {
    Eigen::Index n;
    std::vector<double> a, h, w;
  };
  std::vector<Key> keys;
  keys.reserve(graphs.size());
  for (const auto& g : graphs)
    keys.push_back({g.n(), sorted_values(g.A), sorted_values(g.H), sorted_values(g.omega)});
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const Key& a = keys[x];
    const Key& b = keys[y];
    return std::tie(a.n, a.a, a.h, a.w) < std::tie(b.n, b.a, b.h, b.w);
  });
  return order;
}

/// Nearest-index resampling of a graph to n_bar nodes (identity when sizes match).
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> resample(const AttributedGraph<Scalar>& g,
                                                   Eigen::Index n_bar) {
  const Eigen::Index n = g.n();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_bar));
  for (Eigen::Index i = 0; i < n_bar; ++i) idx[i] = (i * n) / n_bar;
  Matrix<Scalar> A(n_bar, n_bar), H(n_bar, g.d());
  for (Eigen::Index i = 0; i < n_bar; ++i) {
    H.row(i) = g.H.row(idx[i]);
    for (Eigen::Index j = 0; j < n_bar; ++j) A(i, j) = g.A(idx[i], idx[j]);
  }
  return {A, H};
}

template <typename Scalar>
double relative_change(const Matrix<Scalar>& next, const Matrix<Scalar>& prev) {
  const double diff = static_cast<double>((next - prev).norm());
  const double base = static_cast<double>(prev.norm());
  if (base == 0.0) return diff == 0.0 ? 0.0 : diff / std::max(static_cast<double>(next.norm()), 1e-300);
  return diff / base;
}

}  // namespace detail

/// Entropic FGW barycenter by block-coordinate descent: K entropic FGW
/// couplings from the current barycenter, then the closed-form structure and
/// feature updates, until max(rel dA, rel dH) < tol or outer_iters rounds.
///
/// n_bar defaults to the common input size (required when sizes differ),
/// omega_bar to uniform and lambdas to 1/K. The warm start is the first graph
/// in a label- and order-independent canonical ordering.
template <typename Scalar>
BarycenterResult<Scalar> barycenter(const std::vector<AttributedGraph<Scalar>>& graphs,
                                    std::optional<Eigen::Index> n_bar_opt,
                                    std::optional<Vector<Scalar>> omega_bar_opt,
                                    std::optional<Vector<Scalar>> lambdas_opt,
                                    const FgwParams& params,
                                    const BarycenterOptions& options = {}) {
  params.validate();
  if (graphs.empty()) throw InvalidInput("barycenter needs at least one input graph");
  const std::size_t K = graphs.size();
  const Eigen::Index d = graphs.front().d();
  for (std::size_t s = 0; s < K; ++s) {
    auto report = validate_graph(graphs[s]);
    if (!report.ok())
      throw InvalidInput("graph " + std::to_string(s) + ": " + report.violations.front());
    if (graphs[s].d() != d) throw InvalidInput("feature dimension mismatch across inputs");
  }

  Eigen::Index n_bar = 0;
  if (n_bar_opt) {
    n_bar = *n_bar_opt;
  } else {
    n_bar = graphs.front().n();
    for (const auto& g : graphs)
      if (g.n() != n_bar) throw InvalidInput("inputs differ in size; pass n_bar explicitly");
  }
  if (n_bar < 1) throw InvalidInput("n_bar must be >= 1");

  const Vector<Scalar> omega_bar =
      omega_bar_opt ? *omega_bar_opt : uniform_weights<Scalar>(n_bar);
  if (omega_bar.size() != n_bar) throw InvalidInput("omega_bar length does not match n_bar");
  detail::check_simplex(omega_bar, "omega_bar", true);
  const Vector<Scalar> lambdas =
      lambdas_opt ? *lambdas_opt : uniform_weights<Scalar>(static_cast<Eigen::Index>(K));
  if (lambdas.size() != static_cast<Eigen::Index>(K))
    throw InvalidInput("lambda length does not match the number of inputs");
  detail::check_simplex(lambdas, "lambdas", false);

  // Everything below runs in canonical order; results map back at the end.
  const auto order = detail::canonical_order(graphs);
  std::vector<Matrix<Scalar>> structures, features;
  Vector<Scalar> lam(static_cast<Eigen::Index>(K));
  for (std::size_t r = 0; r < K; ++r) {
    structures.push_back(graphs[order[r]].A);
    features.push_back(graphs[order[r]].H);
    lam(static_cast<Eigen::Index>(r)) = lambdas(static_cast<Eigen::Index>(order[r]));
  }

  BarycenterResult<Scalar> res;
  auto& bary = res.graph;
  std::tie(bary.A, bary.H) = detail::resample(graphs[order.front()], n_bar);
  bary.omega = omega_bar;

  const int threads = resolve_threads(options.threads);
  std::vector<Matrix<Scalar>> pis(K);
  std::vector<double> costs(K);
  for (int outer = 1; outer <= params.outer_iters; ++outer) {
    parallel_for(K, threads, [&](std::size_t r) {
      auto fgw = entropic_fgw(bary, graphs[order[r]], params);
      pis[r] = std::move(fgw.coupling.pi);
    });

    Matrix<Scalar> A_next = structure_update(pis, structures, omega_bar, lam, params.loss,
                                             options.kl_zero_diagonal, params.kl_floor);
    Matrix<Scalar> H_next = feature_update(pis, features, omega_bar, lam);
    if (!detail::all_finite(A_next) || !detail::all_finite(H_next))
      throw SolverError("barycenter update produced non-finite values");
    const double change = std::max(detail::relative_change(A_next, bary.A),
                                   detail::relative_change(H_next, bary.H));
    bary.A = std::move(A_next);
    bary.H = std::move(H_next);

    double objective = 0.0;
    for (std::size_t r = 0; r < K; ++r) {
      const auto& g = graphs[order[r]];
      const Matrix<Scalar> M = feature_distance_matrix(bary.H, g.H, params.p);
      const auto dec = loss_decomposition(bary.A, g.A, bary.omega, g.omega, params.loss,
                                          params.kl_clamp, params.kl_floor);
      objective += static_cast<double>(lam(static_cast<Eigen::Index>(r))) *
                   static_cast<double>(detail::objective_from(M, dec, pis[r], params.alpha));
    }
    res.objective_trace.push_back(objective);
    res.outer_iterations = outer;
    if (change < params.tol) {
      res.converged = true;
      break;
    }
  }

  res.couplings.resize(K);
  for (std::size_t r = 0; r < K; ++r) {
    auto& c = res.couplings[order[r]];
    c.pi = std::move(pis[r]);
    c.mu1 = omega_bar;
    c.mu2 = graphs[order[r]].omega;
  }
  return res;
}

}  // namespace conan

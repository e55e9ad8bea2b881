#include "conan/bench.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "conan/barycenter.hpp"
#include "conan/parallel.hpp"

namespace conan {
namespace {

bool two_node_uniform(const Graph& g) {
  return g.n() == 2 && std::abs(g.omega(0) - 0.5) <= kSimplexTol && std::abs(g.omega(1) - 0.5) <= kSimplexTol;
}

MatrixXd two_node_coupling(double t) {
  MatrixXd pi(2, 2);
  pi << t, 0.5 - t, 0.5 - t, t;
  return pi;
}

bool is_uniform(const Graph& g) {
  return (g.omega.array() - 1.0 / static_cast<double>(g.n())).abs().maxCoeff() <= kSimplexTol;
}

}  // namespace

double fgw_objective_direct(const Graph& g1, const Graph& g2, const MatrixXd& pi, double alpha, double p) {
  const Eigen::Index n1 = g1.n(), n2 = g2.n();
  double feature = 0, structure = 0;
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j) {
      if (pi(i, j) == 0) continue;
      feature += std::pow((g1.H.row(i) - g2.H.row(j)).norm(), p) * pi(i, j);
      for (Eigen::Index k = 0; k < n1; ++k)
        for (Eigen::Index l = 0; l < n2; ++l)
          structure += std::pow(std::abs(g1.A(i, k) - g2.A(j, l)), p) * pi(i, j) * pi(k, l);
    }
  return (1 - alpha) * feature + alpha * structure;
}

double exact_fgw_two_node(const Graph& g1, const Graph& g2, double alpha, double p, int grid_steps) {
  if (!two_node_uniform(g1) || !two_node_uniform(g2))
    throw InvalidInput("oracle supports 2-node uniform only");
  if (g1.d() != g2.d()) throw InvalidInput("feature dimension mismatch");
  if (grid_steps < 2) throw InvalidInput("grid_steps must be >= 2");
  const auto f = [&](double t) { return fgw_objective_direct(g1, g2, two_node_coupling(t), alpha, p); };

  const double h = 0.5 / (grid_steps - 1);
  int best = 0;
  double best_val = f(0.0);
  for (int k = 1; k < grid_steps; ++k) {
    const double v = f(k * h);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  double lo = std::max(0.0, (best - 1) * h), hi = std::min(0.5, (best + 1) * h);
  while (hi - lo > 1e-10) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (f(m1) <= f(m2))
      hi = m2;
    else
      lo = m1;
  }
  return std::min(best_val, f(0.5 * (lo + hi)));
}

std::vector<Eigen::Index> hungarian(const MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw InvalidInput("assignment needs a square cost matrix");
  if (!detail::all_finite(cost)) throw InvalidInput("assignment cost is not finite");
  // shortest augmenting paths with potentials, 1-based with a virtual column 0
  const Eigen::Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Eigen::Index> match(n + 1, 0), way(n + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const Eigen::Index i0 = match[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Eigen::Index> col(n);
  for (Eigen::Index j = 1; j <= n; ++j) col[match[j] - 1] = j - 1;
  return col;
}

MatrixXd bound_ground_cost(const Graph& g1, const Graph& g2, double alpha, double p) {
  if (g1.n() != g2.n()) throw InvalidInput("bound check needs graphs on a shared node set (equal n)");
  if (g1.d() != g2.d()) throw InvalidInput("feature dimension mismatch");
  const Eigen::Index n = g1.n();
  MatrixXd D(n, n);
  const double c = std::pow(2.0, p - 1) * alpha;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = (g1.A.row(i) - g2.A.row(j)).cwiseAbs().maxCoeff();
      const double f = (g1.H.row(i) - g2.H.row(j)).norm();
      D(i, j) = std::pow((1 - alpha) * f + c * s, p);
    }
  return D;
}

BoundCheck wasserstein_bound_check(const Graph& g1, const Graph& g2, double alpha, double p,
                                   double epsilon, double slack) {
  if (!is_uniform(g1) || !is_uniform(g2)) throw InvalidInput("bound check needs uniform node weights");
  const MatrixXd D = bound_ground_cost(g1, g2, alpha, p);
  const auto col = hungarian(D);
  double w = 0;
  for (Eigen::Index i = 0; i < D.rows(); ++i) w += D(i, col[i]);
  w /= static_cast<double>(D.rows());

  FgwParams params;
  params.alpha = alpha;
  params.p = p;
  params.epsilon = epsilon;
  params.sinkhorn_iters = 2000;
  params.inner_iters = 100;
  // FGW is non-convex and the product coupling is a stationary point whenever
  // both graphs have a node symmetry, so also descend from the optimal matching
  MatrixXd matching = MatrixXd::Zero(D.rows(), D.cols());
  for (Eigen::Index i = 0; i < D.rows(); ++i) matching(i, col[i]) = 1.0 / static_cast<double>(D.rows());
  BoundCheck out;
  out.fgw_cost = std::min(entropic_fgw(g1, g2, params).cost, entropic_fgw(g1, g2, params, &matching).cost);
  out.w_bound = w;
  out.slack = slack;
  out.holds = out.fgw_cost <= out.w_bound + slack;
  return out;
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t k, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(trial)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("slope needs at least two points");
  const Eigen::Index m = static_cast<Eigen::Index>(x.size());
  VectorXd lx(m), ly(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) return std::numeric_limits<double>::quiet_NaN();
    lx(i) = std::log(x[i]);
    ly(i) = std::log(y[i]);
  }
  const VectorXd cx = lx.array() - lx.mean();
  const VectorXd cy = ly.array() - ly.mean();
  const double sxx = cx.squaredNorm();
  if (sxx == 0) return std::numeric_limits<double>::quiet_NaN();
  return cx.dot(cy) / sxx;
}

RateReport convergence_experiment(const Conformer& base, double sigma, const std::vector<int>& k_values,
                                  int trials, const EncoderWeights& enc, const FgwParams& params,
                                  std::uint64_t seed, int threads) {
  if (k_values.size() < 2) throw InvalidInput("convergence experiment needs at least two K values");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] < 1) throw InvalidInput("K values must be >= 1");
    if (i > 0 && k_values[i] <= k_values[i - 1]) throw InvalidInput("K values must be strictly increasing");
  }
  if (trials < 1) throw InvalidInput("trials must be >= 1");
  if (!(sigma >= 0)) throw InvalidInput("sigma must be >= 0");
  validate_conformer(base);

  const auto sample_graphs = [&](int K, std::uint64_t cell_seed) {
    std::mt19937_64 rng(cell_seed);
    std::vector<Graph> graphs;
    for (int k = 0; k < K; ++k) graphs.push_back(conformer_to_graph(perturb_conformer(base, sigma, rng()), enc));
    return graphs;
  };
  BarycenterOptions serial;
  serial.threads = 1;
  FgwParams cost_params = params;
  cost_params.epsilon = 0.01;

  RateReport rep;
  rep.k_values = k_values;
  rep.trials = trials;
  rep.seed = seed;
  rep.sigma = sigma;
  rep.k_ref = 4 * k_values.back();

  const Graph ref = barycenter<double>(sample_graphs(rep.k_ref, trial_seed(seed, 0, 0)), base.n(),
                                       std::nullopt, std::nullopt, params, serial)
                        .graph;

  const std::size_t cells = k_values.size() * static_cast<std::size_t>(trials);
  std::vector<double> cost(cells);
  parallel_for(cells, resolve_threads(threads), [&](std::size_t c) {
    const int K = k_values[c / trials];
    const auto t = static_cast<std::uint64_t>(c % trials);
    const auto graphs = sample_graphs(K, trial_seed(seed, static_cast<std::uint64_t>(K), t + 1));
    const Graph bary = barycenter<double>(graphs, base.n(), std::nullopt, std::nullopt, params, serial).graph;
    cost[c] = static_cast<double>(entropic_fgw(ref, bary, cost_params).cost);
  });

  std::vector<double> kx;
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    double sum = 0;
    for (int t = 0; t < trials; ++t) sum += cost[i * trials + t];
    rep.mean_sq_fgw.push_back(sum / trials);
    kx.push_back(k_values[i]);
  }
  rep.slope = sigma == 0 ? std::numeric_limits<double>::quiet_NaN() : loglog_slope(kx, rep.mean_sq_fgw);
  return rep;
}

RuntimeReport runtime_scaling(const std::vector<int>& k_values, int n, int d, int repeats, FgwParams params,
                              std::uint64_t seed) {
  if (k_values.empty()) throw InvalidInput("runtime scaling needs K values");
  if (n < 1 || d < 1 || repeats < 1) throw InvalidInput("n, d and repeats must be >= 1");
  params.tol = 0.0;
  params.sinkhorn_tol = 0.0;
  BarycenterOptions serial;
  serial.threads = 1;

  RuntimeReport rep;
  rep.k_values = k_values;
  rep.n = n;
  rep.d = d;
  rep.repeats = repeats;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto random_graph = [&] {
    Coords R(n, 3);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < 3; ++k) R(i, k) = 3.0 * U(rng);
    Graph g;
    g.A = pairwise_distances(R);
    g.H.resize(n, d);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) g.H(i, k) = U(rng);
    g.omega = uniform_weights<double>(n);
    return g;
  };

  for (int K : k_values) {
    if (K < 1) throw InvalidInput("K values must be >= 1");
    std::vector<Graph> graphs;
    for (int k = 0; k < K; ++k) graphs.push_back(random_graph());
    std::vector<double> times;
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      auto res = barycenter<double>(graphs, std::nullopt, std::nullopt, std::nullopt, params, serial);
      const auto stop = std::chrono::steady_clock::now();
      if (res.graph.n() != n) throw SolverError("unexpected barycenter size");
      times.push_back(std::chrono::duration<double>(stop - start).count());
    }
    rep.mean_seconds.push_back(std::accumulate(times.begin(), times.end(), 0.0) / repeats);
    rep.samples.push_back(std::move(times));
  }
  for (std::size_t i = 1; i < rep.mean_seconds.size(); ++i)
    rep.ratios.push_back(rep.mean_seconds[i] / rep.mean_seconds[i - 1]);
  return rep;
}

}  // namespace conan

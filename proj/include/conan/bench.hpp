#pragma once

#include <cstdint>
#include <vector>

#include "conan/conformer.hpp"
#include "conan/encoders.hpp"
#include "conan/fgw.hpp"

namespace conan {

/// Exact FGW between two 2-node graphs with uniform weights. Every coupling
/// is [[t, 1/2 - t], [1/2 - t, t]]; the objective is minimised over a grid of
/// t in [0, 1/2] and refined by ternary search to 1e-10 in t.
double exact_fgw_two_node(const Graph& g1, const Graph& g2, double alpha, double p = 2.0,
                          int grid_steps = 1001);

/// FGW objective written as the explicit double sum over node pairs.
double fgw_objective_direct(const Graph& g1, const Graph& g2, const MatrixXd& pi, double alpha,
                            double p = 2.0);

/// Minimum-cost perfect matching on a square cost matrix. Returns col[i] for
/// each row i.
std::vector<Eigen::Index> hungarian(const MatrixXd& cost);

struct BoundCheck {
  double fgw_cost = 0.0;
  double w_bound = 0.0;
  double slack = 0.0;
  bool holds = false;
};

/// Ground cost between node i of g1 and node j of g2 on a shared, index
/// aligned node set: ((1 - alpha) |h1_i - h2_j| + 2^(p-1) alpha S_ij)^p with
/// S_ij = max_m |A1[i,m] - A2[j,m]|.
MatrixXd bound_ground_cost(const Graph& g1, const Graph& g2, double alpha, double p);

/// Compares the entropic FGW cost with the exact W_p^p under
/// bound_ground_cost. The FGW side is the better of two descents, one from
/// the product coupling and one from the optimal matching of the W problem.
/// Needs equal sizes and uniform weights.
BoundCheck wasserstein_bound_check(const Graph& g1, const Graph& g2, double alpha, double p,
                                   double epsilon, double slack = 1e-2);

struct RateReport {
  std::vector<int> k_values;
  std::vector<double> mean_sq_fgw;
  double slope = 0.0;  // NaN when undefined
  int trials = 0;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  int k_ref = 0;
};

/// Seed for one (K, trial) cell, independent of evaluation order.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t k, std::uint64_t trial);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Empirical barycenters of K perturbed conformers against a reference
/// barycenter of 4 max(K) conformers; cost is entropic FGW at epsilon 0.01.
RateReport convergence_experiment(const Conformer& base, double sigma, const std::vector<int>& k_values,
                                  int trials, const EncoderWeights& enc, const FgwParams& params,
                                  std::uint64_t seed, int threads = 0);

struct RuntimeReport {
  std::vector<int> k_values;
  std::vector<double> mean_seconds;
  std::vector<std::vector<double>> samples;  // per K, one entry per repeat
  std::vector<double> ratios;                // mean[i + 1] / mean[i]
  int n = 0, d = 0, repeats = 0;
};

/// Wall time of a full barycenter solve per K on random graphs, single
/// threaded, with every iteration cap reached.
RuntimeReport runtime_scaling(const std::vector<int>& k_values, int n, int d, int repeats,
                              FgwParams params, std::uint64_t seed = 0);

}  // namespace conan

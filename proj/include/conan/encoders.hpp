#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "conan/conformer.hpp"
#include "conan/graph.hpp"

namespace conan {

struct EncoderConfig {
  int d = 16;
  int schnet_layers = 3;
  double cutoff = 10.0;
  double rbf_spacing = 0.1;
  double rbf_gamma = 10.0;
  int gat_layers = 3;
  /// width of Molecule2D::node_features
  int node_feature_dim = 8;
  /// width of Molecule2D::edge_features; 0 ignores edge features
  int edge_feature_dim = 0;
  double leaky_slope = 0.2;

  void validate() const;
};

struct SchnetLayer {
  MatrixXd W1, W2;  // filter network, d x n_rbf then d x d
  VectorXd b1, b2;
  MatrixXd Wm;  // message transform
  VectorXd bm;
  MatrixXd W3, W4;  // update network
  VectorXd b3, b4;
};

struct GatLayer {
  MatrixXd W;      // d x d_in
  VectorXd att;    // 2d + edge_feature_dim
};

/// Frozen weights for the whole forward function, drawn from one seed.
struct EncoderWeights {
  std::uint64_t seed = 0;
  EncoderConfig config;
  VectorXd rbf_centers;
  MatrixXd embedding;  // 119 x d, row z for atomic number z
  std::vector<SchnetLayer> schnet;
  std::vector<GatLayer> gat;
  MatrixXd readout_A, bary_A;
  VectorXd readout_a, bary_a;
  MatrixXd W2D, W3D, WBC;
  Eigen::RowVectorXd W_G;
  double b_G = 0.0;

  /// Every matrix is uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], filled in
  /// a fixed order from std::mt19937_64(seed).
  static EncoderWeights from_seed(std::uint64_t seed, const EncoderConfig& config = {});
};

bool operator==(const EncoderWeights& a, const EncoderWeights& b);

/// ln(0.5 e^x + 0.5), evaluated without overflow.
double shifted_softplus(double x);

/// Atom embeddings after the interaction blocks. Neighbours of v are the
/// atoms u != v with |r_v - r_u| <= cutoff.
MatrixXd schnet_lite_forward(const Conformer& conf, const EncoderWeights& enc, double cutoff);
MatrixXd schnet_lite_forward(const Conformer& conf, const EncoderWeights& enc);

/// sum_v (readout_A h_v + readout_a)
VectorXd schnet_readout(const MatrixXd& H, const EncoderWeights& enc);

/// Pairwise distances as structure, SchNet embeddings as features, uniform weights.
Graph conformer_to_graph(const Conformer& conf, const EncoderWeights& enc, double cutoff);
Graph conformer_to_graph(const Conformer& conf, const EncoderWeights& enc);

/// Attention message passing over the bond graph followed by a node sum.
/// Layer update: h_v <- W h_v + sum_{u in N(v)} alpha_vu W h_u, with
/// alpha = softmax over N(v) of LeakyReLU(att . [W h_v, W h_u, e_vu]) and ELU
/// between layers. An isolated node receives a zero aggregate.
VectorXd gat_forward(const Molecule2D& mol, const EncoderWeights& enc);

}  // namespace conan

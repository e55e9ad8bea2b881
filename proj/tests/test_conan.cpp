#include <doctest.h>

#include <cmath>
#include <random>

#include "conan/conan.hpp"
#include "oracles.hpp"

using conan::Conformer;
using conan::EncoderConfig;
using conan::EncoderWeights;
using conan::MatrixXd;
using conan::VectorXd;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.d = 4;
  cfg.node_feature_dim = 3;
  return cfg;
}

EncoderWeights identity_weights(int d) {
  EncoderConfig cfg;
  cfg.d = d;
  cfg.node_feature_dim = 1;
  auto w = EncoderWeights::from_seed(0, cfg);
  w.bary_A = MatrixXd::Identity(d, d);
  w.bary_a = VectorXd::Zero(d);
  w.W2D = w.W3D = w.WBC = MatrixXd::Identity(d, d);
  return w;
}

std::vector<Conformer> ensemble(std::mt19937_64& rng, int n, int K, double sigma) {
  const Conformer base = oracle::random_conformer(rng, n);
  std::vector<Conformer> out;
  for (int k = 0; k < K; ++k) out.push_back(conan::perturb_conformer(base, sigma, rng()));
  return out;
}

double rel_diff(double a, double b) { return std::abs(a - b) / (1 + std::abs(b)); }

}  // namespace

TEST_CASE("barycenter_readout") {
  auto w = identity_weights(2);
  conan::Graph g;
  g.H = (MatrixXd(2, 2) << 2, 0, 0, 2).finished();
  g.A = MatrixXd::Zero(2, 2);
  g.omega = VectorXd::Constant(2, 0.5);
  CHECK(conan::barycenter_readout(g, w) == Eigen::Vector2d(2, 2));

  auto rnd = EncoderWeights::from_seed(3, tiny_config());
  std::mt19937_64 rng(1);
  conan::Graph one;
  one.H = oracle::random_matrix(rng, 1, 4);
  one.A = MatrixXd::Zero(1, 1);
  one.omega = VectorXd::Ones(1);
  const VectorXd want = rnd.bary_A * one.H.transpose() + rnd.bary_a;
  CHECK((conan::barycenter_readout(one, rnd) - want).norm() <= 1e-15);

  conan::Graph many = oracle::random_graph(rng, 5, 4);
  const VectorXd a = conan::barycenter_readout(many, rnd);
  const VectorXd b = conan::barycenter_readout(conan::permute_nodes(many, oracle::random_permutation(rng, 5)), rnd);
  CHECK((a - b).norm() <= 1e-14);
  CHECK_THROWS_AS(conan::barycenter_readout(oracle::random_graph(rng, 3, 2), rnd), conan::InvalidInput);
}

TEST_CASE("combine") {
  std::mt19937_64 rng(2);
  auto w = EncoderWeights::from_seed(4, tiny_config());
  const VectorXd h2d = oracle::random_matrix(rng, 4, 1), hbc = oracle::random_matrix(rng, 4, 1);
  const MatrixXd h3d = oracle::random_matrix(rng, 4, 3);

  SUBCASE("zero 3D and barycenter maps duplicate the 2D column") {
    auto z = w;
    z.W3D.setZero();
    z.WBC.setZero();
    const MatrixXd out = conan::combine(h2d, h3d, hbc, z);
    for (int k = 0; k < 3; ++k) CHECK((out.col(k) - w.W2D * h2d).norm() <= 1e-15);
  }
  SUBCASE("identity maps at K = 1 add the three vectors") {
    auto id = identity_weights(4);
    const MatrixXd out = conan::combine(h2d, h3d.leftCols(1), hbc, id);
    CHECK((out.col(0) - (h2d + h3d.col(0) + hbc)).norm() <= 1e-15);
  }
  SUBCASE("column permutation commutes") {
    MatrixXd swapped = h3d;
    swapped.col(0).swap(swapped.col(2));
    MatrixXd a = conan::combine(h2d, h3d, hbc, w), b = conan::combine(h2d, swapped, hbc, w);
    a.col(0).swap(a.col(2));
    CHECK(a == b);
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(conan::combine(h2d, MatrixXd(4, 0), hbc, w), conan::InvalidInput);
    CHECK_THROWS_AS(conan::combine(h2d, MatrixXd::Zero(3, 2), hbc, w), conan::InvalidInput);
  }
}

TEST_CASE("predict") {
  std::mt19937_64 rng(3);
  auto w = EncoderWeights::from_seed(5, tiny_config());
  const VectorXd c = oracle::random_matrix(rng, 4, 1);
  const MatrixXd same = c.replicate(1, 3);
  CHECK(std::abs(conan::predict(same, w) - (w.W_G.dot(c) + w.b_G)) <= 1e-14);

  const MatrixXd H = oracle::random_matrix(rng, 4, 5);
  const MatrixXd R = H.rowwise().reverse();
  CHECK(std::abs(conan::predict(H, w) - conan::predict(R, w)) <= 1e-14);

  auto zero = w;
  zero.W_G.setZero();
  CHECK(conan::predict(H, zero) == w.b_G);
}

TEST_CASE("conan_forward") {
  std::mt19937_64 rng(44);
  const auto enc = EncoderWeights::from_seed(17, tiny_config());
  const auto mol = oracle::random_molecule(rng, 5, 3);

  SUBCASE("single conformer: barycenter close to its graph") {
    auto confs = ensemble(rng, 5, 1, 0.1);
    conan::FgwParams p;
    p.epsilon = 0.01;
    p.sinkhorn_iters = 2000;
    auto res = conan::conan_forward(mol, confs, enc, p, 1);
    const auto g = conan::conformer_to_graph(confs[0], enc);
    CHECK((res.barycenter.graph.A - g.A).norm() <= 0.05 * g.A.norm());
    CHECK(std::isfinite(res.y_hat));
    CHECK(res.h3d.cols() == 1);
  }
  SUBCASE("duplicated conformers give the single-conformer prediction") {
    auto confs = ensemble(rng, 6, 1, 0.1);
    auto one = conan::conan_forward(mol, confs, enc);
    auto two = conan::conan_forward(mol, {confs[0], confs[0]}, enc);
    CHECK(two.h3d.col(0) == two.h3d.col(1));
    CHECK(rel_diff(two.y_hat, one.y_hat) <= 1e-6);
  }
  SUBCASE("per-column 3D embeddings match isolated recomputation") {
    auto confs = ensemble(rng, 5, 3, 0.1);
    auto res = conan::conan_forward(mol, confs, enc, {}, 2);
    for (int k = 0; k < 3; ++k)
      CHECK(res.h3d.col(k) == conan::schnet_readout(conan::schnet_lite_forward(confs[k], enc), enc));
    CHECK(res.h2d == conan::gat_forward(mol, enc));
  }
  SUBCASE("rigid motions, conformer order and atom labels do not move the prediction") {
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 3 + trial % 5, K = 1 + trial % 5;
      auto confs = ensemble(rng, n, K, 0.15);
      const double y0 = conan::conan_forward(mol, confs, enc).y_hat;

      auto moved = confs;
      for (auto& c : moved) {
        Eigen::Vector3d t = oracle::random_matrix(rng, 3, 1, -10, 10);
        c = conan::rigid_transform(c, oracle::random_orthogonal(rng, rng() % 2 == 0), t);
      }
      std::shuffle(moved.begin(), moved.end(), rng);
      CHECK(rel_diff(conan::conan_forward(mol, moved, enc).y_hat, y0) <= 1e-6);

      // relabel atoms consistently in every conformer
      const auto perm = oracle::random_permutation(rng, n);
      auto relabeled = confs;
      for (auto& c : relabeled) {
        const Conformer src = c;
        for (int i = 0; i < n; ++i) {
          c.Z[i] = src.Z[perm[i]];
          c.R.row(i) = src.R.row(perm[i]);
        }
      }
      CHECK(rel_diff(conan::conan_forward(mol, relabeled, enc).y_hat, y0) <= 1e-6);
    }
  }
  SUBCASE("input errors") {
    CHECK_THROWS_AS(conan::conan_forward(mol, {}, enc), conan::InvalidInput);
    auto confs = ensemble(rng, 4, 2, 0.1);
    confs[1].Z[0] = confs[1].Z[0] == 1 ? 6 : 1;
    CHECK_THROWS_AS(conan::conan_forward(mol, confs, enc), conan::InvalidInput);
  }
}

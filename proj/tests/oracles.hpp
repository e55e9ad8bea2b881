#pragma once

// Test-only reference computations. Nothing here calls into the solver paths
// it is used to check.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "conan/conformer.hpp"
#include "conan/encoders.hpp"
#include "conan/graph.hpp"

namespace oracle {

using conan::MatrixXd;
using conan::VectorXd;

inline MatrixXd naive_feature_distance(const MatrixXd& H1, const MatrixXd& H2, double p) {
  MatrixXd M(H1.rows(), H2.rows());
  for (int i = 0; i < H1.rows(); ++i)
    for (int j = 0; j < H2.rows(); ++j) {
      double s = 0;
      for (int c = 0; c < H1.cols(); ++c) s += (H1(i, c) - H2(j, c)) * (H1(i, c) - H2(j, c));
      M(i, j) = std::pow(std::sqrt(s), p);
    }
  return M;
}

/// Raw 4-tensor contraction sum_kl L(A1[i,k], A2[j,l]) pi[k,l].
inline MatrixXd quad_loop_tensor(const MatrixXd& A1, const MatrixXd& A2, const MatrixXd& pi,
                                 bool kl, double p = 2.0) {
  MatrixXd out = MatrixXd::Zero(A1.rows(), A2.rows());
  for (int i = 0; i < A1.rows(); ++i)
    for (int j = 0; j < A2.rows(); ++j)
      for (int k = 0; k < A1.rows(); ++k)
        for (int l = 0; l < A2.rows(); ++l) {
          const double a = A1(i, k), b = A2(j, l);
          const double loss = kl ? a * std::log(a / b) - a + b : std::pow(std::abs(a - b), p);
          out(i, j) += loss * pi(k, l);
        }
  return out;
}

/// FGW objective straight from its definition.
inline double quad_loop_objective(const MatrixXd& M, const MatrixXd& A1, const MatrixXd& A2,
                                  const MatrixXd& pi, double alpha, double p = 2.0) {
  double total = 0;
  for (int i = 0; i < A1.rows(); ++i)
    for (int j = 0; j < A2.rows(); ++j)
      for (int k = 0; k < A1.rows(); ++k)
        for (int l = 0; l < A2.rows(); ++l)
          total += alpha * std::pow(std::abs(A1(i, k) - A2(j, l)), p) * pi(i, j) * pi(k, l);
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) total += (1 - alpha) * M(i, j) * pi(i, j);
  return total;
}

/// Plain multiplicative Sinkhorn (u, v scalings of the Gibbs kernel) in
/// extended precision.
inline MatrixXd multiplicative_sinkhorn(const MatrixXd& C, const VectorXd& mu1,
                                        const VectorXd& mu2, double eps, int iters) {
  using LD = long double;
  const int n1 = static_cast<int>(C.rows()), n2 = static_cast<int>(C.cols());
  std::vector<LD> K(static_cast<std::size_t>(n1 * n2)), u(n1, 1.0L), v(n2, 1.0L);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) K[i * n2 + j] = std::exp(-static_cast<LD>(C(i, j)) / eps);
  for (int it = 0; it < iters; ++it) {
    for (int i = 0; i < n1; ++i) {
      LD s = 0;
      for (int j = 0; j < n2; ++j) s += K[i * n2 + j] * v[j];
      u[i] = mu1(i) / s;
    }
    for (int j = 0; j < n2; ++j) {
      LD s = 0;
      for (int i = 0; i < n1; ++i) s += K[i * n2 + j] * u[i];
      v[j] = mu2(j) / s;
    }
  }
  MatrixXd pi(n1, n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) pi(i, j) = static_cast<double>(u[i] * K[i * n2 + j] * v[j]);
  return pi;
}

inline MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double lo = 0.0,
                              double hi = 1.0) {
  std::uniform_real_distribution<double> U(lo, hi);
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = U(rng);
  return m;
}

inline MatrixXd random_symmetric(std::mt19937_64& rng, int n, double lo = 0.0, double hi = 1.0,
                                 bool zero_diag = true) {
  MatrixXd a = random_matrix(rng, n, n, lo, hi);
  MatrixXd s = (a + a.transpose()) / 2;
  if (zero_diag) s.diagonal().setZero();
  return s;
}

inline VectorXd random_simplex(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(0.1, 1.0);
  VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = U(rng);
  return w / w.sum();
}

/// Random graph whose structure matrix is a Euclidean distance matrix.
inline conan::Graph random_graph(std::mt19937_64& rng, int n, int d, bool uniform = true) {
  MatrixXd pts = random_matrix(rng, n, 3, 0.0, 2.0);
  MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = (pts.row(i) - pts.row(j)).norm();
  conan::Graph g;
  g.H = random_matrix(rng, n, d);
  g.A = A;
  g.omega = uniform ? conan::uniform_weights<double>(n) : random_simplex(rng, n);
  return g;
}

inline conan::Permutation random_permutation(std::mt19937_64& rng, int n) {
  conan::Permutation p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Random orthogonal 3x3 matrix (rotation, optionally composed with a reflection).
inline Eigen::Matrix3d random_orthogonal(std::mt19937_64& rng, bool reflect) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::Quaterniond q(N(rng), N(rng), N(rng), N(rng));
  q.normalize();
  Eigen::Matrix3d R = q.toRotationMatrix();
  if (reflect) R.col(0) *= -1.0;
  return R;
}

/// Atoms from {H, C, N, O} placed by a random walk with 1-1.6 A steps.
inline conan::Conformer random_conformer(std::mt19937_64& rng, int n) {
  const int elements[] = {1, 6, 7, 8};
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> step(1.0, 1.6);
  std::normal_distribution<double> N(0.0, 1.0);
  conan::Conformer c;
  c.R.resize(n, 3);
  c.R.row(0).setZero();
  for (int i = 0; i < n; ++i) {
    c.Z.push_back(elements[pick(rng)]);
    if (i == 0) continue;
    Eigen::Vector3d dir(N(rng), N(rng), N(rng));
    c.R.row(i) = c.R.row(i - 1) + step(rng) * dir.normalized().transpose();
  }
  return c;
}

/// Chain of bonds plus a few random extra edges.
inline conan::Molecule2D random_molecule(std::mt19937_64& rng, int n, int d0, int de = 0) {
  conan::Molecule2D m;
  m.node_features = random_matrix(rng, n, d0, -1.0, 1.0);
  for (int i = 1; i < n; ++i) m.edges.emplace_back(i - 1, i);
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int e = 0; e < n / 3; ++e) {
    const int i = node(rng), j = node(rng);
    if (i != j) m.edges.emplace_back(i, j);
  }
  if (de > 0) m.edge_features = random_matrix(rng, static_cast<int>(m.edges.size()), de, -1.0, 1.0);
  return m;
}

inline double naive_ssp(double x) { return std::log(0.5 * std::exp(x) + 0.5); }

/// SchNet-style interaction blocks written out with scalar loops.
inline MatrixXd naive_schnet(const conan::Conformer& c, const conan::EncoderWeights& w, double cutoff) {
  const int n = static_cast<int>(c.R.rows()), d = w.config.d;
  const int nr = static_cast<int>(w.rbf_centers.size());
  MatrixXd H(n, d);
  for (int v = 0; v < n; ++v)
    for (int a = 0; a < d; ++a) H(v, a) = w.embedding(c.Z[v], a);
  for (const auto& L : w.schnet) {
    MatrixXd agg = MatrixXd::Zero(n, d);
    for (int v = 0; v < n; ++v)
      for (int u = 0; u < n; ++u) {
        if (u == v) continue;
        double dist = 0;
        for (int k = 0; k < 3; ++k) dist += (c.R(v, k) - c.R(u, k)) * (c.R(v, k) - c.R(u, k));
        dist = std::sqrt(dist);
        if (dist > cutoff) continue;
        std::vector<double> rbf(nr), hid(d);
        for (int k = 0; k < nr; ++k)
          rbf[k] = std::exp(-w.config.rbf_gamma * (dist - w.rbf_centers(k)) * (dist - w.rbf_centers(k)));
        for (int a = 0; a < d; ++a) {
          double s = L.b1(a);
          for (int k = 0; k < nr; ++k) s += L.W1(a, k) * rbf[k];
          hid[a] = naive_ssp(s);
        }
        for (int a = 0; a < d; ++a) {
          double filt = L.b2(a), msg = L.bm(a);
          for (int b = 0; b < d; ++b) {
            filt += L.W2(a, b) * hid[b];
            msg += L.Wm(a, b) * H(u, b);
          }
          agg(v, a) += msg * filt;
        }
      }
    for (int v = 0; v < n; ++v) {
      std::vector<double> hid(d);
      for (int a = 0; a < d; ++a) {
        double s = L.b3(a);
        for (int b = 0; b < d; ++b) s += L.W3(a, b) * agg(v, b);
        hid[a] = naive_ssp(s);
      }
      for (int a = 0; a < d; ++a) {
        double s = L.b4(a);
        for (int b = 0; b < d; ++b) s += L.W4(a, b) * hid[b];
        H(v, a) += s;
      }
    }
  }
  return H;
}

/// Attention message passing written out with scalar loops.
inline VectorXd naive_gat(const conan::Molecule2D& m, const conan::EncoderWeights& w) {
  const int n = static_cast<int>(m.node_features.rows()), d = w.config.d;
  const int de = w.config.edge_feature_dim;
  MatrixXd H = m.node_features;
  for (std::size_t l = 0; l < w.gat.size(); ++l) {
    const auto& L = w.gat[l];
    MatrixXd WH = MatrixXd::Zero(n, d);
    for (int v = 0; v < n; ++v)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < H.cols(); ++b) WH(v, a) += L.W(a, b) * H(v, b);
    MatrixXd next = WH;
    for (int v = 0; v < n; ++v) {
      std::vector<int> nb, eid;
      for (std::size_t e = 0; e < m.edges.size(); ++e) {
        if (m.edges[e].first == v) { nb.push_back(m.edges[e].second); eid.push_back(static_cast<int>(e)); }
        if (m.edges[e].second == v) { nb.push_back(m.edges[e].first); eid.push_back(static_cast<int>(e)); }
      }
      std::vector<double> score;
      double z = 0;
      for (std::size_t k = 0; k < nb.size(); ++k) {
        double s = 0;
        for (int a = 0; a < d; ++a) s += L.att(a) * WH(v, a) + L.att(d + a) * WH(nb[k], a);
        if (de > 0 && m.edge_features)
          for (int a = 0; a < de; ++a) s += L.att(2 * d + a) * (*m.edge_features)(eid[k], a);
        s = s > 0 ? s : w.config.leaky_slope * s;
        score.push_back(std::exp(s));
        z += score.back();
      }
      for (std::size_t k = 0; k < nb.size(); ++k)
        for (int a = 0; a < d; ++a) next(v, a) += score[k] / z * WH(nb[k], a);
    }
    if (l + 1 < w.gat.size())
      for (int v = 0; v < n; ++v)
        for (int a = 0; a < d; ++a) next(v, a) = next(v, a) > 0 ? next(v, a) : std::exp(next(v, a)) - 1;
    H = next;
  }
  VectorXd out = VectorXd::Zero(H.cols());
  for (int v = 0; v < n; ++v) out += H.row(v).transpose();
  return out;
}

}  // namespace oracle

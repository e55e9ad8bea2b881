#include "conan/encoders.hpp"

#include <cmath>
#include <random>

namespace conan {
namespace {

class WeightSource {
 public:
  explicit WeightSource(std::uint64_t seed) : rng_(seed) {}

  MatrixXd matrix(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
    std::uniform_real_distribution<double> u(-bound(fan_in), bound(fan_in));
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng_);
    return m;
  }

  VectorXd vector(Eigen::Index size, Eigen::Index fan_in) { return matrix(size, 1, fan_in); }

 private:
  static double bound(Eigen::Index fan_in) { return 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1))); }

  std::mt19937_64 rng_;
};

bool same(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

double elu(double x) { return x > 0 ? x : std::expm1(x); }

void check_width(const MatrixXd& H, const EncoderWeights& enc) {
  if (H.cols() != enc.config.d)
    throw InvalidInput("embedding width " + std::to_string(H.cols()) + " does not match d = " +
                       std::to_string(enc.config.d));
}

}  // namespace

void EncoderConfig::validate() const {
  if (d < 1) throw InvalidInput("d must be >= 1");
  if (schnet_layers < 0 || gat_layers < 0) throw InvalidInput("layer counts must be >= 0");
  if (!(cutoff > 0)) throw InvalidInput("cutoff must be positive");
  if (!(rbf_spacing > 0) || !(rbf_gamma > 0)) throw InvalidInput("rbf spacing and gamma must be positive");
  if (node_feature_dim < 1) throw InvalidInput("node_feature_dim must be >= 1");
  if (edge_feature_dim < 0) throw InvalidInput("edge_feature_dim must be >= 0");
}

EncoderWeights EncoderWeights::from_seed(std::uint64_t seed, const EncoderConfig& config) {
  config.validate();
  const Eigen::Index d = config.d;
  EncoderWeights w;
  w.seed = seed;
  w.config = config;
  w.rbf_centers = conan::rbf_centers(config.cutoff, config.rbf_spacing);
  const Eigen::Index n_rbf = w.rbf_centers.size();

  WeightSource src(seed);
  w.embedding = src.matrix(119, d, 1);
  for (int l = 0; l < config.schnet_layers; ++l) {
    SchnetLayer layer;
    layer.W1 = src.matrix(d, n_rbf, n_rbf);
    layer.b1 = src.vector(d, n_rbf);
    layer.W2 = src.matrix(d, d, d);
    layer.b2 = src.vector(d, d);
    layer.Wm = src.matrix(d, d, d);
    layer.bm = src.vector(d, d);
    layer.W3 = src.matrix(d, d, d);
    layer.b3 = src.vector(d, d);
    layer.W4 = src.matrix(d, d, d);
    layer.b4 = src.vector(d, d);
    w.schnet.push_back(std::move(layer));
  }
  for (int l = 0; l < config.gat_layers; ++l) {
    const Eigen::Index d_in = l == 0 ? config.node_feature_dim : d;
    const Eigen::Index att = 2 * d + config.edge_feature_dim;
    w.gat.push_back({src.matrix(d, d_in, d_in), src.vector(att, att)});
  }
  w.readout_A = src.matrix(d, d, d);
  w.readout_a = src.vector(d, d);
  w.bary_A = src.matrix(d, d, d);
  w.bary_a = src.vector(d, d);
  w.W2D = src.matrix(d, d, d);
  w.W3D = src.matrix(d, d, d);
  w.WBC = src.matrix(d, d, d);
  w.W_G = src.matrix(1, d, d);
  w.b_G = src.vector(1, d)(0);
  return w;
}

bool operator==(const EncoderWeights& a, const EncoderWeights& b) {
  if (a.seed != b.seed || a.schnet.size() != b.schnet.size() || a.gat.size() != b.gat.size())
    return false;
  for (std::size_t l = 0; l < a.schnet.size(); ++l) {
    const auto &x = a.schnet[l], &y = b.schnet[l];
    if (!same(x.W1, y.W1) || !same(x.b1, y.b1) || !same(x.W2, y.W2) || !same(x.b2, y.b2) ||
        !same(x.Wm, y.Wm) || !same(x.bm, y.bm) || !same(x.W3, y.W3) || !same(x.b3, y.b3) ||
        !same(x.W4, y.W4) || !same(x.b4, y.b4))
      return false;
  }
  for (std::size_t l = 0; l < a.gat.size(); ++l)
    if (!same(a.gat[l].W, b.gat[l].W) || !same(a.gat[l].att, b.gat[l].att)) return false;
  return same(a.rbf_centers, b.rbf_centers) && same(a.embedding, b.embedding) &&
         same(a.readout_A, b.readout_A) && same(a.readout_a, b.readout_a) &&
         same(a.bary_A, b.bary_A) && same(a.bary_a, b.bary_a) && same(a.W2D, b.W2D) &&
         same(a.W3D, b.W3D) && same(a.WBC, b.WBC) && same(a.W_G, b.W_G) && a.b_G == b.b_G;
}

double shifted_softplus(double x) {
  // softplus(x) - ln 2
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) - std::log(2.0);
}

MatrixXd schnet_lite_forward(const Conformer& conf, const EncoderWeights& enc, double cutoff) {
  validate_conformer(conf);
  if (!(cutoff >= 0)) throw InvalidInput("cutoff must be >= 0");
  const Eigen::Index n = conf.n(), d = enc.config.d;
  const MatrixXd dist = pairwise_distances(conf.R);
  const auto ssp = [](const VectorXd& v) { return v.unaryExpr(&shifted_softplus).eval(); };

  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  std::vector<VectorXd> rbf;
  for (Eigen::Index v = 0; v < n; ++v)
    for (Eigen::Index u = 0; u < n; ++u)
      if (u != v && dist(v, u) <= cutoff) {
        pairs.emplace_back(v, u);
        rbf.push_back(rbf_expand(dist(v, u), enc.rbf_centers, enc.config.rbf_gamma));
      }

  MatrixXd H(n, d);
  for (Eigen::Index v = 0; v < n; ++v) H.row(v) = enc.embedding.row(conf.Z[v]);

  for (const auto& layer : enc.schnet) {
    const MatrixXd msg_src = ((H * layer.Wm.transpose()).rowwise() + layer.bm.transpose());
    MatrixXd agg = MatrixXd::Zero(n, d);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [v, u] = pairs[k];
      const VectorXd filter = layer.W2 * ssp(layer.W1 * rbf[k] + layer.b1) + layer.b2;
      agg.row(v) += msg_src.row(u).cwiseProduct(filter.transpose());
    }
    for (Eigen::Index v = 0; v < n; ++v) {
      const VectorXd a = agg.row(v).transpose();
      H.row(v) += (layer.W4 * ssp(layer.W3 * a + layer.b3) + layer.b4).transpose();
    }
  }
  return H;
}

MatrixXd schnet_lite_forward(const Conformer& conf, const EncoderWeights& enc) {
  return schnet_lite_forward(conf, enc, enc.config.cutoff);
}

VectorXd schnet_readout(const MatrixXd& H, const EncoderWeights& enc) {
  check_width(H, enc);
  return enc.readout_A * H.colwise().sum().transpose() +
         static_cast<double>(H.rows()) * enc.readout_a;
}

Graph conformer_to_graph(const Conformer& conf, const EncoderWeights& enc, double cutoff) {
  Graph g;
  g.H = schnet_lite_forward(conf, enc, cutoff);
  g.A = pairwise_distances(conf.R);
  g.omega = uniform_weights<double>(conf.n());
  return g;
}

Graph conformer_to_graph(const Conformer& conf, const EncoderWeights& enc) {
  return conformer_to_graph(conf, enc, enc.config.cutoff);
}

VectorXd gat_forward(const Molecule2D& mol, const EncoderWeights& enc) {
  validate_molecule(mol);
  const auto& cfg = enc.config;
  if (mol.node_features.cols() != cfg.node_feature_dim)
    throw InvalidInput("node feature width " + std::to_string(mol.node_features.cols()) +
                       ", weights expect " + std::to_string(cfg.node_feature_dim));
  if (mol.edge_features && cfg.edge_feature_dim > 0 && mol.edge_features->cols() != cfg.edge_feature_dim)
    throw InvalidInput("edge feature width " + std::to_string(mol.edge_features->cols()) +
                       ", weights expect " + std::to_string(cfg.edge_feature_dim));

  const Eigen::Index n = mol.n(), d = cfg.d, de = cfg.edge_feature_dim;
  // neighbour lists with the edge index, both directions
  std::vector<std::vector<std::pair<Eigen::Index, std::size_t>>> nbrs(n);
  for (std::size_t e = 0; e < mol.edges.size(); ++e) {
    const auto [i, j] = mol.edges[e];
    nbrs[i].emplace_back(j, e);
    nbrs[j].emplace_back(i, e);
  }

  MatrixXd H = mol.node_features;
  for (std::size_t l = 0; l < enc.gat.size(); ++l) {
    const auto& layer = enc.gat[l];
    const MatrixXd WH = H * layer.W.transpose();  // n x d
    const VectorXd a_self = layer.att.head(d), a_nbr = layer.att.segment(d, d);
    const VectorXd s_self = WH * a_self, s_nbr = WH * a_nbr;

    MatrixXd next = WH;
    for (Eigen::Index v = 0; v < n; ++v) {
      const auto& nv = nbrs[v];
      if (nv.empty()) continue;
      VectorXd score(static_cast<Eigen::Index>(nv.size()));
      for (std::size_t k = 0; k < nv.size(); ++k) {
        const auto [u, e] = nv[k];
        double s = s_self(v) + s_nbr(u);
        if (de > 0 && mol.edge_features) s += layer.att.tail(de).dot(mol.edge_features->row(e));
        score(static_cast<Eigen::Index>(k)) = s > 0 ? s : cfg.leaky_slope * s;
      }
      const VectorXd alpha = (score.array() - score.maxCoeff()).exp().matrix();
      const double total = alpha.sum();
      for (std::size_t k = 0; k < nv.size(); ++k)
        next.row(v) += (alpha(static_cast<Eigen::Index>(k)) / total) * WH.row(nv[k].first);
    }
    if (l + 1 < enc.gat.size()) next = next.unaryExpr(&elu);
    H = std::move(next);
  }
  if (enc.gat.empty()) {
    if (H.cols() != d) throw InvalidInput("without GAT layers node features must have width d");
  }
  return H.colwise().sum().transpose();
}

}  // namespace conan

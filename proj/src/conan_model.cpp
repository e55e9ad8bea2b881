#include "conan/conan.hpp"

#include "conan/parallel.hpp"

namespace conan {

VectorXd barycenter_readout(const Graph& bary, const EncoderWeights& enc) {
  if (bary.H.cols() != enc.config.d)
    throw InvalidInput("barycenter feature width " + std::to_string(bary.H.cols()) +
                       " does not match d = " + std::to_string(enc.config.d));
  return enc.bary_A * bary.H.colwise().sum().transpose() +
         static_cast<double>(bary.H.rows()) * enc.bary_a;
}

MatrixXd combine(const VectorXd& h2d, const MatrixXd& h3d, const VectorXd& h_bc,
                 const EncoderWeights& enc) {
  const Eigen::Index d = enc.config.d;
  if (h3d.cols() < 1) throw InvalidInput("combine needs at least one conformer column");
  if (h2d.size() != d || h3d.rows() != d || h_bc.size() != d)
    throw InvalidInput("combine operands must all have d = " + std::to_string(d) + " rows");
  const VectorXd shared = enc.W2D * h2d + enc.WBC * h_bc;
  return (enc.W3D * h3d).colwise() + shared;
}

double predict(const MatrixXd& Hcomb, const EncoderWeights& enc) {
  if (Hcomb.cols() < 1) throw InvalidInput("predict needs at least one column");
  if (Hcomb.rows() != enc.W_G.size())
    throw InvalidInput("predict input has " + std::to_string(Hcomb.rows()) + " rows, expected " +
                       std::to_string(enc.W_G.size()));
  const VectorXd mean = Hcomb.rowwise().mean();
  return enc.W_G.dot(mean) + enc.b_G;
}

ConanForwardResult conan_forward(const Molecule2D& mol, const std::vector<Conformer>& conformers,
                                 const EncoderWeights& enc, const FgwParams& params, int threads) {
  if (conformers.empty()) throw InvalidInput("conan_forward needs at least one conformer");
  for (std::size_t k = 0; k < conformers.size(); ++k) {
    validate_conformer(conformers[k]);
    if (conformers[k].Z != conformers.front().Z)
      throw InvalidInput("atom sequence mismatch in conformer " + std::to_string(k + 1));
  }
  const std::size_t K = conformers.size();
  const int workers = resolve_threads(threads);

  ConanForwardResult res;
  res.h2d = gat_forward(mol, enc);

  std::vector<Graph> graphs(K);
  parallel_for(K, workers, [&](std::size_t k) { graphs[k] = conformer_to_graph(conformers[k], enc); });
  res.h3d.resize(enc.config.d, static_cast<Eigen::Index>(K));
  for (std::size_t k = 0; k < K; ++k)
    res.h3d.col(static_cast<Eigen::Index>(k)) = schnet_readout(graphs[k].H, enc);

  BarycenterOptions options;
  options.threads = workers;
  res.barycenter = barycenter<double>(graphs, std::nullopt, std::nullopt, std::nullopt, params, options);
  res.h_bc = barycenter_readout(res.barycenter.graph, enc);
  res.y_hat = predict(combine(res.h2d, res.h3d, res.h_bc, enc), enc);
  if (!std::isfinite(res.y_hat)) throw SolverError("prediction is not finite");
  return res;
}

}  // namespace conan

#pragma once

#include <vector>

#include "conan/barycenter.hpp"
#include "conan/conformer.hpp"
#include "conan/encoders.hpp"
#include "conan/fgw.hpp"

namespace conan {

struct ConanForwardResult {
  double y_hat = 0.0;
  VectorXd h2d;
  MatrixXd h3d;  // d x K, one column per conformer
  VectorXd h_bc;
  BarycenterResult<double> barycenter;
};

/// sum_v (bary_A h_v + bary_a) over the barycenter node features.
VectorXd barycenter_readout(const Graph& bary, const EncoderWeights& enc);

/// W2D h2d 1^T + W3D H3D + WBC h_bc 1^T, one column per conformer.
MatrixXd combine(const VectorXd& h2d, const MatrixXd& h3d, const VectorXd& h_bc,
                 const EncoderWeights& enc);

/// W_G mean_k(Hcomb[:, k]) + b_G
double predict(const MatrixXd& Hcomb, const EncoderWeights& enc);

/// Full forward pass: 2D branch, per-conformer 3D embeddings, FGW barycenter
/// of the conformer graphs, then combine and predict. Conformers must share
/// their atom sequence; the 2D graph is only used through its pooled vector.
ConanForwardResult conan_forward(const Molecule2D& mol, const std::vector<Conformer>& conformers,
                                 const EncoderWeights& enc, const FgwParams& params = {},
                                 int threads = 0);

}  // namespace conan

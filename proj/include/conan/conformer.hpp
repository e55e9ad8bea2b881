#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "conan/graph.hpp"

namespace conan {

using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// One 3D arrangement of a molecule: atomic numbers and coordinates in Angstrom.
struct Conformer {
  std::vector<int> Z;
  Coords R;

  Eigen::Index n() const { return R.rows(); }
};

/// Bond graph of a molecule. edge_features, when present, has one row per edge.
struct Molecule2D {
  MatrixXd node_features;
  std::vector<std::pair<int, int>> edges;
  std::optional<MatrixXd> edge_features;

  Eigen::Index n() const { return node_features.rows(); }
};

/// Throws InvalidInput unless N >= 1, Z in [1, 118] and coordinates are finite.
void validate_conformer(const Conformer& conf);
/// Throws InvalidInput on out-of-range or self-loop edges and bad shapes.
void validate_molecule(const Molecule2D& mol);

/// Atomic number for an element symbol, case-insensitive; 0 when unknown.
int atomic_number(const std::string& symbol);
const char* element_symbol(int z);

/// Multi-frame XYZ. All frames must list the same element sequence.
std::vector<Conformer> parse_xyz(const std::string& text);
std::string write_xyz(const std::vector<Conformer>& frames);

MatrixXd pairwise_distances(const Coords& R);

/// Gaussian expansion exp(-gamma (dist - c_k)^2) over the given centers.
VectorXd rbf_expand(double dist, const VectorXd& centers, double gamma);
/// Centers 0, spacing, 2 spacing, ... up to and including cutoff.
VectorXd rbf_centers(double cutoff, double spacing);

/// x -> Q x + t applied to every atom.
Conformer rigid_transform(const Conformer& conf, const Eigen::Matrix3d& Q,
                          const Eigen::Vector3d& t);

/// Uniformly random rotation from a unit quaternion.
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);

/// Random-walk chain of n atoms drawn from H, C, N, O with 1.0-1.6 A steps.
Conformer synthetic_conformer(int n, std::uint64_t seed);

/// Gaussian coordinate noise with standard deviation sigma, then (unless
/// rigid_motion is false) a random rotation and a translation in [-5, 5]^3.
Conformer perturb_conformer(const Conformer& conf, double sigma, std::uint64_t seed,
                            bool rigid_motion = true);

}  // namespace conan

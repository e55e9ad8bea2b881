#include "conan/conformer.hpp"

#include <Eigen/Geometry>

#include <array>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace conan {
namespace {

constexpr std::array<const char*, 119> kElements = {
    "",   "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac",
    "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf",
    "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string at_line(std::size_t line) { return " on line " + std::to_string(line + 1); }

}  // namespace

int atomic_number(const std::string& symbol) {
  if (symbol.empty() || symbol.size() > 2) return 0;
  std::string norm;
  norm += static_cast<char>(std::toupper(static_cast<unsigned char>(symbol[0])));
  if (symbol.size() == 2) norm += static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[1])));
  for (int z = 1; z < static_cast<int>(kElements.size()); ++z)
    if (norm == kElements[z]) return z;
  return 0;
}

const char* element_symbol(int z) {
  if (z < 1 || z >= static_cast<int>(kElements.size())) throw InvalidInput("atomic number out of range");
  return kElements[z];
}

void validate_conformer(const Conformer& conf) {
  if (conf.n() < 1) throw InvalidInput("conformer has no atoms");
  if (static_cast<Eigen::Index>(conf.Z.size()) != conf.n())
    throw InvalidInput("conformer has " + std::to_string(conf.Z.size()) + " atomic numbers for " +
                       std::to_string(conf.n()) + " positions");
  for (std::size_t i = 0; i < conf.Z.size(); ++i)
    if (conf.Z[i] < 1 || conf.Z[i] > 118)
      throw InvalidInput("Z[" + std::to_string(i) + "] = " + std::to_string(conf.Z[i]) +
                         " is outside [1, 118]");
  if (!detail::all_finite(conf.R)) throw InvalidInput("conformer coordinates are not finite");
}

void validate_molecule(const Molecule2D& mol) {
  if (mol.n() < 1) throw InvalidInput("molecule has no atoms");
  if (!detail::all_finite(mol.node_features)) throw InvalidInput("node_features are not finite");
  const int n = static_cast<int>(mol.n());
  for (std::size_t e = 0; e < mol.edges.size(); ++e) {
    const auto [i, j] = mol.edges[e];
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw InvalidInput("edges[" + std::to_string(e) + "] references a missing node");
    if (i == j) throw InvalidInput("edges[" + std::to_string(e) + "] is a self-loop");
  }
  if (mol.edge_features) {
    if (mol.edge_features->rows() != static_cast<Eigen::Index>(mol.edges.size()))
      throw InvalidInput("edge_features has " + std::to_string(mol.edge_features->rows()) +
                         " rows for " + std::to_string(mol.edges.size()) + " edges");
    if (!detail::all_finite(*mol.edge_features)) throw InvalidInput("edge_features are not finite");
  }
}

std::vector<Conformer> parse_xyz(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
  }

  std::vector<Conformer> frames;
  std::size_t pos = 0;
  while (true) {
    while (pos < lines.size() && trim(lines[pos]).empty()) ++pos;
    if (pos >= lines.size()) break;

    const std::string count_text = trim(lines[pos]);
    std::size_t used = 0;
    long count = 0;
    try {
      count = std::stol(count_text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != count_text.size() || count < 1)
      throw InvalidInput("malformed atom count '" + count_text + "'" + at_line(pos));
    if (pos + 2 + static_cast<std::size_t>(count) > lines.size())
      throw InvalidInput("frame " + std::to_string(frames.size() + 1) + " is truncated: expected " +
                         std::to_string(count) + " atoms");
    pos += 2;  // count and comment lines

    Conformer conf;
    conf.R.resize(count, 3);
    for (long i = 0; i < count; ++i, ++pos) {
      std::istringstream row(lines[pos]);
      std::string symbol;
      double x = 0, y = 0, z = 0;
      if (!(row >> symbol >> x >> y >> z))
        throw InvalidInput("malformed atom line" + at_line(pos));
      int zn = atomic_number(symbol);
      if (zn == 0) throw InvalidInput("unknown element symbol '" + symbol + "'" + at_line(pos));
      conf.Z.push_back(zn);
      conf.R.row(i) << x, y, z;
    }
    if (!frames.empty() && conf.Z != frames.front().Z)
      throw InvalidInput("atom sequence mismatch in frame " + std::to_string(frames.size() + 1));
    validate_conformer(conf);
    frames.push_back(std::move(conf));
  }
  if (frames.empty()) throw InvalidInput("no frames in XYZ input");
  return frames;
}

std::string write_xyz(const std::vector<Conformer>& frames) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& conf : frames) {
    out << conf.n() << "\n\n";
    for (Eigen::Index i = 0; i < conf.n(); ++i)
      out << element_symbol(conf.Z[i]) << ' ' << conf.R(i, 0) << ' ' << conf.R(i, 1) << ' '
          << conf.R(i, 2) << '\n';
  }
  return out.str();
}

MatrixXd pairwise_distances(const Coords& R) {
  const Eigen::Index n = R.rows();
  MatrixXd D = MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) D(i, j) = D(j, i) = (R.row(i) - R.row(j)).norm();
  return D;
}

VectorXd rbf_expand(double dist, const VectorXd& centers, double gamma) {
  return (-gamma * (dist - centers.array()).square()).exp().matrix();
}

VectorXd rbf_centers(double cutoff, double spacing) {
  if (!(cutoff > 0) || !(spacing > 0)) throw InvalidInput("rbf cutoff and spacing must be positive");
  const auto count = static_cast<Eigen::Index>(std::floor(cutoff / spacing + 1e-9)) + 1;
  VectorXd c(count);
  for (Eigen::Index k = 0; k < count; ++k) c(k) = spacing * static_cast<double>(k);
  return c;
}

Conformer rigid_transform(const Conformer& conf, const Eigen::Matrix3d& Q, const Eigen::Vector3d& t) {
  Conformer out = conf;
  out.R = (conf.R * Q.transpose()).rowwise() + t.transpose();
  return out;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d v;
  do {
    for (int k = 0; k < 4; ++k) v(k) = normal(rng);
  } while (v.norm() < 1e-8);
  v.normalize();
  return Eigen::Quaterniond(v(0), v(1), v(2), v(3)).toRotationMatrix();
}

Conformer perturb_conformer(const Conformer& conf, double sigma, std::uint64_t seed, bool rigid_motion) {
  if (!(sigma >= 0)) throw InvalidInput("sigma must be >= 0");
  validate_conformer(conf);
  std::mt19937_64 rng(seed);
  Conformer out = conf;
  if (sigma > 0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < out.n(); ++i)
      for (int k = 0; k < 3; ++k) out.R(i, k) += noise(rng);
  }
  if (!rigid_motion) return out;
  const Eigen::Matrix3d Q = random_rotation(rng);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  Eigen::Vector3d t;
  for (int k = 0; k < 3; ++k) t(k) = shift(rng);
  return rigid_transform(out, Q, t);
}

Conformer synthetic_conformer(int n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("conformer needs at least one atom");
  static constexpr int kElementsUsed[] = {1, 6, 7, 8};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> step(1.0, 1.6);
  std::normal_distribution<double> normal(0.0, 1.0);
  Conformer c;
  c.R = Coords::Zero(n, 3);
  for (int i = 0; i < n; ++i) {
    c.Z.push_back(kElementsUsed[pick(rng)]);
    if (i == 0) continue;
    Eigen::Vector3d dir;
    do {
      for (int k = 0; k < 3; ++k) dir(k) = normal(rng);
    } while (dir.norm() < 1e-8);
    c.R.row(i) = c.R.row(i - 1) + step(rng) * dir.normalized().transpose();
  }
  return c;
}

}  // namespace conan

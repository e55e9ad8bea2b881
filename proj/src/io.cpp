#include "conan/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace conan {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path);
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::remove(tmp.c_str());
      throw InvalidInput("cannot write " + path);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw InvalidInput("cannot write " + path + ": " + ec.message());
  }
}

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

MatrixXd matrix_from_json(const Json& j, const std::string& name, Eigen::Index expected_cols) {
  if (!j.is_array()) throw InvalidInput(name + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = expected_cols;
  if (cols < 0) cols = rows > 0 && j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    const std::string where = name + "[" + std::to_string(i) + "]";
    if (!row.is_array()) throw InvalidInput(where + " must be an array");
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw InvalidInput(where + " has length " + std::to_string(row.size()) + ", expected " +
                         std::to_string(cols));
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& x = row[static_cast<std::size_t>(c)];
      if (!x.is_number()) throw InvalidInput(where + "[" + std::to_string(c) + "] is not a number");
      m(i, c) = x.get<double>();
    }
  }
  return m;
}

VectorXd vector_from_json(const Json& j, const std::string& name) {
  if (!j.is_array()) throw InvalidInput(name + " must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput(name + "[" + std::to_string(i) + "] is not a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw InvalidInput("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw InvalidInput(std::string("missing field '") + key + "'");
  return *it;
}

Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidInput("malformed JSON in " + source + ": " + e.what());
  }
}

}  // namespace

Graph graph_from_json(const Json& j) {
  Graph g;
  const Json& h = field(j, "H");
  const Eigen::Index d = h.is_array() && !h.empty() && h[0].is_array() ? static_cast<Eigen::Index>(h[0].size()) : 0;
  g.H = matrix_from_json(h, "H", d);
  const Eigen::Index n = g.H.rows();
  const Json& a = field(j, "A");
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != n)
    throw InvalidInput("A has " + std::to_string(a.is_array() ? a.size() : 0) + " rows, expected " +
                       std::to_string(n));
  g.A = matrix_from_json(a, "A", n);
  if (j.contains("omega")) {
    g.omega = vector_from_json(j["omega"], "omega");
    if (g.omega.size() != n)
      throw InvalidInput("omega has length " + std::to_string(g.omega.size()) + ", expected " + std::to_string(n));
  } else {
    g.omega = uniform_weights<double>(n);
  }
  return g;
}

Json graph_to_json(const Graph& g) {
  Json j;
  j["H"] = matrix_to_json(g.H);
  j["A"] = matrix_to_json(g.A);
  j["omega"] = vector_to_json(g.omega);
  return j;
}

Graph read_graph_json(const std::string& path) { return graph_from_json(parse_json(read_text(path), path)); }

void write_graph_json(const std::string& path, const Graph& g) { write_text_atomic(path, dump(graph_to_json(g))); }

Molecule2D molecule_from_json(const Json& j) {
  Molecule2D m;
  const Json& nf = field(j, "node_features");
  const Eigen::Index d0 = nf.is_array() && !nf.empty() && nf[0].is_array() ? static_cast<Eigen::Index>(nf[0].size()) : 0;
  m.node_features = matrix_from_json(nf, "node_features", d0);
  if (j.contains("n")) {
    if (!j["n"].is_number_integer() || j["n"].get<long>() != m.n())
      throw InvalidInput("n does not match the " + std::to_string(m.n()) + " rows of node_features");
  }
  if (j.contains("edges")) {
    const Json& e = j["edges"];
    if (!e.is_array()) throw InvalidInput("edges must be an array");
    for (std::size_t k = 0; k < e.size(); ++k) {
      const std::string where = "edges[" + std::to_string(k) + "]";
      if (!e[k].is_array() || e[k].size() != 2 || !e[k][0].is_number_integer() || !e[k][1].is_number_integer())
        throw InvalidInput(where + " must be a pair of node indices");
      m.edges.emplace_back(e[k][0].get<int>(), e[k][1].get<int>());
    }
  }
  if (j.contains("edge_features") && !j["edge_features"].is_null()) {
    const Json& ef = j["edge_features"];
    const Eigen::Index de = ef.is_array() && !ef.empty() && ef[0].is_array() ? static_cast<Eigen::Index>(ef[0].size()) : 0;
    m.edge_features = matrix_from_json(ef, "edge_features", de);
  }
  validate_molecule(m);
  return m;
}

Json molecule_to_json(const Molecule2D& mol) {
  Json j;
  j["n"] = mol.n();
  j["node_features"] = matrix_to_json(mol.node_features);
  Json edges = Json::array();
  for (const auto& [a, b] : mol.edges) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  if (mol.edge_features) j["edge_features"] = matrix_to_json(*mol.edge_features);
  return j;
}

Json to_json(const RateReport& rep) {
  Json j;
  j["k_values"] = rep.k_values;
  j["mean_sq_fgw"] = rep.mean_sq_fgw;
  j["slope"] = std::isfinite(rep.slope) ? Json(rep.slope) : Json(nullptr);
  j["trials"] = rep.trials;
  j["seed"] = rep.seed;
  j["sigma"] = rep.sigma;
  j["k_ref"] = rep.k_ref;
  return j;
}

Json to_json(const RuntimeReport& rep) {
  Json j;
  j["k_values"] = rep.k_values;
  j["mean_seconds"] = rep.mean_seconds;
  j["ratios"] = rep.ratios;
  j["samples"] = rep.samples;
  j["n"] = rep.n;
  j["d"] = rep.d;
  j["repeats"] = rep.repeats;
  return j;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_csv(const RateReport& rep) {
  std::string out = "k,mean_sq_fgw\n";
  for (std::size_t i = 0; i < rep.k_values.size(); ++i)
    out += std::to_string(rep.k_values[i]) + "," + fmt(rep.mean_sq_fgw[i]) + "\n";
  return out;
}

std::string to_csv(const RuntimeReport& rep) {
  std::string out = "k,mean_seconds,ratio_to_previous\n";
  for (std::size_t i = 0; i < rep.k_values.size(); ++i)
    out += std::to_string(rep.k_values[i]) + "," + fmt(rep.mean_seconds[i]) + "," +
           (i == 0 ? std::string() : fmt(rep.ratios[i - 1])) + "\n";
  return out;
}

std::string dump(const Json& j) { return j.dump() + "\n"; }

}  // namespace conan

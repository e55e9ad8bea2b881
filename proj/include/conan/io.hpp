#pragma once

#include <json.hpp>

#include <string>

#include "conan/bench.hpp"
#include "conan/conan.hpp"
#include "conan/conformer.hpp"
#include "conan/graph.hpp"

namespace conan {

using Json = nlohmann::ordered_json;

std::string read_text(const std::string& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

Json matrix_to_json(const MatrixXd& m);
Json vector_to_json(const VectorXd& v);
/// Parses an array of equal-length numeric rows; `name` prefixes errors.
MatrixXd matrix_from_json(const Json& j, const std::string& name, Eigen::Index expected_cols = -1);
VectorXd vector_from_json(const Json& j, const std::string& name);

/// {"H": [[...]], "A": [[...]], "omega": [...]}; omega defaults to uniform.
/// Checks shapes only; call validate_graph for the numerical invariants.
Graph graph_from_json(const Json& j);
Json graph_to_json(const Graph& g);
Graph read_graph_json(const std::string& path);
void write_graph_json(const std::string& path, const Graph& g);

/// {"n", "node_features", "edges": [[i, j], ...], "edge_features"?}
Molecule2D molecule_from_json(const Json& j);
Json molecule_to_json(const Molecule2D& mol);

Json to_json(const RateReport& rep);
Json to_json(const RuntimeReport& rep);
std::string to_csv(const RateReport& rep);
std::string to_csv(const RuntimeReport& rep);

/// Compact JSON dump with a trailing newline.
std::string dump(const Json& j);

}  // namespace conan

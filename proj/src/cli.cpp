#include "conan/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "conan/io.hpp"

namespace conan {
namespace {

struct SolverFlags {
  double alpha = 0.5;
  double epsilon = 0.1;
  std::string loss = "l2";
  int inner_iters = 30;
  int sinkhorn_iters = 50;
  int outer_iters = 10;
  double tol = 1e-6;
  double sinkhorn_tol = 1e-9;

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "feature/structure trade-off in [0, 1]");
    app->add_option("--epsilon", epsilon, "entropic regularisation");
    app->add_option("--loss", loss, "structure loss: l2 or kl");
    app->add_option("--inner-iters", inner_iters, "FGW linearisation steps");
    app->add_option("--sinkhorn-iters", sinkhorn_iters, "Sinkhorn sweeps per step");
    app->add_option("--outer-iters", outer_iters, "barycenter rounds");
    app->add_option("--tol", tol, "relative change stopping threshold");
    app->add_option("--sinkhorn-tol", sinkhorn_tol, "marginal error stopping threshold");
  }

  FgwParams params() const {
    FgwParams p;
    p.alpha = alpha;
    p.epsilon = epsilon;
    p.loss = parse_loss(loss);
    p.inner_iters = inner_iters;
    p.sinkhorn_iters = sinkhorn_iters;
    p.outer_iters = outer_iters;
    p.tol = tol;
    p.sinkhorn_tol = sinkhorn_tol;
    p.validate();
    return p;
  }
};

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InvalidInput(std::string("missing required flag ") + flag);
}

void require(const std::vector<std::string>& value, const char* flag) {
  if (value.empty()) throw InvalidInput(std::string("missing required flag ") + flag);
}

Graph load_valid_graph(const std::string& path) {
  Graph g = read_graph_json(path);
  const auto report = validate_graph(g);
  if (!report.ok()) throw InvalidInput(path + ": " + report.violations.front());
  return g;
}

std::string csv_path(const std::string& json_path) {
  const auto dot = json_path.find_last_of('.');
  const auto slash = json_path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return json_path + ".csv";
  return json_path.substr(0, dot) + ".csv";
}

std::vector<int> parse_int_list(const std::string& text, const char* flag) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidInput(std::string(flag) + " expects comma-separated integers");
    }
  }
  if (out.empty()) throw InvalidInput(std::string(flag) + " is empty");
  return out;
}

class Emitter {
 public:
  explicit Emitter(std::ostream& out) : out_(out) {}

  void emit(const std::string& path, const Json& j, const std::string& csv = {}) {
    if (path.empty()) {
      out_ << dump(j);
      return;
    }
    if (!csv.empty()) write_text_atomic(csv_path(path), csv);
    write_text_atomic(path, dump(j));
  }

 private:
  std::ostream& out_;
};

std::string one_line(std::string msg) {
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return msg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropic FGW distances, barycenters and conformer-ensemble embeddings"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (FGW_THREADS overrides)");
  Emitter emitter(out);

  // fgw dist / fgw barycenter
  auto* fgw = app.add_subcommand("fgw", "FGW distance and barycenter");
  fgw->require_subcommand(1);
  SolverFlags dist_flags, bary_flags;
  std::string g1_path, g2_path, dist_out, bary_out;
  bool emit_coupling = false;
  auto* dist = fgw->add_subcommand("dist", "entropic FGW between two graphs");
  dist->add_option("--g1", g1_path, "first graph JSON");
  dist->add_option("--g2", g2_path, "second graph JSON");
  dist->add_option("--out", dist_out, "output JSON path");
  dist->add_flag("--emit-coupling", emit_coupling, "include the coupling matrix");
  dist_flags.add(dist);

  std::vector<std::string> bary_inputs;
  int n_bar = 0;
  std::vector<double> lambdas;
  auto* bary = fgw->add_subcommand("barycenter", "entropic FGW barycenter of several graphs");
  bary->add_option("--graphs", bary_inputs, "input graph JSON files");
  bary->add_option("--n-bar", n_bar, "barycenter size (default: common input size)");
  bary->add_option("--lambdas", lambdas, "barycenter weights, one per input");
  bary->add_option("--out", bary_out, "output JSON path");
  bary_flags.add(bary);

  // conan forward
  auto* conan_cmd = app.add_subcommand("conan", "conformer-ensemble forward pass");
  conan_cmd->require_subcommand(1);
  auto* forward = conan_cmd->add_subcommand("forward", "prediction from a 2D graph and conformers");
  std::string graph2d_path, xyz_path, forward_out;
  int k_limit = 0, d = 16;
  std::uint64_t forward_seed = 0;
  bool forward_seed_set = false;
  SolverFlags forward_flags;
  forward->add_option("--graph2d", graph2d_path, "2D molecule JSON");
  forward->add_option("--conformers", xyz_path, "multi-frame XYZ");
  forward->add_option("--k", k_limit, "use the first K frames");
  forward->add_option("--d", d, "embedding width");
  forward->add_option("--seed", forward_seed, "weight seed")->each([&](const std::string&) { forward_seed_set = true; });
  forward->add_option("--out", forward_out, "output JSON path");
  forward_flags.add(forward);

  // bench
  auto* bench = app.add_subcommand("bench", "oracle checks and experiments");
  bench->require_subcommand(1);
  auto* conv = bench->add_subcommand("convergence", "barycenter convergence rate in K");
  int conv_n = 8, conv_kmax = 32, conv_trials = 20;
  double conv_sigma = 0.1;
  std::uint64_t conv_seed = 7;
  std::string conv_out, conv_base;
  SolverFlags conv_flags;
  conv->add_option("--n", conv_n, "atoms in the synthetic base conformer");
  conv->add_option("--sigma", conv_sigma, "coordinate noise in Angstrom");
  conv->add_option("--kmax", conv_kmax, "largest K; K runs over powers of two from 2");
  conv->add_option("--trials", conv_trials, "trials per K");
  conv->add_option("--seed", conv_seed, "master seed");
  conv->add_option("--base", conv_base, "XYZ file whose first frame is the base conformer");
  conv->add_option("--out", conv_out, "output JSON path (CSV mirror alongside)");
  conv_flags.add(conv);

  auto* rt = bench->add_subcommand("runtime", "barycenter wall time against K");
  std::string rt_kvalues = "1,2,4,8,16,32", rt_out;
  int rt_n = 16, rt_d = 16, rt_repeats = 5;
  std::uint64_t rt_seed = 0;
  SolverFlags rt_flags;
  rt->add_option("--kvalues", rt_kvalues, "comma-separated K values");
  rt->add_option("--n", rt_n, "nodes per graph");
  rt->add_option("--d", rt_d, "feature width");
  rt->add_option("--repeats", rt_repeats, "timed repeats per K");
  rt->add_option("--seed", rt_seed, "graph seed");
  rt->add_option("--out", rt_out, "output JSON path (CSV mirror alongside)");
  rt_flags.add(rt);

  auto* bound = bench->add_subcommand("bound", "FGW against the Wasserstein bound on aligned pairs");
  int bound_pairs = 20, bound_nmax = 6;
  double bound_sigma = 0.05, bound_alpha = 0.5, bound_eps = 0.01, bound_slack = 1e-2;
  std::uint64_t bound_seed = 7;
  std::string bound_out;
  bound->add_option("--pairs", bound_pairs, "number of conformer pairs");
  bound->add_option("--nmax", bound_nmax, "largest atom count");
  bound->add_option("--sigma", bound_sigma, "noise between the two conformers");
  bound->add_option("--alpha", bound_alpha, "feature/structure trade-off");
  bound->add_option("--epsilon", bound_eps, "entropic regularisation");
  bound->add_option("--slack", bound_slack, "allowed excess");
  bound->add_option("--seed", bound_seed, "seed");
  bound->add_option("--out", bound_out, "output JSON path");

  // validate
  auto* validate = app.add_subcommand("validate", "check input files");
  std::string val_graph, val_graph2d, val_xyz;
  validate->add_option("--graph", val_graph, "graph JSON");
  validate->add_option("--graph2d", val_graph2d, "2D molecule JSON");
  validate->add_option("--conformers", val_xyz, "multi-frame XYZ");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << one_line(e.what()) << "\n";
    return kExitInvalid;
  }
  const int workers = resolve_threads(threads);

  try {
    if (*dist) {
      require(g1_path, "--g1");
      require(g2_path, "--g2");
      const Graph g1 = load_valid_graph(g1_path), g2 = load_valid_graph(g2_path);
      const auto res = entropic_fgw(g1, g2, dist_flags.params());
      Json j;
      j["cost"] = res.cost;
      j["value_entropic"] = res.value_entropic;
      j["converged"] = res.converged;
      j["inner_iterations"] = res.inner_iterations;
      j["marginal_err"] = res.marginal_err;
      if (emit_coupling) j["coupling"] = matrix_to_json(res.coupling.pi);
      emitter.emit(dist_out, j);
    } else if (*bary) {
      require(bary_inputs, "--graphs");
      std::vector<Graph> graphs;
      for (const auto& p : bary_inputs) graphs.push_back(load_valid_graph(p));
      std::optional<VectorXd> lam;
      if (!lambdas.empty()) lam = Eigen::Map<const VectorXd>(lambdas.data(), static_cast<Eigen::Index>(lambdas.size()));
      BarycenterOptions options;
      options.threads = workers;
      const auto res = barycenter<double>(graphs, n_bar > 0 ? std::optional<Eigen::Index>(n_bar) : std::nullopt,
                                          std::nullopt, lam, bary_flags.params(), options);
      Json j;
      j["graph"] = graph_to_json(res.graph);
      j["outer_iterations"] = res.outer_iterations;
      j["converged"] = res.converged;
      j["objective_trace"] = res.objective_trace;
      emitter.emit(bary_out, j);
    } else if (*forward) {
      require(graph2d_path, "--graph2d");
      require(xyz_path, "--conformers");
      if (!forward_seed_set) throw InvalidInput("missing required flag --seed");
      const Molecule2D mol = molecule_from_json(Json::parse(read_text(graph2d_path)));
      auto confs = parse_xyz(read_text(xyz_path));
      if (k_limit < 0) throw InvalidInput("--k must be >= 1");
      if (k_limit > 0) {
        if (static_cast<std::size_t>(k_limit) > confs.size())
          throw InvalidInput("--k " + std::to_string(k_limit) + " exceeds the " + std::to_string(confs.size()) +
                             " frames in " + xyz_path);
        confs.resize(static_cast<std::size_t>(k_limit));
      }
      EncoderConfig cfg;
      cfg.d = d;
      cfg.node_feature_dim = static_cast<int>(mol.node_features.cols());
      cfg.edge_feature_dim = mol.edge_features ? static_cast<int>(mol.edge_features->cols()) : 0;
      const auto enc = EncoderWeights::from_seed(forward_seed, cfg);
      const auto res = conan_forward(mol, confs, enc, forward_flags.params(), workers);
      Json j;
      j["y_hat"] = res.y_hat;
      j["h2d"] = vector_to_json(res.h2d);
      Json h3d = Json::array();
      for (Eigen::Index k = 0; k < res.h3d.cols(); ++k) h3d.push_back(vector_to_json(res.h3d.col(k)));
      j["h3d"] = std::move(h3d);
      j["h_bc"] = vector_to_json(res.h_bc);
      Json summary;
      summary["n"] = res.barycenter.graph.n();
      summary["outer_iterations"] = res.barycenter.outer_iterations;
      summary["converged"] = res.barycenter.converged;
      summary["objective"] = res.barycenter.objective_trace.empty() ? Json(nullptr)
                                                                     : Json(res.barycenter.objective_trace.back());
      j["barycenter_summary"] = std::move(summary);
      emitter.emit(forward_out, j);
    } else if (*conv) {
      if (conv_kmax < 2) throw InvalidInput("--kmax must be >= 2");
      std::vector<int> ks;
      for (int k = 2; k <= conv_kmax; k *= 2) ks.push_back(k);
      if (ks.size() < 2) throw InvalidInput("--kmax must be >= 4 to give two K values");
      const Conformer base = conv_base.empty() ? synthetic_conformer(conv_n, conv_seed)
                                               : parse_xyz(read_text(conv_base)).front();
      EncoderConfig cfg;
      const auto enc = EncoderWeights::from_seed(conv_seed, cfg);
      const auto rep = convergence_experiment(base, conv_sigma, ks, conv_trials, enc, conv_flags.params(),
                                              conv_seed, workers);
      emitter.emit(conv_out, to_json(rep), to_csv(rep));
    } else if (*rt) {
      const auto rep = runtime_scaling(parse_int_list(rt_kvalues, "--kvalues"), rt_n, rt_d, rt_repeats,
                                       rt_flags.params(), rt_seed);
      emitter.emit(rt_out, to_json(rep), to_csv(rep));
    } else if (*bound) {
      if (bound_pairs < 1 || bound_nmax < 1) throw InvalidInput("--pairs and --nmax must be >= 1");
      EncoderConfig cfg;
      const auto enc = EncoderWeights::from_seed(bound_seed, cfg);
      std::mt19937_64 rng(bound_seed);
      Json pairs = Json::array();
      bool all_hold = true;
      for (int k = 0; k < bound_pairs; ++k) {
        const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(bound_nmax));
        const Conformer c = synthetic_conformer(n, rng());
        const Graph g1 = conformer_to_graph(c, enc);
        const Graph g2 = conformer_to_graph(perturb_conformer(c, bound_sigma, rng()), enc);
        const auto b = wasserstein_bound_check(g1, g2, bound_alpha, 2.0, bound_eps, bound_slack);
        all_hold = all_hold && b.holds;
        pairs.push_back({{"n", n}, {"fgw_cost", b.fgw_cost}, {"w_bound", b.w_bound}, {"holds", b.holds}});
      }
      Json j;
      j["all_hold"] = all_hold;
      j["slack"] = bound_slack;
      j["pairs"] = std::move(pairs);
      emitter.emit(bound_out, j);
    } else if (*validate) {
      if (val_graph.empty() && val_graph2d.empty() && val_xyz.empty())
        throw InvalidInput("missing required flag --graph, --graph2d or --conformers");
      std::vector<std::string> problems;
      if (!val_graph.empty()) {
        const auto report = validate_graph(read_graph_json(val_graph));
        for (const auto& v : report.violations) problems.push_back(val_graph + ": " + v);
      }
      if (!val_graph2d.empty()) {
        try {
          molecule_from_json(Json::parse(read_text(val_graph2d)));
        } catch (const InvalidInput& e) {
          problems.push_back(val_graph2d + ": " + e.what());
        }
      }
      if (!val_xyz.empty()) {
        try {
          parse_xyz(read_text(val_xyz));
        } catch (const InvalidInput& e) {
          problems.push_back(val_xyz + ": " + e.what());
        }
      }
      if (!problems.empty()) {
        std::string msg;
        for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
        throw InvalidInput(msg);
      }
      out << dump(Json{{"valid", true}});
    }
  } catch (const SolverError& e) {
    err << "solver error: " << one_line(e.what()) << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace conan

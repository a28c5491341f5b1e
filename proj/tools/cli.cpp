#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include <laftr/error.hpp>
#include <laftr/eval.hpp>
#include <laftr/generator.hpp>
#include <laftr/graph.hpp>
#include <laftr/optimizer.hpp>
#include <laftr/serialization.hpp>

namespace laftr::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

// Write through a sibling temp file so a failed run never leaves a partial output.
void write_atomically(const std::string& path, const std::function<void(std::ostream&)>& body) {
  const fs::path target(path);
  fs::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    try {
      body(out);
      out.flush();
      if (!out) throw DataError("write failed: " + path);
    } catch (...) {
      out.close();
      std::error_code ignored;
      fs::remove(temp, ignored);
      throw;
    }
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw DataError("cannot write " + path);
  }
}

struct GraphOptions {
  std::string input;
  std::string format = "dense";
  std::optional<std::size_t> nodes;
  std::string labels;
};

void add_graph_options(CLI::App* cmd, GraphOptions& g) {
  cmd->add_option("--input", g.input, "Adjacency file")->required();
  cmd->add_option("--format", g.format, "Input format")->check(CLI::IsMember({"dense", "edges"}));
  cmd->add_option("--nodes", g.nodes, "Node count for edge lists (default: 1 + largest id)");
}

AdjacencyMatrix load_graph(const GraphOptions& g) {
  auto in = open_input(g.input);
  return g.format == "edges" ? load_edge_list(in, g.nodes) : load_dense_matrix(in);
}

void add_fit_options(CLI::App* cmd, FitConfig& c, bool with_lambda = true) {
  if (with_lambda) cmd->add_option("--lambda", c.lambda, "Per-feature penalty scale");
  cmd->add_option("--sigma-w", c.sigma_w, "Std-dev of initial and birth W entries");
  cmd->add_option("--k-init", c.k_init, "Initial feature count");
  cmd->add_option("--seed", c.seed, "RNG seed");
  cmd->add_option("--max-iters", c.max_outer_iters, "Outer iteration cap");
  cmd->add_option("--rel-tol", c.rel_tol, "Relative objective improvement threshold");
  cmd->add_option("--births", c.births_per_iter, "Birth proposals per outer iteration");
  cmd->add_flag("--include-diagonal", c.include_diagonal, "Model self-links y_ii");
}

void validate_fit(const FitConfig& c) {
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != token.size() || !(v > 0.0)) throw UsageError("bad --lambda-grid value '" + token + "'");
    grid.push_back(v);
  }
  if (grid.empty()) throw UsageError("--lambda-grid is empty");
  return grid;
}

std::vector<std::string> load_labels(const std::string& path) {
  auto in = open_input(path);
  std::vector<std::string> labels;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    labels.push_back(line);
  }
  return labels;
}

int cmd_fit(const GraphOptions& g, FitConfig config, const std::string& mask_path, const std::string& out_path,
            const std::string& trace_path, bool verbose, std::ostream& out, std::ostream& err) {
  validate_fit(config);
  const AdjacencyMatrix y = load_graph(g);
  Split split{ObservationMask::all_off_diagonal(y.n(), config.include_diagonal), ObservationMask(y.n())};
  if (!mask_path.empty()) {
    auto in = open_input(mask_path);
    split = load_mask_file(in, y.n());
  }
  if (!trace_path.empty() && split.test.count() == 0)
    throw UsageError("--auc-trace needs held-out entries (\"i j 0\" lines in --mask)");
  const ObservationMask heldout = config.include_diagonal ? split.test : split.test.without_diagonal();

  std::vector<std::pair<double, double>> trace;
  const FitReport report = fit(y, split.train, config, [&](const IterationInfo& info, const ModelState& state) {
    if (!trace_path.empty()) trace.emplace_back(info.seconds, auc_roc(score_entries(y, heldout, state)));
    if (verbose)
      err << "iteration " << info.iteration << ": Q=" << format_real(info.objective) << " K+=" << info.k_plus
          << (info.birth_accepted ? " birth accepted" : "") << '\n';
  });
  if (!trace_path.empty()) {
    // The final polish can change the model after the last observed iteration.
    trace.back().second = auc_roc(score_entries(y, heldout, report.final_state));
  }

  write_atomically(out_path, [&](std::ostream& o) {
    write_model_json(o, report.final_state, report.objective_trace, config.seed);
  });
  if (!trace_path.empty()) {
    write_atomically(trace_path, [&](std::ostream& o) {
      o << "seconds,heldout_auc\n";
      for (auto [s, auc] : trace) o << format_real(s) << ',' << format_real(auc) << '\n';
    });
  }
  out << "k_plus=" << report.final_state.k_plus() << " objective=" << format_real(report.objective_trace.back())
      << " iterations=" << report.objective_trace.size() << " converged=" << (report.converged ? "true" : "false")
      << '\n';
  return kOk;
}

ModelFile load_model(const std::string& path) {
  auto in = open_input(path);
  return read_model_json(in);
}

int cmd_predict(const std::string& model_path, const std::string& pairs_path, const std::string& out_path,
                std::ostream& out) {
  const ModelFile model = load_model(model_path);
  auto in = open_input(pairs_path);
  const auto pairs = load_pair_list(in);
  for (auto [i, j] : pairs)
    if (i >= model.state.n() || j >= model.state.n())
      throw DataError("pair (" + std::to_string(i) + ", " + std::to_string(j) + ") outside the model's " +
                      std::to_string(model.state.n()) + " nodes");
  const auto probs = predict_links(model.state, pairs);
  auto body = [&](std::ostream& o) {
    o << "i,j,probability\n";
    for (std::size_t p = 0; p < pairs.size(); ++p)
      o << pairs[p].first << ',' << pairs[p].second << ',' << format_real(probs[p]) << '\n';
  };
  if (out_path.empty())
    body(out);
  else
    write_atomically(out_path, body);
  return kOk;
}

int cmd_eval(const GraphOptions& g, const FitConfig& config, ProtocolOptions options,
             std::optional<bool> tie_symmetric, const std::string& grid, const std::string& out_path,
             const std::string& summary_path, std::ostream& out) {
  validate_fit(config);
  if (options.splits < 1) throw UsageError("--splits must be >= 1");
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0))
    throw UsageError("--train-fraction must be in (0, 1)");
  if (!grid.empty()) options.lambda_grid = parse_grid(grid);
  if (!grid.empty() && options.folds < 2) throw UsageError("--folds must be >= 2");
  const AdjacencyMatrix y = load_graph(g);
  options.tie_symmetric = tie_symmetric.value_or(y.symmetric_hint());
  options.threads = thread_budget();
  const ProtocolResult result = run_protocol(y, options, config);
  if (!out_path.empty()) write_atomically(out_path, [&](std::ostream& o) { write_protocol_csv(o, result); });
  if (summary_path.empty())
    write_protocol_json(out, result);
  else
    write_atomically(summary_path, [&](std::ostream& o) { write_protocol_json(o, result); });
  return kOk;
}

int cmd_cv(const GraphOptions& g, const FitConfig& config, CvOptions options, std::optional<bool> tie_symmetric,
           const std::string& grid, const std::string& mask_path, const std::string& out_path, std::ostream& out,
           std::ostream& err) {
  validate_fit(config);
  const auto lambdas = parse_grid(grid);
  if (options.folds < 2) throw UsageError("--folds must be >= 2");
  const AdjacencyMatrix y = load_graph(g);
  ObservationMask train = ObservationMask::all_off_diagonal(y.n(), config.include_diagonal);
  if (!mask_path.empty()) {
    auto in = open_input(mask_path);
    train = load_mask_file(in, y.n()).train;
  }
  options.tie_symmetric = tie_symmetric.value_or(y.symmetric_hint());
  options.threads = thread_budget();
  const CvResult result = cross_validate_lambda(y, train, lambdas, options, config);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  if (out_path.empty())
    write_cv_csv(out, result);
  else
    write_atomically(out_path, [&](std::ostream& o) { write_cv_csv(o, result); });
  out << "best_lambda=" << format_real(result.best_lambda) << '\n';
  return kOk;
}

struct GenerateOptions {
  std::size_t nodes = 100;
  double alpha = 3.0;
  double sigma_w = 1.0;
  std::size_t planted = 0;
  double weight = 6.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string truth;
};

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  if (o.nodes < 1) throw UsageError("--nodes must be >= 1");
  BinaryMatrix z;
  RealMatrix w;
  AdjacencyMatrix y;
  if (o.planted > 0) {
    if (o.planted > o.nodes) throw UsageError("--planted must not exceed --nodes");
    if (!std::isfinite(o.weight)) throw UsageError("--weight must be finite");
    z = planted_blocks(o.nodes, o.planted);
    w = planted_weights(o.planted, o.weight);
    y = sample_links(z, w, o.seed);
  } else {
    if (!(o.alpha > 0.0)) throw UsageError("--alpha must be > 0");
    if (!(o.sigma_w > 0.0)) throw UsageError("--sigma-w must be > 0");
    auto sample = sample_lfrm(o.nodes, o.alpha, o.sigma_w, o.seed);
    z = std::move(sample.z);
    w = std::move(sample.w);
    y = std::move(sample.y);
  }
  const std::string truth_path = o.truth.empty() ? o.out + ".truth.json" : o.truth;
  write_atomically(o.out, [&](std::ostream& s) { write_dense_matrix(s, y); });
  write_atomically(truth_path, [&](std::ostream& s) { write_truth_json(s, z, w); });
  out << "nodes=" << o.nodes << " k=" << z.cols() << " truth=" << truth_path << '\n';
  return kOk;
}

int cmd_communities(const std::string& model_path, const std::string& labels_path, const std::string& out_path,
                    std::ostream& out) {
  const ModelFile model = load_model(model_path);
  const auto& z = model.state.z();
  std::vector<std::string> labels;
  if (!labels_path.empty()) {
    labels = load_labels(labels_path);
    if (labels.size() != z.rows())
      throw ArgumentError("label file has " + std::to_string(labels.size()) + " lines, model has " +
                          std::to_string(z.rows()) + " nodes");
  }
  auto body = [&](std::ostream& o) {
    if (z.cols() == 0) {
      o << "# model has no active features (K+ = 0); no communities\n";
      return;
    }
    std::vector<std::vector<std::size_t>> members(z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t k = 0; k < z.cols(); ++k)
        if (z(i, k)) members[k].push_back(i);
    std::vector<std::size_t> order(z.cols());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return members[a].size() < members[b].size(); });
    for (std::size_t k : order) {
      o << "community " << k << " (" << members[k].size() << " members):";
      for (std::size_t i : members[k]) o << ' ' << (labels.empty() ? std::to_string(i) : labels[i]);
      o << '\n';
    }
  };
  if (out_path.empty())
    body(out);
  else
    write_atomically(out_path, body);
  return kOk;
}

}  // namespace

std::size_t thread_budget() {
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LAFTR_THREADS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) threads = std::min<std::size_t>(threads, cap);
  }
  return threads;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Latent feature relational model fitting and link prediction", "laftr"};
  app.require_subcommand(1);

  GraphOptions graph;
  FitConfig config;
  std::string mask_path, out_path, model_path, trace_path, summary_path, grid, labels_path;
  std::optional<bool> tie_symmetric;
  bool verbose = false;
  ProtocolOptions protocol;
  CvOptions cv;
  GenerateOptions gen;

  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to an adjacency matrix");
  add_graph_options(fit_cmd, graph);
  add_fit_options(fit_cmd, config);
  fit_cmd->add_option("--mask", mask_path, "Mask file: \"i j 1\" train, \"i j 0\" held out");
  fit_cmd->add_option("--out", out_path, "Model JSON")->required();
  fit_cmd->add_option("--auc-trace", trace_path, "CSV of (seconds, heldout_auc) per outer iteration");
  fit_cmd->add_flag("--verbose", verbose, "Log each outer iteration to stderr");

  auto* predict_cmd = app.add_subcommand("predict", "Score node pairs with a fitted model");
  predict_cmd->add_option("--model", model_path, "Model JSON")->required();
  predict_cmd->add_option("--input", graph.input, "Pair list, \"i j\" per line")->required();
  predict_cmd->add_option("--out", out_path, "CSV i,j,probability (default: stdout)");

  auto* eval_cmd = app.add_subcommand("eval", "Repeated train/test split protocol");
  add_graph_options(eval_cmd, graph);
  add_fit_options(eval_cmd, config);
  eval_cmd->add_option("--splits", protocol.splits, "Number of seeded splits");
  eval_cmd->add_option("--train-fraction", protocol.train_fraction, "Fraction of entries used for training");
  eval_cmd->add_option("--tie-symmetric", tie_symmetric, "Keep (i,j) and (j,i) together (default: input symmetry)");
  eval_cmd->add_option("--lambda-grid", grid, "Comma-separated lambdas; chosen per split by CV");
  eval_cmd->add_option("--folds", protocol.folds, "CV folds when --lambda-grid is given");
  eval_cmd->add_option("--out", out_path, "Per-split CSV");
  eval_cmd->add_option("--summary", summary_path, "Aggregate JSON (default: stdout)");

  auto* cv_cmd = app.add_subcommand("cv", "Cross-validate lambda");
  add_graph_options(cv_cmd, graph);
  add_fit_options(cv_cmd, config, false);
  cv_cmd->add_option("--lambda-grid", grid, "Comma-separated lambdas")->required();
  cv_cmd->add_option("--folds", cv.folds, "Number of folds");
  cv_cmd->add_option("--mask", mask_path, "Restrict CV to the mask's train entries");
  cv_cmd->add_option("--tie-symmetric", tie_symmetric, "Keep (i,j) and (j,i) together (default: input symmetry)");
  cv_cmd->add_option("--out", out_path, "Per-lambda CSV (default: stdout)");

  auto* gen_cmd = app.add_subcommand("generate", "Sample a synthetic graph");
  gen_cmd->add_option("--nodes", gen.nodes, "Node count");
  gen_cmd->add_option("--alpha", gen.alpha, "IBP concentration");
  gen_cmd->add_option("--sigma-w", gen.sigma_w, "Std-dev of W entries");
  gen_cmd->add_option("--planted", gen.planted, "Use K disjoint blocks instead of an IBP draw");
  gen_cmd->add_option("--weight", gen.weight, "Planted |W| (+ on the diagonal, - elsewhere)");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--out", gen.out, "Dense adjacency output")->required();
  gen_cmd->add_option("--truth", gen.truth, "Truth sidecar (default: <out>.truth.json)");

  auto* comm_cmd = app.add_subcommand("communities", "List the members of each latent feature");
  comm_cmd->add_option("--model", model_path, "Model JSON")->required();
  comm_cmd->add_option("--labels", labels_path, "Node labels, one per line");
  comm_cmd->add_option("--out", out_path, "Report (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "laftr: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(graph, config, mask_path, out_path, trace_path, verbose, out, err);
    if (*predict_cmd) return cmd_predict(model_path, graph.input, out_path, out);
    if (*eval_cmd) {
      protocol.seed = config.seed;
      return cmd_eval(graph, config, protocol, tie_symmetric, grid, out_path, summary_path, out);
    }
    if (*cv_cmd) {
      cv.seed = config.seed;
      return cmd_cv(graph, config, cv, tie_symmetric, grid, mask_path, out_path, out, err);
    }
    if (*gen_cmd) return cmd_generate(gen, out);
    return cmd_communities(model_path, labels_path, out_path, out);
  } catch (const UsageError& e) {
    err << "laftr: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    err << "laftr: numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "laftr: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace laftr::cli

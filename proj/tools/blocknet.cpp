// Command-line front end: select, infer, simulate, bench, version.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <charconv>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "blocknet/covariance.hpp"
#include "blocknet/error.hpp"
#include "blocknet/pipeline.hpp"
#include "blocknet/simulate.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace blocknet;

namespace {

constexpr const char* kVersion = "1.0.0";

// Exit codes; documented in the README.
enum Exit : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kBadData = 4,
  kConstantColumn = 5,
  kSelectionFailed = 6,
  kBadArgument = 7,
  kInternal = 8,
};

struct RunConfig {
  std::string input;
  std::string output = ".";
  std::string partition;
  bool no_standardize = false;
  std::string method = "shdj";
  std::string penalty = "simple";
  double penalty_c = 1.0;
  double shrr_quantile = 0.5;
  double glasso_tol = 1e-4;
  int glasso_max_iter = 10000;
  int grid_size = 50;
  int threads = 1;
};

struct SimArgs {
  SimConfig cfg;
  int reps = 10;
  std::vector<std::string> strategies;
  bool record_time = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
  std::ostringstream buf;
  writer(buf);
  write_text(path, buf.str());
}

void write_json(const fs::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

fs::path prepare_output(const std::string& dir) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return out;
}

StructureOptions structure_options(const RunConfig& rc) {
  StructureOptions opts;
  opts.calibration = rc.method == "shrr" ? Calibration::robust_regression : Calibration::dimension_jump;
  opts.penalty.shape = rc.penalty == "full" ? PenaltyShape::full : PenaltyShape::linear;
  opts.penalty.c = rc.penalty_c;
  opts.shrr_quantile = rc.shrr_quantile;
  opts.threads = rc.threads;
  return opts;
}

DataMatrix load(const RunConfig& rc) {
  DataMatrix x = read_csv_file(rc.input);
  return rc.no_standardize ? x : standardize(x);
}

StructureResult run_select(const RunConfig& rc, const DataMatrix& x, const CovMatrix& s, const fs::path& out) {
  const auto result = select_structure(s, x.n(), structure_options(rc));
  write_json(out / "partition.json", to_json(result.selected.partition));
  write_json(out / "diagnostics.json", diagnostics_json(result));
  write_with(out / "kappa_dimension.csv", [&](std::ostream& o) { write_kappa_dimension_csv(o, result); });
  write_with(out / "dimension_loglik.csv", [&](std::ostream& o) { write_dimension_loglik_csv(o, result); });
  std::cerr << "selected " << result.selected.partition.num_blocks() << " blocks, dimension "
            << result.selected.dimension << " (" << result.scored.points.size() << " candidates, "
            << result.scored.excluded << " excluded as singular)\n";
  return result;
}

int cmd_select(const RunConfig& rc) {
  const auto out = prepare_output(rc.output);
  const DataMatrix x = load(rc);
  run_select(rc, x, sample_covariance(x), out);
  return kOk;
}

int cmd_infer(const RunConfig& rc) {
  const auto out = prepare_output(rc.output);
  const DataMatrix x = load(rc);
  const CovMatrix s = sample_covariance(x);
  std::optional<Partition> partition;
  if (!rc.partition.empty()) {
    std::ifstream in(rc.partition);
    if (!in) throw IoError("cannot open '" + rc.partition + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidArgument(std::string("partition file is not valid JSON: ") + e.what());
    }
    partition = partition_from_json(doc);
    if (partition->num_variables() != x.p())
      throw InvalidArgument("partition covers " + std::to_string(partition->num_variables()) + " variables, data has " +
                            std::to_string(x.p()));
  } else {
    partition = run_select(rc, x, s, out).selected.partition;
  }

  InferenceOptions opts;
  opts.glasso.tol = rc.glasso_tol;
  opts.glasso.max_iter = rc.glasso_max_iter;
  opts.grid_size = rc.grid_size;
  opts.threads = rc.threads;
  const Network net = infer_network(s, x.n(), *partition, opts);

  write_json(out / "network.json", network_json(net, x.names()));
  const auto edge_dir = out / "edges";
  fs::create_directories(edge_dir);
  int partial = 0;
  for (std::size_t k = 0; k < net.blocks.size(); ++k) {
    const auto& block = net.blocks[k];
    if (!block.converged) {
      ++partial;
      std::cerr << "warning: block " << k << " did not converge; partial result flagged\n";
    }
    if (block.variables.size() < 2) continue;
    write_with(edge_dir / ("block_" + std::to_string(k) + ".csv"), [&](std::ostream& o) { write_block_edges_csv(o, block); });
  }
  std::cerr << "inferred " << net.edges().size() << " edges in " << net.blocks.size() << " blocks";
  if (partial) std::cerr << " (" << partial << " partial)";
  std::cerr << '\n';
  return kOk;
}

int cmd_simulate(const SimArgs& args, const std::string& output) {
  const auto out = prepare_output(output);
  const GroundTruth truth = make_block_cov(args.cfg);
  const DataMatrix x = sample_mvn(truth, args.cfg.n, args.cfg.seed);
  write_with(out / "data.csv", [&](std::ostream& o) { write_csv(o, x); });
  write_json(out / "truth_partition.json", to_json(truth.partition));
  write_with(out / "truth_edges.csv", [&](std::ostream& o) {
    o << "i,j\n";
    for (auto [i, j] : truth.edges) o << i << ',' << j << '\n';
  });
  write_with(out / "sigma.csv", [&](std::ostream& o) { write_csv(o, DataMatrix(truth.sigma, x.names())); });
  return kOk;
}

int cmd_bench(const SimArgs& args, const std::string& output, int threads, const RunConfig& rc) {
  const auto out = prepare_output(output);
  BenchOptions opts;
  if (!args.strategies.empty()) {
    opts.strategies.clear();
    for (const auto& name : args.strategies) opts.strategies.push_back(strategy_from_string(name));
  }
  opts.threads = threads;
  opts.record_time = args.record_time;
  opts.glasso.tol = rc.glasso_tol;
  opts.glasso.max_iter = rc.glasso_max_iter;
  opts.grid_size = rc.grid_size;
  opts.shrr_quantile = rc.shrr_quantile;
  const auto result = run_benchmark(args.cfg, args.reps, opts);
  write_with(out / "bench.csv", [&](std::ostream& o) { write_benchmark_csv(o, result); });
  write_json(out / "summary.json", benchmark_summary_json(result));
  for (const auto& s : result.summary)
    std::cerr << to_string(s.strategy) << ": ari " << s.ari.first << ", sensitivity " << s.sensitivity.first
              << ", specificity " << s.specificity.first << ", fdr " << s.fdr.first << '\n';
  return kOk;
}

void add_common(CLI::App* cmd, RunConfig& rc, std::string& config) {
  cmd->add_option("--config", config, "Flat key = value file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
  cmd->add_option("--threads", rc.threads, "Worker threads (default from BLOCKNET_THREADS)")->check(CLI::Range(1, 1024));
  cmd->add_option("-o,--out", rc.output, "Output directory");
}

void add_input(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("-i,--input", rc.input, "CSV matrix: header of variable names, one observation per row")->required();
  cmd->add_flag("--no-standardize", rc.no_standardize, "Use the data as given instead of centering and scaling");
}

void add_selection(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--method", rc.method, "Slope-heuristic calibration")->check(CLI::IsMember({"shdj", "shrr"}));
  cmd->add_option("--penalty", rc.penalty, "Penalty shape")->check(CLI::IsMember({"simple", "full"}));
  cmd->add_option("--penalty-c", rc.penalty_c, "Constant c of the full penalty shape")->check(CLI::PositiveNumber);
  cmd->add_option("--shrr-quantile", rc.shrr_quantile, "Dimension quantile above which models count as complex")
      ->check(CLI::Range(0.0, 0.999));
}

void add_glasso(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--glasso-tol", rc.glasso_tol, "Relative convergence tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--glasso-max-iter", rc.glasso_max_iter, "Maximum sweeps")->check(CLI::Range(1, 10000000));
  cmd->add_option("--grid-size", rc.grid_size, "Number of rho values searched by BIC")->check(CLI::Range(1, 10000));
}

void add_sim(CLI::App* cmd, SimArgs& args) {
  cmd->add_option("--p", args.cfg.p, "Number of variables")->check(CLI::Range(1, 100000));
  cmd->add_option("--n", args.cfg.n, "Sample size")->check(CLI::Range(1, 10000000));
  cmd->add_option("--k", args.cfg.k, "Number of true blocks")->check(CLI::Range(1, 100000));
  cmd->add_option("--seed", args.cfg.seed, "Random seed");
  cmd->add_option("--eigen-floor", args.cfg.eigen_floor, "Smallest block eigenvalue before rescaling")
      ->check(CLI::PositiveNumber);
}

// Fills options of `cmd` that were not given on the command line from a flat
// key = value file. Keys are long option names without dashes.
void apply_config(CLI::App* cmd, const std::string& path) {
  const auto items = CLI::ConfigINI().from_file(path);
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty()) throw CLI::ConfigError("sections are not supported: '" + item.fullname() + "'");
    if (item.name == "config") throw CLI::ConfigError("config files cannot include other config files");
    CLI::Option* op = cmd->get_option_no_throw("--" + item.name);
    if (op == nullptr) throw CLI::ConfigError("unknown config key '" + item.name + "' for command " + cmd->get_name());
    if (op->count() > 0) continue;
    for (const auto& value : item.inputs) op->add_result(value);
    op->run_callback();
  }
}

int default_threads() {
  const char* env = std::getenv("BLOCKNET_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  int value = 0;
  const auto* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, value);
  if (ec != std::errc{} || ptr != end || value < 1 || value > 1024)
    throw CLI::ValidationError("BLOCKNET_THREADS", std::string("expected an integer in [1, 1024], got '") + env + "'");
  return value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-diagonal covariance selection and network inference for Gaussian graphical models"};
  app.require_subcommand(1);

  RunConfig rc;
  SimArgs sim;
  std::string config;

  auto* select = app.add_subcommand("select", "Detect the block-diagonal covariance structure");
  add_common(select, rc, config);
  add_input(select, rc);
  add_selection(select, rc);

  auto* infer = app.add_subcommand("infer", "Infer a network inside each block");
  add_common(infer, rc, config);
  add_input(infer, rc);
  add_selection(infer, rc);
  add_glasso(infer, rc);
  infer->add_option("--partition", rc.partition, "Partition JSON to use instead of running selection");

  auto* simulate = app.add_subcommand("simulate", "Draw a dataset with block-diagonal covariance");
  add_common(simulate, rc, config);
  add_sim(simulate, sim);

  auto* bench = app.add_subcommand("bench", "Run the simulation benchmark over all strategies");
  add_common(bench, rc, config);
  add_sim(bench, sim);
  add_glasso(bench, rc);
  bench->add_option("--shrr-quantile", rc.shrr_quantile, "Dimension quantile for complex models")
      ->check(CLI::Range(0.0, 0.999));
  bench->add_option("--reps", sim.reps, "Replicates")->check(CLI::Range(1, 1000000));
  bench->add_option("--strategies", sim.strategies, "Subset of glasso,cgl,shrr,shdj,truePart,hac")->delimiter(',');
  bench->add_flag("--record-time", sim.record_time, "Fill the seconds column (output is then not reproducible)");

  app.add_subcommand("version", "Print the version");

  try {
    rc.threads = default_threads();
    app.parse(argc, argv);
    if (!config.empty())
      for (auto* cmd : app.get_subcommands()) apply_config(cmd, config);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (select->parsed()) return cmd_select(rc);
    if (infer->parsed()) return cmd_infer(rc);
    if (simulate->parsed()) return cmd_simulate(sim, rc.output);
    if (bench->parsed()) return cmd_bench(sim, rc.output, rc.threads, rc);
    std::cout << "blocknet " << kVersion << '\n';
    return kOk;
  } catch (const ConstantColumn& e) {
    std::cerr << "error: " << e.what() << "; remove the column and retry\n";
    return kConstantColumn;
  } catch (const InvalidData& e) {
    std::cerr << "error: invalid input data: " << e.what() << '\n';
    return kBadData;
  } catch (const DegeneratePath& e) {
    std::cerr << "error: model selection failed: " << e.what() << '\n';
    return kSelectionFailed;
  } catch (const InsufficientComplexModels& e) {
    std::cerr << "error: model selection failed: " << e.what() << '\n';
    return kSelectionFailed;
  } catch (const EmptyCandidateSet& e) {
    std::cerr << "error: model selection failed: " << e.what() << '\n';
    return kSelectionFailed;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadArgument;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
}

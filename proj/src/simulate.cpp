#include "blocknet/simulate.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "blocknet/error.hpp"
#include "blocknet/parallel.hpp"
#include "blocknet/pipeline.hpp"
#include "blocknet/random.hpp"
#include "format.hpp"

namespace blocknet {

void SimConfig::validate() const {
  if (k < 1 || p < k) throw InvalidArgument("simulation needs p >= k >= 1");
  if (n < 2) throw InvalidArgument("simulation needs n >= 2");
  if (!(eigen_floor > 0.0)) throw InvalidArgument("eigen_floor must be positive");
}

Partition contiguous_blocks(int p, int k) {
  if (k < 1 || p < k) throw InvalidArgument("need p >= k >= 1");
  std::vector<Partition::Block> blocks;
  int next = 0;
  for (int b = 0; b < k; ++b) {
    const int size = p / k + (b < p % k ? 1 : 0);
    Partition::Block block;
    for (int i = 0; i < size; ++i) block.push_back(next++);
    blocks.push_back(std::move(block));
  }
  return Partition(std::move(blocks), p);
}

GroundTruth make_block_cov(const SimConfig& cfg) {
  cfg.validate();
  Rng rng = make_stream(cfg.seed, streams::truth);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  GroundTruth truth;
  truth.partition = contiguous_blocks(cfg.p, cfg.k);
  truth.sigma = Eigen::MatrixXd::Zero(cfg.p, cfg.p);
  for (const auto& block : truth.partition.blocks()) {
    const auto m = static_cast<Eigen::Index>(block.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) t(i, j) = unif(rng);
    Eigen::MatrixXd sigma_k = t * t.transpose();
    const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sigma_k, Eigen::EigenvaluesOnly).eigenvalues()(0);
    sigma_k.diagonal().array() += std::max(0.0, cfg.eigen_floor - lambda_min);
    const auto first = block.front();
    truth.sigma.block(first, first, m, m) = sigma_k;
  }
  truth.scale = truth.sigma.diagonal().cwiseSqrt();
  const Eigen::VectorXd inv_sd = truth.scale.cwiseInverse();
  truth.sigma = inv_sd.asDiagonal() * truth.sigma * inv_sd.asDiagonal();
  truth.sigma = 0.5 * (truth.sigma + truth.sigma.transpose()).eval();
  truth.sigma.diagonal().setOnes();

  const Eigen::MatrixXd theta = truth.sigma.llt().solve(Eigen::MatrixXd::Identity(cfg.p, cfg.p));
  truth.edges = support_edges(theta);
  return truth;
}

DataMatrix sample_mvn(const GroundTruth& truth, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample size must be positive");
  Eigen::LLT<Eigen::MatrixXd> llt(truth.sigma);
  if (llt.info() != Eigen::Success) throw InvalidArgument("sigma is not positive definite");
  Rng rng = make_stream(seed, streams::data);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto p = truth.sigma.rows();
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) z(i, j) = normal(rng);
  Eigen::MatrixXd x = z * llt.matrixL().transpose();
  return DataMatrix(std::move(x));
}

Partition hierarchical_clustering(const CovMatrix& s, int k, Linkage linkage) {
  const int p = static_cast<int>(s.p());
  if (k < 1 || k > p) throw InvalidArgument("cluster count must lie in [1, p]");
  Eigen::MatrixXd d = 1.0 - s.values().cwiseAbs().array();
  std::vector<int> size(static_cast<std::size_t>(p), 1);
  std::vector<char> active(static_cast<std::size_t>(p), 1);
  std::vector<int> label(static_cast<std::size_t>(p));
  std::iota(label.begin(), label.end(), 0);

  for (int clusters = p; clusters > k; --clusters) {
    int best_a = -1, best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < p; ++a) {
      if (!active[static_cast<std::size_t>(a)]) continue;
      for (int b = a + 1; b < p; ++b) {
        if (!active[static_cast<std::size_t>(b)]) continue;
        if (d(a, b) < best) {
          best = d(a, b);
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a < 0) throw InvalidArgument("dissimilarities are not comparable");
    // Lance-Williams update into cluster a.
    const double na = size[static_cast<std::size_t>(best_a)];
    const double nb = size[static_cast<std::size_t>(best_b)];
    for (int c = 0; c < p; ++c) {
      if (!active[static_cast<std::size_t>(c)] || c == best_a || c == best_b) continue;
      const double merged = linkage == Linkage::average ? (na * d(best_a, c) + nb * d(best_b, c)) / (na + nb)
                                                        : std::min(d(best_a, c), d(best_b, c));
      d(best_a, c) = d(c, best_a) = merged;
    }
    size[static_cast<std::size_t>(best_a)] += size[static_cast<std::size_t>(best_b)];
    active[static_cast<std::size_t>(best_b)] = 0;
    for (auto& l : label)
      if (l == best_b) l = best_a;
  }
  return Partition::from_labels(label);
}

EdgeMetrics edge_metrics(const std::vector<std::pair<int, int>>& estimated,
                         const std::vector<std::pair<int, int>>& truth, int p) {
  if (p < 1) throw InvalidArgument("edge metrics need p >= 1");
  auto normalized = [p](const std::vector<std::pair<int, int>>& edges) {
    std::set<std::pair<int, int>> out;
    for (auto [i, j] : edges) {
      if (i == j || i < 0 || j < 0 || i >= p || j >= p) throw InvalidArgument("edge outside the variable range");
      out.emplace(std::min(i, j), std::max(i, j));
    }
    return out;
  };
  const auto est = normalized(estimated);
  const auto tru = normalized(truth);
  EdgeMetrics m;
  for (const auto& e : est) (tru.count(e) ? m.tp : m.fp) += 1;
  m.fn = static_cast<std::int64_t>(tru.size()) - m.tp;
  m.tn = static_cast<std::int64_t>(p) * (p - 1) / 2 - m.tp - m.fp - m.fn;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto ratio = [nan](std::int64_t a, std::int64_t b) { return b == 0 ? nan : static_cast<double>(a) / static_cast<double>(b); };
  m.sensitivity = ratio(m.tp, m.tp + m.fn);
  m.specificity = ratio(m.tn, m.tn + m.fp);
  m.fdr = ratio(m.fp, m.tp + m.fp);
  return m;
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::glasso: return "glasso";
    case Strategy::cgl: return "cgl";
    case Strategy::shrr: return "shrr";
    case Strategy::shdj: return "shdj";
    case Strategy::true_part: return "truePart";
    case Strategy::hac: return "hac";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& name) {
  for (Strategy s : {Strategy::glasso, Strategy::cgl, Strategy::shrr, Strategy::shdj, Strategy::true_part, Strategy::hac})
    if (name == to_string(s)) return s;
  throw InvalidArgument("unknown strategy '" + name + "'");
}

std::vector<Strategy> default_strategies() {
  return {Strategy::glasso, Strategy::cgl, Strategy::shrr, Strategy::shdj, Strategy::true_part};
}

const StrategySummary& BenchmarkResult::of(Strategy s) const {
  for (const auto& entry : summary)
    if (entry.strategy == s) return entry;
  throw InvalidArgument(std::string("strategy not in benchmark: ") + to_string(s));
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

BenchRow run_strategy(Strategy strategy, int replicate, const GroundTruth& truth, const CovMatrix& s, Eigen::Index n,
                      int k_true, const BenchOptions& options) {
  BenchRow row;
  row.replicate = replicate;
  row.strategy = strategy;
  row.ari = kNaN;
  row.metrics = {0, 0, 0, 0, kNaN, kNaN, kNaN};
  const auto start = std::chrono::steady_clock::now();
  const int p = static_cast<int>(s.p());

  InferenceOptions inference;
  inference.glasso = options.glasso;
  inference.grid_size = options.grid_size;
  try {
    std::optional<Partition> partition;
    bool infer = true;
    switch (strategy) {
      case Strategy::glasso:
        partition = Partition::single_block(p);
        break;
      case Strategy::cgl:
        partition = hac_average(s, k_true);
        inference.rule = RhoRule::connected;
        break;
      case Strategy::hac:
        partition = hac_average(s, k_true);
        infer = false;
        break;
      case Strategy::shrr:
      case Strategy::shdj: {
        StructureOptions structure;
        structure.calibration = strategy == Strategy::shdj ? Calibration::dimension_jump : Calibration::robust_regression;
        structure.shrr_quantile = options.shrr_quantile;
        partition = select_structure(s, n, structure).selected.partition;
        break;
      }
      case Strategy::true_part:
        partition = truth.partition;
        break;
    }
    if (strategy != Strategy::glasso) {
      row.ari = adjusted_rand_index(*partition, truth.partition);
      row.k_selected = partition->num_blocks();
      row.d_selected = partition->dimension();
    }
    if (infer) {
      const Network net = infer_network(s, n, *partition, inference);
      row.metrics = edge_metrics(net.edges(), truth.edges, p);
      for (const auto& block : net.blocks)
        if (!block.converged) row.status = "partial";
    }
  } catch (const std::exception& e) {
    row.status = std::string("failed: ") + e.what();
  }
  row.seconds = options.record_time
                    ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                    : kNaN;
  return row;
}

std::pair<double, double> mean_sd(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values)
    if (std::isfinite(x)) v.push_back(x);
  if (v.empty()) return {kNaN, kNaN};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, kNaN};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

BenchmarkResult run_benchmark(const SimConfig& cfg, int reps, const BenchOptions& options) {
  cfg.validate();
  if (reps < 1) throw InvalidArgument("benchmark needs at least one replicate");
  if (options.strategies.empty()) throw InvalidArgument("benchmark needs at least one strategy");

  std::vector<std::vector<BenchRow>> per_replicate(static_cast<std::size_t>(reps));
  parallel_for(per_replicate.size(), options.threads, [&](std::size_t r) {
    SimConfig rep_cfg = cfg;
    rep_cfg.seed = mix_seed(cfg.seed, r);
    auto& rows = per_replicate[r];
    try {
      const GroundTruth truth = make_block_cov(rep_cfg);
      const DataMatrix x = standardize(sample_mvn(truth, cfg.n, rep_cfg.seed));
      const CovMatrix s = sample_covariance(x);
      for (Strategy strategy : options.strategies)
        rows.push_back(run_strategy(strategy, static_cast<int>(r), truth, s, x.n(), cfg.k, options));
    } catch (const std::exception& e) {
      rows.clear();
      for (Strategy strategy : options.strategies) {
        BenchRow row;
        row.replicate = static_cast<int>(r);
        row.strategy = strategy;
        row.ari = kNaN;
        row.metrics = {0, 0, 0, 0, kNaN, kNaN, kNaN};
        row.seconds = kNaN;
        row.status = std::string("failed: ") + e.what();
        rows.push_back(row);
      }
    }
  });

  BenchmarkResult result;
  result.config = cfg;
  result.replicates = reps;
  for (auto& rows : per_replicate)
    for (auto& row : rows) result.rows.push_back(std::move(row));

  for (Strategy strategy : options.strategies) {
    StrategySummary sum;
    sum.strategy = strategy;
    std::vector<double> ari, sens, spec, fdr, k, d, secs;
    for (const auto& row : result.rows) {
      if (row.strategy != strategy) continue;
      if (row.status.rfind("failed", 0) == 0) {
        ++sum.failed;
        continue;
      }
      ++sum.succeeded;
      ari.push_back(row.ari);
      sens.push_back(row.metrics.sensitivity);
      spec.push_back(row.metrics.specificity);
      fdr.push_back(row.metrics.fdr);
      k.push_back(row.k_selected < 0 ? kNaN : row.k_selected);
      d.push_back(row.d_selected < 0 ? kNaN : static_cast<double>(row.d_selected));
      secs.push_back(row.seconds);
    }
    sum.ari = mean_sd(ari);
    sum.sensitivity = mean_sd(sens);
    sum.specificity = mean_sd(spec);
    sum.fdr = mean_sd(fdr);
    sum.k_selected = mean_sd(k);
    sum.d_selected = mean_sd(d);
    sum.seconds = mean_sd(secs);
    result.summary.push_back(sum);
  }
  return result;
}

void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result) {
  using detail::format_double;
  out << "replicate,strategy,ari,sensitivity,specificity,fdr,k_selected,d_selected,seconds,status\n";
  for (const auto& row : result.rows) {
    out << row.replicate << ',' << to_string(row.strategy) << ',' << format_double(row.ari) << ','
        << format_double(row.metrics.sensitivity) << ',' << format_double(row.metrics.specificity) << ','
        << format_double(row.metrics.fdr) << ',' << (row.k_selected < 0 ? "NA" : std::to_string(row.k_selected)) << ','
        << (row.d_selected < 0 ? "NA" : std::to_string(row.d_selected)) << ',' << format_double(row.seconds) << ',';
    // status may contain commas
    if (row.status.find_first_of(",\"") == std::string::npos) {
      out << row.status;
    } else {
      out << '"';
      for (char c : row.status) out << (c == '"' ? "\"\"" : std::string(1, c));
      out << '"';
    }
    out << '\n';
  }
}

nlohmann::json benchmark_summary_json(const BenchmarkResult& result) {
  auto stat = [](const std::pair<double, double>& ms) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return nlohmann::json{{"mean", num(ms.first)}, {"sd", num(ms.second)}};
  };
  nlohmann::json strategies = nlohmann::json::object();
  for (const auto& s : result.summary) {
    strategies[to_string(s.strategy)] = {{"succeeded", s.succeeded},
                                         {"failed", s.failed},
                                         {"ari", stat(s.ari)},
                                         {"sensitivity", stat(s.sensitivity)},
                                         {"specificity", stat(s.specificity)},
                                         {"fdr", stat(s.fdr)},
                                         {"k_selected", stat(s.k_selected)},
                                         {"d_selected", stat(s.d_selected)},
                                         {"seconds", stat(s.seconds)}};
  }
  return {{"config",
           {{"p", result.config.p},
            {"n", result.config.n},
            {"k", result.config.k},
            {"seed", result.config.seed},
            {"eigen_floor", result.config.eigen_floor}}},
          {"replicates", result.replicates},
          {"strategies", std::move(strategies)}};
}

}  // namespace blocknet

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "blocknet/covariance.hpp"
#include "blocknet/glasso.hpp"
#include "blocknet/partition.hpp"
#include "json.hpp"

namespace blocknet {

struct SimConfig {
  int p = 100;
  int n = 70;
  int k = 15;
  std::uint64_t seed = 1;
  /// Smallest eigenvalue enforced on each block before rescaling.
  double eigen_floor = 0.1;

  /// Throws InvalidArgument unless p >= k >= 1, n >= 2 and eigen_floor > 0.
  void validate() const;
};

struct GroundTruth {
  /// Block-diagonal correlation matrix.
  Eigen::MatrixXd sigma;
  /// Standard deviations removed by the rescaling: the unscaled matrix is
  /// diag(scale) * sigma * diag(scale).
  Eigen::VectorXd scale;
  Partition partition = Partition::singletons(1);
  /// Off-diagonal support of sigma^{-1}, (i, j) with i < j.
  std::vector<std::pair<int, int>> edges;
};

/// Contiguous blocks with sizes differing by at most one (larger blocks first).
Partition contiguous_blocks(int p, int k);

/// Each block is T T' + delta I with T lower triangular, entries U(-1, 1),
/// and delta = max(0, eigen_floor - lambda_min(T T')); the assembled matrix
/// is rescaled to unit diagonal. Draws from the (cfg.seed, truth) stream.
GroundTruth make_block_cov(const SimConfig& cfg);

/// n rows of N(0, sigma) as Z L' with L = chol(sigma); deterministic in `seed`.
DataMatrix sample_mvn(const GroundTruth& truth, int n, std::uint64_t seed);

enum class Linkage { average, single };

/// Agglomerative clustering on d_ij = 1 - |s_ij|, cut at k clusters.
/// Ties merge the pair with the smallest (lower index, higher index).
Partition hierarchical_clustering(const CovMatrix& s, int k, Linkage linkage);
inline Partition hac_average(const CovMatrix& s, int k) { return hierarchical_clustering(s, k, Linkage::average); }

/// Edge recovery over the p(p-1)/2 unordered pairs. Undefined ratios (0/0)
/// are NaN.
struct EdgeMetrics {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double fdr = 0.0;
};

EdgeMetrics edge_metrics(const std::vector<std::pair<int, int>>& estimated,
                         const std::vector<std::pair<int, int>>& truth, int p);

enum class Strategy { glasso, cgl, shrr, shdj, true_part, hac };

const char* to_string(Strategy s);
/// Throws InvalidArgument for an unknown name.
Strategy strategy_from_string(const std::string& name);
/// glasso, cgl, shrr, shdj, true_part
std::vector<Strategy> default_strategies();

struct BenchOptions {
  std::vector<Strategy> strategies = default_strategies();
  int threads = 1;
  GlassoOptions glasso;
  int grid_size = 50;
  double shrr_quantile = 0.5;
  /// Wall-clock seconds are nondeterministic; when false the column holds NA.
  bool record_time = false;
};

struct BenchRow {
  int replicate = 0;
  Strategy strategy = Strategy::glasso;
  double ari = 0.0;
  EdgeMetrics metrics;
  int k_selected = -1;
  std::int64_t d_selected = -1;
  double seconds = 0.0;
  std::string status = "ok";
};

struct StrategySummary {
  Strategy strategy = Strategy::glasso;
  int succeeded = 0;
  int failed = 0;
  /// (mean, sd) over replicates where the value is defined.
  std::pair<double, double> ari, sensitivity, specificity, fdr, k_selected, d_selected, seconds;
};

struct BenchmarkResult {
  SimConfig config;
  int replicates = 0;
  std::vector<BenchRow> rows;
  std::vector<StrategySummary> summary;

  const StrategySummary& of(Strategy s) const;
};

/// Replicate r draws its truth and data from seed mix_seed(cfg.seed, r);
/// rows are ordered by replicate then strategy regardless of threading.
BenchmarkResult run_benchmark(const SimConfig& cfg, int reps, const BenchOptions& options = {});

/// replicate,strategy,ari,sensitivity,specificity,fdr,k_selected,d_selected,seconds,status
void write_benchmark_csv(std::ostream& out, const BenchmarkResult& result);
nlohmann::json benchmark_summary_json(const BenchmarkResult& result);

}  // namespace blocknet

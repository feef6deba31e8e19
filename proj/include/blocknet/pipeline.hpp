#pragma once

#include <string>
#include <vector>

#include "blocknet/covariance.hpp"
#include "blocknet/glasso.hpp"
#include "blocknet/partition.hpp"
#include "blocknet/selection.hpp"
#include "json.hpp"

namespace blocknet {

struct StructureOptions {
  Calibration calibration = Calibration::dimension_jump;
  PenaltyOptions penalty;
  double shrr_quantile = 0.5;
  int threads = 1;
};

/// Block-structure detection: threshold path, likelihood scoring and
/// slope-heuristic selection.
struct StructureResult {
  std::vector<ThresholdStep> path;
  ScoredPath scored;
  /// Set when the candidates span at least two dimensions.
  std::optional<SelectionDiagnostics> diagnostics;
  /// The feasible candidates share one dimension; the first one is taken.
  bool degenerate = false;
  ModelPoint selected;
};

/// `s` should come from standardized data; `n` is its sample size.
StructureResult select_structure(const CovMatrix& s, Eigen::Index n, const StructureOptions& options = {});

enum class RhoRule { bic, connected };

struct InferenceOptions {
  GlassoOptions glasso;
  int grid_size = 50;
  double grid_ratio = 1e-2;
  RhoRule rule = RhoRule::bic;
  int threads = 1;
};

struct BlockNetwork {
  std::vector<int> variables;
  double rho = 0.0;
  PrecisionEstimate estimate;
  /// False when the reported estimate is a last iterate or a fallback.
  bool converged = true;
  std::vector<std::string> warnings;
};

struct Network {
  Partition partition = Partition::singletons(1);
  std::vector<BlockNetwork> blocks;

  /// Edges in global variable indices, (i, j) with i < j, sorted.
  std::vector<std::pair<int, int>> edges() const;
  /// Full p x p precision matrix assembled from the blocks.
  Eigen::MatrixXd precision() const;
};

/// Graphical lasso inside every block of `partition`; blocks are solved
/// concurrently on `options.threads` workers. Singletons carry no edges.
Network infer_network(const CovMatrix& s, Eigen::Index n, const Partition& partition,
                      const InferenceOptions& options = {});

const char* to_string(Calibration c);

nlohmann::json diagnostics_json(const StructureResult& result);
nlohmann::json network_json(const Network& network, const std::vector<std::string>& names);

/// kappa,dimension rows describing the selected dimension as a step function.
void write_kappa_dimension_csv(std::ostream& out, const StructureResult& result);
/// dimension,loglik,lambda,num_blocks for every scored candidate.
void write_dimension_loglik_csv(std::ostream& out, const StructureResult& result);
/// i,j,theta_ij (global, 0-based, i < j) for one block.
void write_block_edges_csv(std::ostream& out, const BlockNetwork& block);

}  // namespace blocknet

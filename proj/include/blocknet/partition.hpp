#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "blocknet/covariance.hpp"

namespace blocknet {

/// Disjoint blocks of variable indices covering {0, ..., p-1}.
///
/// Always held in canonical form: indices ascending inside each block and
/// blocks ordered by their smallest member, so two partitions that differ only
/// by a relabeling of blocks or a reordering within blocks compare equal.
class Partition {
 public:
  using Block = std::vector<int>;

  /// Throws InvalidArgument unless `blocks` is an exact cover of {0..p-1}
  /// by non-empty blocks.
  Partition(std::vector<Block> blocks, int p);

  static Partition singletons(int p);
  static Partition single_block(int p);
  /// Block k holds every variable j with labels[j] == k (labels are arbitrary ints).
  static Partition from_labels(const std::vector<int>& labels);

  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  int num_blocks() const noexcept { return static_cast<int>(blocks_.size()); }
  int num_variables() const noexcept { return p_; }
  std::vector<int> block_sizes() const;
  /// labels[j] = index of the block containing j.
  std::vector<int> labels() const;

  /// Sum over blocks of p_k (p_k - 1) / 2.
  std::int64_t dimension() const noexcept;

  /// True when every block of *this lies inside a block of `coarser`.
  bool refines(const Partition& coarser) const;

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<Block> blocks_;
  int p_ = 0;
};

/// Model dimension from block sizes alone.
std::int64_t dimension_of_sizes(const std::vector<int>& sizes);

struct ThresholdStep {
  double lambda = 0.0;
  Partition partition = Partition::singletons(1);
};

/// Connected components of the graph with an edge i-j whenever |s_ij| > lambda.
Partition components_at(const CovMatrix& s, double lambda);

/// Every distinct partition reached by components_at as lambda sweeps the
/// distinct off-diagonal |s_ij|, ordered by increasing lambda. Each step
/// carries the smallest lambda producing its partition; the first step is the
/// coarsest partition, the last is all singletons.
std::vector<ThresholdStep> threshold_path(const CovMatrix& s);

/// Hubert-Arabie adjusted Rand index. Throws InvalidArgument when the
/// partitions are over different numbers of variables. Defined as 1 when
/// both partitions are trivial in the same way (zero expected-index range).
double adjusted_rand_index(const Partition& a, const Partition& b);

/// {"blocks": [[0, 2], [1]]}
nlohmann::json to_json(const Partition& partition);
/// Infers p from the largest index; throws InvalidArgument on a malformed document.
Partition partition_from_json(const nlohmann::json& doc);

}  // namespace blocknet

#include "blocknet/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <tuple>

#include "blocknet/error.hpp"
#include "json.hpp"
#include "union_find.hpp"

namespace blocknet {

Partition::Partition(std::vector<Block> blocks, int p) : blocks_(std::move(blocks)), p_(p) {
  if (p < 1) throw InvalidArgument("partition needs at least one variable");
  std::vector<char> seen(static_cast<std::size_t>(p), 0);
  for (auto& block : blocks_) {
    if (block.empty()) throw InvalidArgument("partition contains an empty block");
    for (int j : block) {
      if (j < 0 || j >= p) throw InvalidArgument("variable index " + std::to_string(j) + " out of range");
      if (seen[static_cast<std::size_t>(j)]++) throw InvalidArgument("variable " + std::to_string(j) + " appears twice");
    }
    std::sort(block.begin(), block.end());
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw InvalidArgument("partition does not cover every variable");
  std::sort(blocks_.begin(), blocks_.end(), [](const Block& a, const Block& b) { return a.front() < b.front(); });
}

Partition Partition::singletons(int p) {
  std::vector<Block> blocks;
  for (int j = 0; j < p; ++j) blocks.push_back({j});
  return Partition(std::move(blocks), p);
}

Partition Partition::single_block(int p) {
  Block all(static_cast<std::size_t>(std::max(p, 0)));
  std::iota(all.begin(), all.end(), 0);
  return Partition({std::move(all)}, p);
}

Partition Partition::from_labels(const std::vector<int>& labels) {
  std::map<int, Block> groups;
  for (std::size_t j = 0; j < labels.size(); ++j) groups[labels[j]].push_back(static_cast<int>(j));
  std::vector<Block> blocks;
  blocks.reserve(groups.size());
  for (auto& [label, block] : groups) blocks.push_back(std::move(block));
  return Partition(std::move(blocks), static_cast<int>(labels.size()));
}

std::vector<int> Partition::block_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(blocks_.size());
  for (const auto& b : blocks_) sizes.push_back(static_cast<int>(b.size()));
  return sizes;
}

std::vector<int> Partition::labels() const {
  std::vector<int> out(static_cast<std::size_t>(p_));
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    for (int j : blocks_[k]) out[static_cast<std::size_t>(j)] = static_cast<int>(k);
  return out;
}

std::int64_t Partition::dimension() const noexcept { return dimension_of_sizes(block_sizes()); }

bool Partition::refines(const Partition& coarser) const {
  if (p_ != coarser.p_) return false;
  const auto outer = coarser.labels();
  for (const auto& block : blocks_)
    for (int j : block)
      if (outer[static_cast<std::size_t>(j)] != outer[static_cast<std::size_t>(block.front())]) return false;
  return true;
}

std::int64_t dimension_of_sizes(const std::vector<int>& sizes) {
  std::int64_t d = 0;
  for (int s : sizes) d += static_cast<std::int64_t>(s) * (s - 1) / 2;
  return d;
}

Partition components_at(const CovMatrix& s, double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("threshold must be non-negative");
  const int p = static_cast<int>(s.p());
  detail::DisjointSets sets(p);
  for (int j = 0; j < p; ++j)
    for (int i = j + 1; i < p; ++i)
      if (std::abs(s(i, j)) > lambda) sets.unite(i, j);
  return Partition::from_labels(sets.labels());
}

std::vector<ThresholdStep> threshold_path(const CovMatrix& s) {
  const int p = static_cast<int>(s.p());
  struct Edge {
    double weight;
    int i, j;
  };
  std::vector<Edge> edges;
  for (int j = 0; j < p; ++j)
    for (int i = j + 1; i < p; ++i) {
      const double w = std::abs(s(i, j));
      if (w > 0.0) edges.push_back({w, i, j});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(b.weight, a.i, a.j) < std::tie(a.weight, b.i, b.j);
  });

  // Sweep levels from the largest |s_ij| down. The partition after merging
  // every edge of weight >= v_t holds for lambda in [v_{t+1}, v_t).
  detail::DisjointSets sets(p);
  std::vector<ThresholdStep> steps;
  steps.push_back({edges.empty() ? 0.0 : edges.front().weight, Partition::singletons(p)});
  std::size_t e = 0;
  while (e < edges.size()) {
    const double level = edges[e].weight;
    bool changed = false;
    for (; e < edges.size() && edges[e].weight == level; ++e) changed |= sets.unite(edges[e].i, edges[e].j);
    const double next = e < edges.size() ? edges[e].weight : 0.0;
    if (changed)
      steps.push_back({next, Partition::from_labels(sets.labels())});
    else
      steps.back().lambda = next;
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

double adjusted_rand_index(const Partition& a, const Partition& b) {
  if (a.num_variables() != b.num_variables())
    throw InvalidArgument("partitions cover different numbers of variables");
  const auto la = a.labels();
  const auto lb = b.labels();
  const auto n = static_cast<std::int64_t>(la.size());
  std::map<std::pair<int, int>, std::int64_t> table;
  for (std::size_t j = 0; j < la.size(); ++j) ++table[{la[j], lb[j]}];
  auto pairs = [](std::int64_t m) { return m * (m - 1) / 2; };
  // Pair counts are integers; clearing the expected-index fraction keeps the
  // arithmetic exact until the final division.
  __int128 index = 0, sum_a = 0, sum_b = 0;
  for (const auto& [cell, count] : table) index += pairs(count);
  for (int size : a.block_sizes()) sum_a += pairs(size);
  for (int size : b.block_sizes()) sum_b += pairs(size);
  const __int128 total = pairs(n);
  const __int128 num = 2 * (index * total - sum_a * sum_b);
  const __int128 den = (sum_a + sum_b) * total - 2 * sum_a * sum_b;
  if (den == 0 || n < 2) return 1.0;
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

nlohmann::json to_json(const Partition& partition) {
  return nlohmann::json{{"blocks", partition.blocks()}};
}

Partition partition_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("blocks") || !doc.at("blocks").is_array())
    throw InvalidArgument("partition document needs a \"blocks\" array");
  std::vector<Partition::Block> blocks;
  int max_index = -1;
  for (const auto& block : doc.at("blocks")) {
    if (!block.is_array()) throw InvalidArgument("each block must be an array of indices");
    Partition::Block members;
    for (const auto& v : block) {
      if (!v.is_number_integer()) throw InvalidArgument("block members must be integers");
      members.push_back(v.get<int>());
      max_index = std::max(max_index, members.back());
    }
    blocks.push_back(std::move(members));
  }
  return Partition(std::move(blocks), max_index + 1);
}

}  // namespace blocknet

#include <cmath>
#include <sstream>

#include "blocknet/error.hpp"
#include "blocknet/pipeline.hpp"
#include "blocknet/simulate.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace blocknet;

namespace {

bool edges_inside(const std::vector<std::pair<int, int>>& edges, const Partition& b) {
  const auto labels = b.labels();
  for (auto [i, j] : edges)
    if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) return false;
  return true;
}

// Equicorrelated groups of `size`, correlation r inside, 0 across.
GroundTruth separated_groups(int p, int k, double r) {
  GroundTruth truth;
  truth.partition = contiguous_blocks(p, k);
  truth.sigma = Eigen::MatrixXd::Identity(p, p);
  for (const auto& block : truth.partition.blocks())
    for (int i : block)
      for (int j : block)
        if (i != j) truth.sigma(i, j) = r;
  truth.scale = Eigen::VectorXd::Ones(p);
  return truth;
}

}  // namespace

TEST_CASE("contiguous blocks differ in size by at most one") {
  for (int p = 1; p <= 30; ++p)
    for (int k = 1; k <= p; ++k) {
      const auto sizes = contiguous_blocks(p, k).block_sizes();
      REQUIRE(static_cast<int>(sizes.size()) == k);
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      CHECK(*hi - *lo <= 1);
    }
  CHECK(contiguous_blocks(10, 3).block_sizes() == std::vector<int>{4, 3, 3});
  CHECK_THROWS_AS(contiguous_blocks(3, 4), InvalidArgument);
}

TEST_CASE("singleton truth is the identity") {
  const auto truth = make_block_cov({.p = 4, .n = 10, .k = 4, .seed = 9});
  CHECK(truth.sigma.isApprox(Eigen::MatrixXd::Identity(4, 4), 0.0));
  CHECK(truth.edges.empty());
}

TEST_CASE("block covariance honors the eigenvalue floor and is a correlation matrix") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    for (double floor : {0.1, 0.5}) {
      const SimConfig cfg{.p = 23, .n = 10, .k = 4, .seed = seed, .eigen_floor = floor};
      const auto truth = make_block_cov(cfg);
      const Eigen::MatrixXd raw = truth.scale.asDiagonal() * truth.sigma * truth.scale.asDiagonal();
      for (const auto& block : truth.partition.blocks()) {
        const auto m = static_cast<Eigen::Index>(block.size());
        const Eigen::MatrixXd sub = raw.block(block.front(), block.front(), m, m);
        const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sub).eigenvalues()(0);
        CHECK(lmin >= floor - 1e-10);
      }
      CHECK(truth.sigma.diagonal().isOnes(0.0));
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(truth.sigma).eigenvalues()(0) > 0.0);
      CHECK(truth.partition == contiguous_blocks(23, 4));
      CHECK(edges_inside(truth.edges, truth.partition));
    }
  CHECK_THROWS_AS(make_block_cov({.p = 3, .n = 10, .k = 4}), InvalidArgument);
  CHECK_THROWS_AS(make_block_cov({.p = 3, .n = 1, .k = 1}), InvalidArgument);
  CHECK_THROWS_AS(make_block_cov({.p = 3, .n = 10, .k = 1, .eigen_floor = 0.0}), InvalidArgument);
}

TEST_CASE("truth edges stay inside the two blocks") {
  const auto truth = make_block_cov({.p = 6, .n = 10, .k = 2, .seed = 42});
  // support read off an independently computed inverse
  const Eigen::MatrixXd inv = truth.sigma.fullPivLu().inverse();
  std::vector<std::pair<int, int>> support;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j)
      if (std::abs(inv(i, j)) > 1e-8 * inv.cwiseAbs().maxCoeff()) support.emplace_back(i, j);
  CHECK(support == truth.edges);
  CHECK_FALSE(support.empty());
  for (auto [i, j] : support) CHECK(i / 3 == j / 3);
}

TEST_CASE("sample_mvn is deterministic and matches the target covariance") {
  GroundTruth identity = separated_groups(6, 6, 0.0);
  const auto a = sample_mvn(identity, 10000, 5);
  const auto b = sample_mvn(identity, 10000, 5);
  CHECK(a.values() == b.values());
  CHECK_FALSE(a.values() == sample_mvn(identity, 10000, 6).values());

  const Eigen::MatrixXd s = sample_covariance(a).values();
  const double bound = 4.0 / std::sqrt(10000.0);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (i != j) CHECK(std::abs(s(i, j)) < bound);

  const auto one = sample_mvn(identity, 1, 3);
  CHECK(one.n() == 1);
  CHECK(one.p() == 6);
  CHECK_THROWS_AS(sample_mvn(identity, 0, 3), InvalidArgument);
}

TEST_CASE("hierarchical clustering boundary cuts") {
  Rng rng = make_stream(11, 0);
  const CovMatrix s(oracle::random_correlation(rng, 9, 30));
  CHECK(hac_average(s, 9) == Partition::singletons(9));
  CHECK(hac_average(s, 1) == Partition::single_block(9));
  CHECK_THROWS_AS(hac_average(s, 0), InvalidArgument);
  CHECK_THROWS_AS(hac_average(s, 10), InvalidArgument);
}

TEST_CASE("average linkage recovers perfectly separated groups") {
  const auto truth = separated_groups(9, 3, 0.8);
  const CovMatrix s(truth.sigma);
  CHECK(hac_average(s, 3) == truth.partition);
  CHECK(oracle::hac_from_scratch(truth.sigma, 3, true) == truth.partition);
}

TEST_CASE("hierarchical clustering agrees with the from-scratch reference") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng = make_stream(seed, 77);
    const int p = 4 + static_cast<int>(seed % 9);
    const Eigen::MatrixXd m = oracle::random_correlation(rng, p, 25);
    const CovMatrix s(m);
    for (int k = 1; k <= p; ++k) {
      CHECK(hac_average(s, k) == oracle::hac_from_scratch(m, k, true));
      CHECK(hierarchical_clustering(s, k, Linkage::single) == oracle::hac_from_scratch(m, k, false));
    }
  }
}

TEST_CASE("single linkage cuts reproduce the threshold path") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng = make_stream(seed, 78);
    const CovMatrix s(oracle::random_correlation(rng, 12, 40));
    for (const auto& step : threshold_path(s))
      CHECK(hierarchical_clustering(s, step.partition.num_blocks(), Linkage::single) == step.partition);
  }
}

TEST_CASE("edge metrics hand examples") {
  SUBCASE("perfect recovery") {
    const std::vector<std::pair<int, int>> e{{0, 1}, {2, 3}};
    const auto m = edge_metrics(e, e, 4);
    CHECK(m.sensitivity == 1.0);
    CHECK(m.specificity == 1.0);
    CHECK(m.fdr == 0.0);
  }
  SUBCASE("empty estimate") {
    const auto m = edge_metrics({}, {{0, 1}}, 4);
    CHECK(m.sensitivity == 0.0);
    CHECK(std::isnan(m.fdr));
    CHECK(m.specificity == 1.0);
  }
  SUBCASE("one hit one miss") {
    const auto m = edge_metrics({{0, 1}, {0, 2}}, {{0, 1}, {2, 3}}, 4);
    CHECK(m.tp == 1);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
    CHECK(m.tn == 3);
    CHECK(m.sensitivity == 0.5);
    CHECK(m.specificity == 0.75);
    CHECK(m.fdr == 0.5);
  }
  SUBCASE("orientation and duplicates do not matter") {
    const auto m = edge_metrics({{1, 0}, {0, 1}}, {{0, 1}}, 3);
    CHECK(m.tp == 1);
    CHECK(m.fp == 0);
    CHECK(m.tn == 2);
  }
  SUBCASE("empty truth leaves sensitivity undefined") {
    const auto m = edge_metrics({}, {}, 3);
    CHECK(std::isnan(m.sensitivity));
    CHECK(m.specificity == 1.0);
  }
  CHECK_THROWS_AS(edge_metrics({{0, 4}}, {}, 4), InvalidArgument);
  CHECK_THROWS_AS(edge_metrics({{2, 2}}, {}, 4), InvalidArgument);
}

TEST_CASE("strategy names round trip") {
  for (Strategy s : {Strategy::glasso, Strategy::cgl, Strategy::shrr, Strategy::shdj, Strategy::true_part, Strategy::hac})
    CHECK(strategy_from_string(to_string(s)) == s);
  CHECK(std::string(to_string(Strategy::true_part)) == "truePart");
  CHECK_THROWS_AS(strategy_from_string("lasso"), InvalidArgument);
}

TEST_CASE("benchmark tables are reproducible") {
  const SimConfig cfg{.p = 12, .n = 30, .k = 3, .seed = 4};
  BenchOptions opts;
  opts.strategies = {Strategy::glasso, Strategy::cgl, Strategy::shrr, Strategy::shdj, Strategy::true_part, Strategy::hac};
  auto csv = [&](int threads) {
    opts.threads = threads;
    std::ostringstream out;
    write_benchmark_csv(out, run_benchmark(cfg, 3, opts));
    return out.str();
  };
  const std::string first = csv(1);
  CHECK(first == csv(1));
  CHECK(first == csv(3));
  CHECK(first.rfind("replicate,strategy,ari,sensitivity,specificity,fdr,k_selected,d_selected,seconds,status\n", 0) == 0);

  const auto one = run_benchmark(cfg, 1, opts);
  CHECK(one.rows.size() == opts.strategies.size());
  for (const auto& row : one.rows) CHECK(std::isnan(row.seconds));
}

TEST_CASE("strategy filter keeps only the requested strategies") {
  BenchOptions opts;
  opts.strategies = {Strategy::shdj, Strategy::true_part};
  const auto result = run_benchmark({.p = 10, .n = 40, .k = 2, .seed = 8}, 2, opts);
  for (const auto& row : result.rows) CHECK((row.strategy == Strategy::shdj || row.strategy == Strategy::true_part));
  CHECK(result.summary.size() == 2);
  CHECK_THROWS_AS(result.of(Strategy::glasso), InvalidArgument);

  BenchOptions all = opts;
  all.strategies = {Strategy::glasso, Strategy::shdj, Strategy::true_part};
  const auto wider = run_benchmark({.p = 10, .n = 40, .k = 2, .seed = 8}, 2, all);
  // a strategy's rows do not depend on which others ran
  std::vector<BenchRow> a, b;
  for (const auto& row : result.rows)
    if (row.strategy == Strategy::shdj) a.push_back(row);
  for (const auto& row : wider.rows)
    if (row.strategy == Strategy::shdj) b.push_back(row);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ari == b[i].ari);
    CHECK(a[i].metrics.tp == b[i].metrics.tp);
    CHECK(a[i].metrics.fp == b[i].metrics.fp);
  }
}

TEST_CASE("true partition beats glasso on everything in sensitivity") {
  BenchOptions opts;
  opts.strategies = {Strategy::glasso, Strategy::true_part};
  const auto result = run_benchmark({.p = 20, .n = 200, .k = 4, .seed = 2024}, 10, opts);
  CHECK(result.of(Strategy::true_part).failed == 0);
  CHECK(result.of(Strategy::true_part).sensitivity.first >= result.of(Strategy::glasso).sensitivity.first);
  CHECK(result.of(Strategy::true_part).ari.first == 1.0);
}

TEST_CASE("single-block truth") {
  BenchOptions opts;
  opts.strategies = {Strategy::glasso, Strategy::shrr, Strategy::shdj, Strategy::true_part};
  const auto result = run_benchmark({.p = 8, .n = 60, .k = 1, .seed = 5}, 4, opts);
  for (const auto& row : result.rows) {
    if (row.strategy == Strategy::glasso || row.status != "ok") continue;
    if (row.k_selected == 1)
      CHECK(row.ari == 1.0);
    else
      CHECK(row.ari < 1.0);
  }
  CHECK(result.of(Strategy::true_part).ari.first == 1.0);
}

TEST_CASE("separated groups are recovered by both calibrations") {
  const auto truth = separated_groups(20, 4, 0.5);
  int path_hits = 0, shdj_hits = 0, shrr_hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = standardize(sample_mvn(truth, 400, seed));
    const auto s = sample_covariance(x);
    for (const auto& step : threshold_path(s))
      if (step.partition == truth.partition) {
        ++path_hits;
        break;
      }
    StructureOptions opts;
    shdj_hits += select_structure(s, x.n(), opts).selected.partition == truth.partition;
    opts.calibration = Calibration::robust_regression;
    shrr_hits += select_structure(s, x.n(), opts).selected.partition == truth.partition;
  }
  CHECK(path_hits >= 9);
  CHECK(shdj_hits >= 9);
  CHECK(shrr_hits >= 9);
}

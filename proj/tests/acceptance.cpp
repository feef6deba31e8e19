// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances are fixed here and nowhere else.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "blocknet/glasso.hpp"
#include "blocknet/partition.hpp"
#include "blocknet/pipeline.hpp"
#include "blocknet/selection.hpp"
#include "blocknet/simulate.hpp"
#include "oracles.hpp"

using namespace blocknet;

namespace tol {
constexpr double closed_form = 1e-8;
constexpr double objective = 1e-5;
constexpr double slope = 1e-6;
constexpr double ordering_slack = 0.02;
constexpr double equivalence_seconds = 30.0;
}  // namespace tol

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

Partition edge_components(const std::vector<std::pair<int, int>>& edges, int p) {
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(p, p);
  for (auto [i, j] : edges) adj(i, j) = adj(j, i) = 1.0;
  return oracle::components_bfs(adj, 0.5);
}

ModelPoint point(std::int64_t d, double ll) {
  ModelPoint m;
  m.dimension = d;
  m.loglik = ll;
  m.shape = static_cast<double>(d);
  return m;
}

Verdict thresholding_equivalence() {
  Rng rng = make_stream(2001, 0);
  std::uniform_int_distribution<int> pick_p(5, 15);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int mismatches = 0, trials = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int m = 0; m < 20; ++m) {
    const int p = pick_p(rng);
    const CovMatrix s(oracle::random_correlation(rng, p, 2 * p + 5));
    for (int r = 0; r < 3; ++r) {
      const double rho = s.max_abs_offdiag() * unif(rng);
      const auto est = graphical_lasso(s, rho);
      ++trials;
      if (edge_components(est.edges, p) != components_at(s, rho)) ++mismatches;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mismatches == 0 && secs < tol::equivalence_seconds,
          std::to_string(mismatches) + "/" + std::to_string(trials) + " mismatches in " + fmt(secs) + "s"};
}

Verdict solver_correctness() {
  Rng rng = make_stream(2002, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst_closed = 0.0;
  for (int r = 0; r < 100; ++r) {
    const double a = 0.2 + 2.0 * unif(rng), b = 0.2 + 2.0 * unif(rng);
    const double c = (2.0 * unif(rng) - 1.0) * 0.95 * std::sqrt(a * b);
    const double rho = 1.2 * std::abs(c) * unif(rng);
    Eigen::Matrix2d s;
    s << a, c, c, b;
    // the penalty only shrinks the off-diagonal of W
    const double w = std::copysign(std::max(std::abs(c) - rho, 0.0), c);
    Eigen::Matrix2d wm;
    wm << a, w, w, b;
    const auto est = graphical_lasso(CovMatrix(s), rho);
    worst_closed = std::max(worst_closed, (est.theta - Eigen::Matrix2d(wm.inverse())).cwiseAbs().maxCoeff());
  }
  double worst_gap = 0.0;
  for (int r = 0; r < 30; ++r) {
    const int p = 2 + r % 7;
    const auto s = oracle::random_correlation(rng, p, 3 * p);
    const double rho = CovMatrix(s).max_abs_offdiag() * (0.05 + 0.8 * unif(rng));
    const auto est = graphical_lasso(CovMatrix(s), rho);
    worst_gap = std::max(worst_gap, std::abs(glasso_objective(est.theta, s, rho) - oracle::glasso_dual_value(s, rho)));
  }
  return {worst_closed <= tol::closed_form && worst_gap <= tol::objective,
          "2x2 max error " + fmt(worst_closed) + ", p<=8 max objective gap " + fmt(worst_gap)};
}

Verdict step_function_grid() {
  Rng rng = make_stream(2003, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int disagreements = 0;
  for (int set = 0; set < 50; ++set) {
    std::vector<ModelPoint> pts;
    double ll = -1000.0 * unif(rng);
    for (int d = 0; d < 200; d += 1 + static_cast<int>(unif(rng) * 9)) {
      ll += (d < 40 ? 15.0 : 1.5) * (0.2 + unif(rng));
      pts.push_back(point(d, ll + 3.0 * (unif(rng) - 0.5)));
    }
    const auto steps = selection_step_function(pts);
    const double hi = 1.5 * steps.back().kappa;
    for (int g = 0; g < 10000; ++g) {
      const double kappa = hi * (g + 0.5) / 10000.0;
      // dimension implied by the breakpoints: the last one at or below kappa
      std::int64_t from_steps = steps.front().dim_before;
      for (const auto& bp : steps)
        if (bp.kappa <= kappa) from_steps = bp.dim_after;
      if (from_steps != oracle::argmin_dimension(pts, kappa)) ++disagreements;
    }
  }
  return {disagreements == 0, std::to_string(disagreements) + " disagreements over 50 sets x 10^4 grid points"};
}

Verdict slope_recovery() {
  double worst = 0.0;
  int same = 0, cases = 0;
  for (double s : {0.5, 1.0, 3.0, 7.25}) {
    for (int jump_at : {6, 12, 20}) {
      // steep gains up to the true dimension, then loglik affine in D
      std::vector<ModelPoint> pts;
      for (int d = 0; d <= jump_at; d += 2) pts.push_back(point(d, 40.0 * s * d));
      const double top = 40.0 * s * jump_at;
      for (int d = jump_at + 8; d <= 400; d += 6) pts.push_back(point(d, top + s * (d - jump_at)));
      const auto shrr = select_shrr(pts);
      const auto shdj = select_shdj(pts);
      worst = std::max(worst, std::abs(shrr.kappa_opt - 2.0 * s));
      ++cases;
      if (shrr.selected.dimension == shdj.selected.dimension && shrr.selected.dimension == jump_at) ++same;
    }
  }
  return {worst <= tol::slope && same == cases,
          "max |kappa_opt - 2s| " + fmt(worst) + ", SHDJ == SHRR == truth in " + std::to_string(same) + "/" +
              std::to_string(cases)};
}

BenchmarkResult desk_bench() {
  BenchOptions opts;
  opts.strategies = {Strategy::glasso, Strategy::cgl, Strategy::shrr, Strategy::shdj, Strategy::true_part, Strategy::hac};
  return run_benchmark({.p = 50, .n = 60, .k = 8, .seed = 1}, 20, opts);
}

Verdict ari_ordering(const BenchmarkResult& r, const std::string& label) {
  const double hac = r.of(Strategy::hac).ari.first;
  const double dj = r.of(Strategy::shdj).ari.first;
  const double rr = r.of(Strategy::shrr).ari.first;
  int failed = 0;
  for (const auto& s : r.summary) failed += s.failed;
  return {dj > hac && rr > hac && failed == 0,
          label + ": mean ARI shdj " + fmt(dj) + ", shrr " + fmt(rr) + ", hac " + fmt(hac) + ", failed runs " +
              std::to_string(failed)};
}

Verdict edge_ordering(const BenchmarkResult& r) {
  const auto& tp = r.of(Strategy::true_part);
  const auto& gl = r.of(Strategy::glasso);
  bool ok = true;
  std::ostringstream msg;
  msg << "fdr truePart " << fmt(tp.fdr.first) << " glasso " << fmt(gl.fdr.first) << "; spec truePart "
      << fmt(tp.specificity.first) << " glasso " << fmt(gl.specificity.first);
  for (Strategy sh : {Strategy::shdj, Strategy::shrr}) {
    const auto& m = r.of(sh);
    ok = ok && tp.fdr.first <= m.fdr.first + tol::ordering_slack && m.fdr.first <= gl.fdr.first + tol::ordering_slack;
    ok = ok && tp.specificity.first + tol::ordering_slack >= m.specificity.first &&
         m.specificity.first + tol::ordering_slack >= gl.specificity.first;
    msg << "; " << to_string(sh) << " fdr " << fmt(m.fdr.first) << " spec " << fmt(m.specificity.first);
  }
  msg << "; cgl fdr " << fmt(r.of(Strategy::cgl).fdr.first) << " (unranked)";
  return {ok, msg.str()};
}

Verdict dimension_arithmetic() {
  std::vector<int> sizes{18, 13, 8, 5, 3, 3, 3, 3, 2, 2};
  sizes.insert(sizes.end(), 140, 1);
  const int p = std::accumulate(sizes.begin(), sizes.end(), 0);
  const auto d = dimension_of_sizes(sizes);
  // same shape built as an actual partition
  std::vector<Partition::Block> blocks;
  int next = 0;
  for (int size : sizes) {
    Partition::Block b(static_cast<std::size_t>(size));
    std::iota(b.begin(), b.end(), next);
    next += size;
    blocks.push_back(std::move(b));
  }
  const auto d_part = Partition(blocks, p).dimension();
  const auto d_one = Partition::single_block(200).dimension();
  return {p == 200 && d == 283 && d_part == 283 && d_one == 19900,
          "p=" + std::to_string(p) + ", D=" + std::to_string(d) + ", one block D=" + std::to_string(d_one)};
}

Verdict metrics_examples() {
  int bad = 0;
  const Partition a({{0, 1}, {2, 3}}, 4);
  bad += adjusted_rand_index(a, a) != 1.0;
  bad += adjusted_rand_index(a, Partition({{0, 2}, {1, 3}}, 4)) != -0.5;
  bad += adjusted_rand_index(Partition::singletons(5), Partition::singletons(5)) != 1.0;
  const Partition x({{0, 1, 2}, {3, 4, 5}}, 6), y({{0, 1}, {2, 3}, {4, 5}}, 6);
  bad += std::abs(adjusted_rand_index(x, y) - oracle::ari_pair_counts(x, y)) > 1e-15;

  const auto m = edge_metrics({{0, 1}, {0, 2}}, {{0, 1}, {2, 3}}, 4);
  bad += !(m.tp == 1 && m.fp == 1 && m.fn == 1 && m.tn == 3);
  bad += !(m.sensitivity == 0.5 && m.specificity == 0.75 && m.fdr == 0.5);
  const auto same = edge_metrics({{0, 1}, {2, 3}}, {{0, 1}, {2, 3}}, 4);
  bad += !(same.sensitivity == 1.0 && same.specificity == 1.0 && same.fdr == 0.0);
  const auto none = edge_metrics({}, {{0, 1}}, 4);
  bad += !(none.sensitivity == 0.0 && std::isnan(none.fdr));
  return {bad == 0, std::to_string(bad) + " mismatched hand examples"};
}

Verdict bench_determinism() {
  BenchOptions opts;
  opts.strategies = {Strategy::glasso, Strategy::cgl, Strategy::shrr, Strategy::shdj, Strategy::true_part, Strategy::hac};
  auto csv = [&](int threads) {
    opts.threads = threads;
    std::ostringstream out;
    write_benchmark_csv(out, run_benchmark({.p = 30, .n = 40, .k = 5, .seed = 77}, 8, opts));
    return out.str();
  };
  const auto a = csv(1), b = csv(1), c = csv(8);
  return {a == b && a == c, std::string("rerun ") + (a == b ? "identical" : "differs") + ", threads 1 vs 8 " +
                                (a == c ? "identical" : "differs") + ", " + std::to_string(a.size()) + " bytes"};
}

}  // namespace

int main() {
  report(1, "thresholding-glasso equivalence", thresholding_equivalence);
  report(2, "solver correctness", solver_correctness);
  report(3, "step function vs dense kappa grid", step_function_grid);
  report(4, "slope recovery", slope_recovery);

  std::optional<BenchmarkResult> desk;
  report(5, "ARI ordering at p=50 n=60 k=8, 20 reps", [&] {
    desk = desk_bench();
    return ari_ordering(*desk, "desk");
  });
  report(5, "ARI ordering at p=100 n=70 k=15, 100 reps", [] {
    BenchOptions opts;
    opts.strategies = {Strategy::shrr, Strategy::shdj, Strategy::hac};
    return ari_ordering(run_benchmark({.p = 100, .n = 70, .k = 15, .seed = 1}, 100, opts), "full");
  });
  report(6, "FDR and specificity ordering at p=50 n=60 k=8", [&] {
    if (!desk) return Verdict{false, "desk benchmark unavailable"};
    return edge_ordering(*desk);
  });
  report(7, "model dimension arithmetic", dimension_arithmetic);
  report(8, "metric hand examples", metrics_examples);
  report(9, "bench determinism", bench_determinism);

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}

#include "blocknet/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "blocknet/error.hpp"
#include "blocknet/parallel.hpp"

namespace blocknet {

double block_loglik(const CovMatrix& s, Eigen::Index n, const Partition& b) {
  if (b.num_variables() != s.p()) throw InvalidArgument("partition and covariance sizes differ");
  if (n < 1) throw InvalidArgument("sample size must be positive");
  double log_det_sum = 0.0;
  for (int k = 0; k < b.num_blocks(); ++k) {
    const auto& block = b.blocks()[static_cast<std::size_t>(k)];
    const int size = static_cast<int>(block.size());
    if (size >= n) throw SingularBlock(k, size);
    const Eigen::MatrixXd sub = s.submatrix(block).values();
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success) throw SingularBlock(k, size);
    const auto diag = llt.matrixLLT().diagonal();
    const double floor = 1e-12 * sub.diagonal().maxCoeff();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
      const double pivot = diag(i) * diag(i);
      if (!(pivot > floor)) throw SingularBlock(k, size);
      log_det += std::log(pivot);
    }
    log_det_sum += log_det + size;
  }
  const double p = static_cast<double>(s.p());
  return -0.5 * static_cast<double>(n) * (p * std::log(2.0 * std::numbers::pi) + log_det_sum);
}

double block_loglik(const DataMatrix& x, const Partition& b) {
  return block_loglik(sample_covariance(x), x.n(), b);
}

double pen_full(std::int64_t d, std::int64_t n, std::int64_t p, double c) {
  if (d < 0 || n < 1 || p < 1 || !(c > 0.0)) throw InvalidArgument("pen_full needs d >= 0, n >= 1, p >= 1, c > 0");
  if (d == 0) return 0.0;
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  const double pp = static_cast<double>(p);
  const double inner = dd * std::min(dd * c * c / nn, 1.0);
  return dd / nn * (2.0 * c * c + 4.0 * std::log(pp) - std::log(inner));
}

namespace {

double shape_of(std::int64_t dimension, Eigen::Index n, Eigen::Index p, const PenaltyOptions& penalty) {
  if (penalty.shape == PenaltyShape::linear) return static_cast<double>(dimension);
  return static_cast<double>(n) * pen_full(dimension, n, p, penalty.c);
}

}  // namespace

ScoredPath score_path(const CovMatrix& s, Eigen::Index n, const std::vector<ThresholdStep>& path,
                      const PenaltyOptions& penalty, int threads) {
  if (path.empty()) throw InvalidArgument("threshold path is empty");
  std::vector<std::optional<ModelPoint>> slots(path.size());
  parallel_for(path.size(), threads, [&](std::size_t i) {
    const auto& step = path[i];
    try {
      const double ll = block_loglik(s, n, step.partition);
      if (!std::isfinite(ll)) return;
      const auto d = step.partition.dimension();
      slots[i] = ModelPoint{step.lambda, step.partition, d, ll, shape_of(d, n, s.p(), penalty)};
    } catch (const SingularBlock&) {
    }
  });
  ScoredPath out;
  for (auto& slot : slots) {
    if (slot)
      out.points.push_back(std::move(*slot));
    else
      ++out.excluded;
  }
  if (out.points.empty()) throw EmptyCandidateSet("every candidate partition has a singular block");
  return out;
}

ScoredPath score_path(const DataMatrix& x, const std::vector<ThresholdStep>& path,
                      const PenaltyOptions& penalty, int threads) {
  return score_path(sample_covariance(x), x.n(), path, penalty, threads);
}

double criterion(const ModelPoint& m, double kappa, Eigen::Index n) {
  if (!(kappa >= 0.0)) throw InvalidArgument("kappa must be non-negative");
  const double nn = static_cast<double>(n);
  return -m.loglik / nn + kappa * m.shape / nn;
}

namespace {

// -loglik + kappa * shape: the criterion scaled by n, which leaves the argmin unchanged.
double scaled_criterion(const ModelPoint& m, double kappa) { return -m.loglik + kappa * m.shape; }

bool prefer(const ModelPoint& a, double va, const ModelPoint& b, double vb) {
  return va < vb || (va == vb && a.dimension < b.dimension);
}

}  // namespace

std::size_t select_at(const std::vector<ModelPoint>& points, double kappa) {
  if (points.empty()) throw EmptyCandidateSet("no candidate models");
  std::size_t best = 0;
  double best_value = scaled_criterion(points[0], kappa);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double v = scaled_criterion(points[i], kappa);
    if (prefer(points[i], v, points[best], best_value)) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

std::vector<Breakpoint> selection_step_function(const std::vector<ModelPoint>& points) {
  if (points.size() < 2) throw DegeneratePath("need at least two candidate models");
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                            [](const ModelPoint& a, const ModelPoint& b) { return a.dimension < b.dimension; });
  if (lo->dimension == hi->dimension) throw DegeneratePath("every candidate model has the same dimension");

  // Walk the lower convex hull of (shape, -loglik) from the kappa = 0 choice
  // toward smaller models; each hull slope is a criterion tie point.
  std::vector<Breakpoint> steps;
  std::size_t current = select_at(points, 0.0);
  for (;;) {
    const ModelPoint& c = points[current];
    std::optional<double> best_kappa;
    for (const auto& q : points) {
      if (q.shape >= c.shape) continue;
      const double k = (c.loglik - q.loglik) / (c.shape - q.shape);
      if (!best_kappa || k < *best_kappa) best_kappa = k;
    }
    if (!best_kappa) break;
    // Collinear candidates tie at the same kappa up to rounding; the smallest wins.
    const double slack = 1e-10 * std::max(1.0, std::abs(*best_kappa));
    std::optional<std::size_t> next;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const ModelPoint& q = points[i];
      if (q.shape >= c.shape) continue;
      const double k = (c.loglik - q.loglik) / (c.shape - q.shape);
      if (k > *best_kappa + slack) continue;
      if (!next || q.dimension < points[*next].dimension ||
          (q.dimension == points[*next].dimension && q.loglik > points[*next].loglik))
        next = i;
    }
    steps.push_back({std::max(*best_kappa, 0.0), c.dimension, points[*next].dimension, *next});
    current = *next;
  }
  return steps;
}

namespace {

double median_of(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

// Linear-interpolation sample quantile (R type 7).
double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct LineFit {
  double intercept;
  double slope;
};

std::optional<LineFit> weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                                     const std::vector<double>& w) {
  double sw = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    mx += w[i] * x[i];
    my += w[i] * y[i];
  }
  if (!(sw > 0.0)) return std::nullopt;
  mx /= sw;
  my /= sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  const double slope = sxy / sxx;
  return LineFit{my - slope * mx, slope};
}

}  // namespace

RobustFit huber_regression(const std::vector<double>& x, const std::vector<double>& y, double tuning,
                           int max_iter, double tol) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("robust regression needs matching x, y with >= 2 points");
  std::vector<double> w(x.size(), 1.0);
  auto fit = weighted_line(x, y, w);
  if (!fit) throw InvalidArgument("robust regression needs at least two distinct x values");

  double y_scale = 1.0;
  for (double v : y) y_scale = std::max(y_scale, std::abs(v));
  const double sigma_floor = 1e-14 * y_scale;

  RobustFit out{fit->intercept, fit->slope, 0, false};
  std::vector<double> resid(x.size());
  for (int it = 1; it <= max_iter; ++it) {
    std::vector<double> abs_resid(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      resid[i] = y[i] - out.intercept - out.slope * x[i];
      abs_resid[i] = std::abs(resid[i]);
    }
    const double sigma = std::max(median_of(abs_resid) / 0.6745, sigma_floor);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double u = abs_resid[i] / sigma;
      w[i] = u <= tuning ? 1.0 : tuning / u;
    }
    const auto next = weighted_line(x, y, w);
    out.iterations = it;
    if (!next) break;
    const double change = std::abs(next->slope - out.slope);
    out.intercept = next->intercept;
    out.slope = next->slope;
    if (change <= tol * std::max(1.0, std::abs(out.slope))) {
      out.converged = true;
      break;
    }
  }
  return out;
}

SelectionDiagnostics select_shdj(const std::vector<ModelPoint>& points) {
  SelectionDiagnostics diag;
  diag.method = Calibration::dimension_jump;
  diag.step_function = selection_step_function(points);
  const Breakpoint* best = nullptr;
  for (const auto& bp : diag.step_function) {
    if (!best || bp.jump() > best->jump()) {
      best = &bp;
      diag.jump_tie = false;
    } else if (bp.jump() == best->jump()) {
      diag.jump_tie = true;
      // step function is ordered by increasing kappa: the later one is larger
      best = &bp;
    }
  }
  diag.kappa_min = best->kappa;
  diag.kappa_opt = 2.0 * diag.kappa_min;
  diag.selected_index = select_at(points, diag.kappa_opt);
  diag.selected = points[diag.selected_index];
  return diag;
}

SelectionDiagnostics select_shrr(const std::vector<ModelPoint>& points, double complex_quantile) {
  if (!(complex_quantile >= 0.0 && complex_quantile < 1.0))
    throw InvalidArgument("complex-model quantile must lie in [0, 1)");
  if (points.size() < 4) throw InsufficientComplexModels("robust regression needs at least four candidate models");
  std::vector<double> dims;
  dims.reserve(points.size());
  for (const auto& m : points) dims.push_back(static_cast<double>(m.dimension));
  const double cutoff = quantile_of(dims, complex_quantile);

  SelectionDiagnostics diag;
  diag.method = Calibration::robust_regression;
  std::vector<double> xs, ys;
  for (const auto& m : points) {
    if (static_cast<double>(m.dimension) < cutoff) continue;
    xs.push_back(m.shape);
    ys.push_back(m.loglik);
    diag.regression_subset.push_back(m.dimension);
  }
  std::sort(diag.regression_subset.begin(), diag.regression_subset.end());
  if (diag.regression_subset.empty() || diag.regression_subset.front() == diag.regression_subset.back())
    throw InsufficientComplexModels("complex models span fewer than two distinct dimensions");

  const auto fit = huber_regression(xs, ys);
  if (!(fit.slope > 0.0)) throw DegeneratePath("robust regression slope is not positive");
  diag.regression_slope = fit.slope;
  diag.regression_intercept = fit.intercept;
  diag.kappa_min = fit.slope;
  diag.kappa_opt = 2.0 * fit.slope;
  try {
    diag.step_function = selection_step_function(points);
  } catch (const DegeneratePath&) {
  }
  diag.selected_index = select_at(points, diag.kappa_opt);
  diag.selected = points[diag.selected_index];
  return diag;
}

}  // namespace blocknet

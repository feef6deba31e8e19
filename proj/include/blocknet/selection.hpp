#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "blocknet/covariance.hpp"
#include "blocknet/partition.hpp"

namespace blocknet {

/// One candidate block-diagonal model on the threshold path.
struct ModelPoint {
  double lambda = 0.0;
  Partition partition = Partition::singletons(1);
  std::int64_t dimension = 0;
  /// Maximized Gaussian log-likelihood summed over the n observations.
  double loglik = 0.0;
  /// Penalty complexity in dimension units: pen = kappa * shape / n. Equals
  /// `dimension` for the linear penalty.
  double shape = 0.0;
};

/// Maximized log-likelihood of the block-diagonal Gaussian model, evaluated
/// in closed form from the MLE covariance S of the data.
///
///   -(n/2) * [ p log(2 pi) + sum_k (log det S_k + p_k) ]
///
/// Throws SingularBlock when a block has p_k >= n or its Cholesky factor
/// is numerically rank deficient.
double block_loglik(const DataMatrix& x, const Partition& b);
double block_loglik(const CovMatrix& s, Eigen::Index n, const Partition& b);

enum class PenaltyShape { linear, full };

struct PenaltyOptions {
  PenaltyShape shape = PenaltyShape::linear;
  /// Constant of the full penalty shape; ignored for the linear one.
  double c = 1.0;
};

/// (d/n) [2c^2 + log(p^4 / (d * min(d c^2 / n, 1)))]; 0 for d == 0.
double pen_full(std::int64_t d, std::int64_t n, std::int64_t p, double c);

struct ScoredPath {
  std::vector<ModelPoint> points;
  /// Path steps dropped because a block covariance was singular.
  int excluded = 0;
};

/// Scores every step of a threshold path. Steps whose partition has a
/// singular block are dropped and counted. `threads` > 1 evaluates
/// candidates concurrently; results do not depend on the thread count.
ScoredPath score_path(const CovMatrix& s, Eigen::Index n, const std::vector<ThresholdStep>& path,
                      const PenaltyOptions& penalty = {}, int threads = 1);
ScoredPath score_path(const DataMatrix& x, const std::vector<ThresholdStep>& path,
                      const PenaltyOptions& penalty = {}, int threads = 1);

/// -loglik/n + kappa * shape/n.
double criterion(const ModelPoint& m, double kappa, Eigen::Index n);

/// A point where the selected model changes as kappa increases: for kappa
/// just below `kappa` the selection has `dim_before`, just above it `dim_after`.
struct Breakpoint {
  double kappa = 0.0;
  std::int64_t dim_before = 0;
  std::int64_t dim_after = 0;
  /// Index into the point list of the model selected just above `kappa`.
  std::size_t point_after = 0;
  std::int64_t jump() const noexcept { return dim_before - dim_after; }
};

/// Exact breakpoints of kappa -> dimension(argmin criterion), ordered by
/// increasing kappa. Ties in criterion go to the smaller dimension.
/// Throws DegeneratePath when fewer than two distinct dimensions exist.
std::vector<Breakpoint> selection_step_function(const std::vector<ModelPoint>& points);

/// Index of argmin criterion(., kappa); ties toward smaller dimension, then
/// earlier position.
std::size_t select_at(const std::vector<ModelPoint>& points, double kappa);

struct RobustFit {
  double intercept = 0.0;
  double slope = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Huber M-estimate of y = a + b x by iteratively reweighted least squares,
/// scale from the normalized MAD of the residuals.
RobustFit huber_regression(const std::vector<double>& x, const std::vector<double>& y,
                           double tuning = 1.345, int max_iter = 100, double tol = 1e-10);

enum class Calibration { dimension_jump, robust_regression };

struct SelectionDiagnostics {
  Calibration method = Calibration::dimension_jump;
  std::vector<Breakpoint> step_function;
  double kappa_min = 0.0;
  double kappa_opt = 0.0;
  /// Robust-regression slope (robust_regression only).
  std::optional<double> regression_slope;
  std::optional<double> regression_intercept;
  /// Dimensions of the points used in the robust fit.
  std::vector<std::int64_t> regression_subset;
  /// Dimension-jump calibration: another breakpoint had the same maximal jump.
  bool jump_tie = false;
  std::size_t selected_index = 0;
  ModelPoint selected;
};

/// kappa_min at the largest dimension jump (ties: largest kappa),
/// kappa_opt = 2 kappa_min.
SelectionDiagnostics select_shdj(const std::vector<ModelPoint>& points);

/// kappa_min = Huber slope of loglik against penalty shape over the points
/// with dimension >= the `complex_quantile` quantile of all dimensions;
/// kappa_opt = 2 kappa_min. Throws InsufficientComplexModels when fewer than
/// four points exist overall or the complex subset spans fewer than two
/// distinct dimensions, and DegeneratePath for a non-positive slope.
SelectionDiagnostics select_shrr(const std::vector<ModelPoint>& points, double complex_quantile = 0.5);

}  // namespace blocknet

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "blocknet/covariance.hpp"
#include "blocknet/error.hpp"

namespace blocknet {

/// Graphical-lasso estimate of a precision matrix for one block of variables.
struct PrecisionEstimate {
  Eigen::MatrixXd theta;
  /// Estimated covariance; theta is its inverse at convergence.
  Eigen::MatrixXd w;
  double rho = 0.0;
  /// Upper-triangle support of theta, (i, j) with i < j.
  std::vector<std::pair<int, int>> edges;
  /// Number of edges.
  int df = 0;
  int sweeps = 0;
  bool converged = true;
  /// log det w after each outer sweep (only when tracking was requested).
  std::vector<double> dual_history;
};

class NotConverged : public Error {
 public:
  NotConverged(int max_iter, PrecisionEstimate last)
      : Error("graphical lasso did not converge within " + std::to_string(max_iter) + " sweeps"),
        max_iter_(max_iter),
        last_(std::move(last)) {}
  int max_iter() const noexcept { return max_iter_; }
  const PrecisionEstimate& last_iterate() const noexcept { return last_; }

 private:
  int max_iter_;
  PrecisionEstimate last_;
};

struct GlassoOptions {
  /// Converged when the mean absolute change of the off-diagonal of w over
  /// one sweep is at most tol * mean off-diagonal |s_ij|.
  double tol = 1e-4;
  int max_iter = 10000;
  bool track_dual = false;
};

/// Maximizes log det(theta) - tr(S theta) - rho * sum_{i != j} |theta_ij| by
/// block coordinate descent over the columns of w, each column solved as a
/// lasso by coordinate descent. The diagonal is not penalized.
///
/// rho == 0 returns S^{-1} directly and throws SingularInput when S is not
/// positive definite. `warm` seeds the iterations with a previous estimate of
/// the same size.
PrecisionEstimate graphical_lasso(const CovMatrix& s, double rho, const GlassoOptions& options = {},
                                  const PrecisionEstimate* warm = nullptr);

/// log det(theta) - tr(S theta) - rho * sum_{i != j} |theta_ij|.
double glasso_objective(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& s, double rho);

/// (n/2)(log det theta - tr(S theta)) - (log n / 2) * df. Larger is better.
double bic_net(const PrecisionEstimate& est, const CovMatrix& s, Eigen::Index n);

/// Upper-triangle pairs with |theta_ij| > 1e-8 * max |theta|.
std::vector<std::pair<int, int>> support_edges(const Eigen::MatrixXd& theta);

/// `count` log-spaced values from max off-diagonal |s_ij| down to
/// `ratio` times it, descending. A single 0 when S is diagonal.
std::vector<double> default_rho_grid(const CovMatrix& s, int count = 50, double ratio = 1e-2);

struct RhoSelection {
  double rho = 0.0;
  PrecisionEstimate estimate;
  /// (rho, BIC) for every grid point that produced an estimate, descending rho.
  std::vector<std::pair<double, double>> bic_path;
  std::vector<std::string> warnings;
};

/// Maximizes bic_net over `grid`, solving along descending rho with warm
/// starts. Ties go to the larger rho. Grid points whose solve fails are
/// skipped with a warning; throws Error if every point fails.
RhoSelection select_rho(const CovMatrix& s_block, Eigen::Index n, std::vector<double> grid,
                        const GlassoOptions& options = {});
RhoSelection select_rho(const DataMatrix& x_block, const std::vector<double>& grid,
                        const GlassoOptions& options = {});

/// Sparsest penalty keeping the block a single connected component.
///
/// The thresholded graph 1{|s_ij| > rho} (which has the same components as the
/// glasso support) stays connected exactly while rho is below the bottleneck
/// weight b of its maximum spanning tree. Returns a value just below b:
/// b - 1e-3 (b - c), where c is the next smaller distinct |s_ij| (or 0).
double cgl_rho(const CovMatrix& s_block);

}  // namespace blocknet

#include "blocknet/glasso.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "union_find.hpp"

namespace blocknet {

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double mean_abs_offdiag(const Eigen::MatrixXd& m) {
  const auto p = m.rows();
  if (p < 2) return 0.0;
  double total = m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
  return total / static_cast<double>(p * (p - 1));
}

double log_det_spd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

PrecisionEstimate diagonal_estimate(const Eigen::MatrixXd& s, double rho) {
  PrecisionEstimate est;
  est.rho = rho;
  est.w = s.diagonal().asDiagonal();
  est.theta = s.diagonal().cwiseInverse().asDiagonal();
  return est;
}

// Lasso for one column: min 1/2 b'Vb - b'u + rho |b|_1 by cyclic coordinate
// descent. `vb` holds V b and is kept in sync with `beta`.
void column_lasso(const Eigen::MatrixXd& v, const Eigen::VectorXd& u, double rho, double tol,
                  Eigen::VectorXd& beta, Eigen::VectorXd& vb) {
  const auto m = beta.size();
  for (int sweep = 0; sweep < 10000; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double vkk = v(k, k);
      const double r = u(k) - (vb(k) - vkk * beta(k));
      const double updated = soft_threshold(r, rho) / vkk;
      const double delta = updated - beta(k);
      if (delta != 0.0) {
        beta(k) = updated;
        vb.noalias() += delta * v.col(k);
        max_change = std::max(max_change, std::abs(delta) * vkk);
      }
    }
    if (max_change <= tol) break;
  }
}

// Index list {0..p-1} \ {j}.
std::vector<Eigen::Index> others(Eigen::Index p, Eigen::Index j) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(p - 1));
  for (Eigen::Index i = 0; i < p; ++i)
    if (i != j) idx.push_back(i);
  return idx;
}

}  // namespace

std::vector<std::pair<int, int>> support_edges(const Eigen::MatrixXd& theta) {
  std::vector<std::pair<int, int>> edges;
  const double cut = 1e-8 * theta.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < theta.rows(); ++i)
    for (Eigen::Index j = i + 1; j < theta.cols(); ++j)
      if (std::abs(theta(i, j)) > cut) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return edges;
}

double glasso_objective(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& s, double rho) {
  const double l1_off = theta.cwiseAbs().sum() - theta.diagonal().cwiseAbs().sum();
  return log_det_spd(theta) - (s.cwiseProduct(theta)).sum() - rho * l1_off;
}

PrecisionEstimate graphical_lasso(const CovMatrix& cov, double rho, const GlassoOptions& options,
                                  const PrecisionEstimate* warm) {
  if (!(rho >= 0.0)) throw InvalidArgument("rho must be non-negative");
  if (!(options.tol > 0.0) || options.max_iter < 1) throw InvalidArgument("glasso needs tol > 0 and max_iter >= 1");
  const Eigen::MatrixXd& s = cov.values();
  const Eigen::Index p = s.rows();
  if ((s.diagonal().array() <= 0.0).any()) throw InvalidArgument("covariance diagonal must be positive");

  auto finish = [&](PrecisionEstimate est) {
    est.theta = 0.5 * (est.theta + est.theta.transpose()).eval();
    est.edges = support_edges(est.theta);
    est.df = static_cast<int>(est.edges.size());
    return est;
  };

  if (rho == 0.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    const double floor = 1e-12 * s.diagonal().maxCoeff();
    if (llt.info() != Eigen::Success || (llt.matrixLLT().diagonal().array().square() <= floor).any())
      throw SingularInput("rho = 0 requires a nonsingular covariance matrix");
    PrecisionEstimate est;
    est.rho = 0.0;
    est.w = s;
    est.theta = llt.solve(Eigen::MatrixXd::Identity(p, p));
    return finish(std::move(est));
  }
  if (p == 1 || rho >= cov.max_abs_offdiag()) return finish(diagonal_estimate(s, rho));

  // beta.col(j) holds the lasso coefficients of column j in full-length form
  // (entry j unused); theta_{-j,j} = -beta_j * theta_jj.
  // The column updates keep W positive definite only when started from a
  // positive definite W with |w_ij - s_ij| <= rho. Both starts below shrink
  // toward S just enough to satisfy that.
  Eigen::MatrixXd w;
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(p, p);
  if (warm && warm->w.rows() == p && warm->theta.rows() == p && warm->rho > 0.0) {
    const double t = std::min(1.0, rho / warm->rho);
    w = (1.0 - t) * s + t * warm->w;
    w.diagonal() = s.diagonal();
    for (Eigen::Index j = 0; j < p; ++j) {
      beta.col(j) = -warm->theta.col(j) / warm->theta(j, j);
      beta(j, j) = 0.0;
    }
  } else {
    const double t = rho / cov.max_abs_offdiag();
    w = (1.0 - t) * s;
    w.diagonal() = s.diagonal();
  }

  const double scale = mean_abs_offdiag(s);
  const double outer_tol = options.tol * scale;
  const double inner_tol = 1e-4 * outer_tol;

  PrecisionEstimate est;
  est.rho = rho;
  est.converged = false;
  for (int sweep = 1; sweep <= options.max_iter; ++sweep) {
    double total_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto idx = others(p, j);
      const Eigen::MatrixXd v = w(idx, idx);
      const Eigen::VectorXd u = s(idx, j);
      Eigen::VectorXd b = beta(idx, j);
      Eigen::VectorXd vb = v * b;
      column_lasso(v, u, rho, inner_tol, b, vb);
      beta(idx, j) = b;
      for (std::size_t a = 0; a < idx.size(); ++a) {
        const Eigen::Index i = idx[a];
        total_change += std::abs(vb(static_cast<Eigen::Index>(a)) - w(i, j));
        w(i, j) = vb(static_cast<Eigen::Index>(a));
        w(j, i) = w(i, j);
      }
    }
    if (!w.allFinite()) throw Error("graphical lasso diverged at rho = " + std::to_string(rho));
    est.sweeps = sweep;
    if (options.track_dual) est.dual_history.push_back(log_det_spd(w));
    if (total_change / static_cast<double>(p * (p - 1)) <= outer_tol) {
      est.converged = true;
      break;
    }
  }

  est.theta.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto idx = others(p, j);
    const Eigen::VectorXd b = beta(idx, j);
    const Eigen::VectorXd w12 = w(idx, j);
    const double theta_jj = 1.0 / (w(j, j) - w12.dot(b));
    est.theta(j, j) = theta_jj;
    est.theta(idx, j) = -b * theta_jj;
  }
  est.w = std::move(w);
  est = finish(std::move(est));
  if (!est.converged) throw NotConverged(options.max_iter, std::move(est));
  return est;
}

double bic_net(const PrecisionEstimate& est, const CovMatrix& s, Eigen::Index n) {
  if (est.theta.rows() != s.p()) throw InvalidArgument("estimate and covariance sizes differ");
  const double nn = static_cast<double>(n);
  const double fit = log_det_spd(est.theta) - (s.values().cwiseProduct(est.theta)).sum();
  return 0.5 * nn * fit - 0.5 * std::log(nn) * static_cast<double>(est.df);
}

std::vector<double> default_rho_grid(const CovMatrix& s, int count, double ratio) {
  if (count < 1 || !(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("rho grid needs count >= 1 and ratio in (0, 1]");
  const double top = s.max_abs_offdiag();
  if (top == 0.0) return {0.0};
  if (count == 1) return {top};
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  const double step = std::log(ratio) / (count - 1);
  for (int i = 0; i < count; ++i) grid.push_back(top * std::exp(step * i));
  return grid;
}

RhoSelection select_rho(const CovMatrix& s_block, Eigen::Index n, std::vector<double> grid,
                        const GlassoOptions& options) {
  if (grid.empty()) throw InvalidArgument("rho grid is empty");
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  RhoSelection out;
  bool have = false;
  double best_bic = 0.0;
  const PrecisionEstimate* warm = nullptr;
  PrecisionEstimate previous;
  for (double rho : grid) {
    PrecisionEstimate est;
    try {
      est = graphical_lasso(s_block, rho, options, warm);
    } catch (const NotConverged& e) {
      out.warnings.push_back("rho=" + std::to_string(rho) + ": " + e.what());
      continue;
    } catch (const Error& e) {
      out.warnings.push_back("rho=" + std::to_string(rho) + ": " + e.what());
      continue;
    }
    const double bic = bic_net(est, s_block, n);
    out.bic_path.emplace_back(rho, bic);
    if (!have || bic > best_bic) {
      have = true;
      best_bic = bic;
      out.rho = rho;
      out.estimate = est;
    }
    previous = std::move(est);
    warm = &previous;
  }
  if (!have) throw Error("graphical lasso failed at every grid point");
  return out;
}

RhoSelection select_rho(const DataMatrix& x_block, const std::vector<double>& grid, const GlassoOptions& options) {
  return select_rho(sample_covariance(x_block), x_block.n(), grid, options);
}

double cgl_rho(const CovMatrix& s_block) {
  const int p = static_cast<int>(s_block.p());
  if (p < 2) throw InvalidArgument("cgl_rho needs a block of at least two variables");
  struct Edge {
    double weight;
    int i, j;
  };
  std::vector<Edge> edges;
  std::set<double> levels{0.0};
  for (int j = 0; j < p; ++j)
    for (int i = j + 1; i < p; ++i) {
      const double w = std::abs(s_block(i, j));
      edges.push_back({w, i, j});
      levels.insert(w);
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.weight > b.weight; });
  // Kruskal on descending weights: the edge that joins the last two
  // components is the bottleneck of the maximum spanning tree.
  detail::DisjointSets sets(p);
  double bottleneck = 0.0;
  for (const auto& e : edges) {
    if (sets.unite(e.i, e.j) && sets.count() == 1) {
      bottleneck = e.weight;
      break;
    }
  }
  if (bottleneck == 0.0) return 0.0;
  const double below = *std::prev(levels.lower_bound(bottleneck));
  return bottleneck - 1e-3 * (bottleneck - below);
}

}  // namespace blocknet

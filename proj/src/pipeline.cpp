#include "blocknet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <set>

#include "blocknet/parallel.hpp"
#include "format.hpp"

namespace blocknet {

StructureResult select_structure(const CovMatrix& s, Eigen::Index n, const StructureOptions& options) {
  StructureResult result;
  result.path = threshold_path(s);
  result.scored = score_path(s, n, result.path, options.penalty, options.threads);
  const auto& points = result.scored.points;

  std::set<std::int64_t> dims;
  for (const auto& m : points) dims.insert(m.dimension);
  if (dims.size() < 2) {
    result.degenerate = true;
    result.selected = points.front();
    return result;
  }
  result.diagnostics = options.calibration == Calibration::dimension_jump
                           ? select_shdj(points)
                           : select_shrr(points, options.shrr_quantile);
  result.selected = result.diagnostics->selected;
  return result;
}

std::vector<std::pair<int, int>> Network::edges() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& block : blocks)
    for (const auto& [a, b] : block.estimate.edges) {
      const int i = block.variables[static_cast<std::size_t>(a)];
      const int j = block.variables[static_cast<std::size_t>(b)];
      out.emplace_back(std::min(i, j), std::max(i, j));
    }
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::MatrixXd Network::precision() const {
  const int p = partition.num_variables();
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
  for (const auto& block : blocks)
    for (std::size_t a = 0; a < block.variables.size(); ++a)
      for (std::size_t b = 0; b < block.variables.size(); ++b)
        theta(block.variables[a], block.variables[b]) =
            block.estimate.theta(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  return theta;
}

namespace {

BlockNetwork solve_block(const CovMatrix& s, Eigen::Index n, const std::vector<int>& variables,
                         const InferenceOptions& options) {
  BlockNetwork block;
  block.variables = variables;
  const CovMatrix sub = s.submatrix(variables);
  if (variables.size() == 1) {
    block.estimate = graphical_lasso(sub, 0.0);
    return block;
  }
  auto fallback = [&](const std::string& why) {
    block.converged = false;
    block.warnings.push_back(why);
    block.estimate = graphical_lasso(sub, std::max(sub.max_abs_offdiag(), 1e-300));
    block.rho = block.estimate.rho;
  };
  if (options.rule == RhoRule::connected) {
    block.rho = cgl_rho(sub);
    try {
      block.estimate = graphical_lasso(sub, block.rho, options.glasso);
    } catch (const NotConverged& e) {
      block.converged = false;
      block.warnings.push_back(e.what());
      block.estimate = e.last_iterate();
    } catch (const SingularInput& e) {
      fallback(e.what());
    }
    return block;
  }
  try {
    auto selection = select_rho(sub, n, default_rho_grid(sub, options.grid_size, options.grid_ratio), options.glasso);
    block.rho = selection.rho;
    block.estimate = std::move(selection.estimate);
    block.warnings = std::move(selection.warnings);
  } catch (const Error& e) {
    fallback(e.what());
  }
  return block;
}

}  // namespace

Network infer_network(const CovMatrix& s, Eigen::Index n, const Partition& partition, const InferenceOptions& options) {
  if (partition.num_variables() != s.p()) throw InvalidArgument("partition and covariance sizes differ");
  Network net;
  net.partition = partition;
  net.blocks.resize(partition.blocks().size());
  parallel_for(net.blocks.size(), options.threads,
               [&](std::size_t k) { net.blocks[k] = solve_block(s, n, partition.blocks()[k], options); });
  return net;
}

const char* to_string(Calibration c) {
  return c == Calibration::dimension_jump ? "dimension_jump" : "robust_regression";
}

namespace {

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json diagnostics_json(const StructureResult& result) {
  nlohmann::json doc;
  doc["candidates"] = result.path.size();
  doc["excluded_singular"] = result.scored.excluded;
  doc["degenerate"] = result.degenerate;
  doc["selected"] = {{"lambda", result.selected.lambda},
                     {"dimension", result.selected.dimension},
                     {"loglik", number_or_null(result.selected.loglik)},
                     {"num_blocks", result.selected.partition.num_blocks()},
                     {"partition", to_json(result.selected.partition)}};
  if (!result.diagnostics) return doc;
  const auto& d = *result.diagnostics;
  doc["method"] = to_string(d.method);
  doc["kappa_min"] = d.kappa_min;
  doc["kappa_opt"] = d.kappa_opt;
  doc["jump_tie"] = d.jump_tie;
  auto steps = nlohmann::json::array();
  for (const auto& bp : d.step_function)
    steps.push_back({{"kappa", bp.kappa}, {"dimension_before", bp.dim_before}, {"dimension_after", bp.dim_after}});
  doc["step_function"] = std::move(steps);
  if (d.regression_slope) {
    doc["regression"] = {{"slope", *d.regression_slope},
                         {"intercept", d.regression_intercept.value_or(0.0)},
                         {"subset_dimensions", d.regression_subset}};
  }
  return doc;
}

nlohmann::json network_json(const Network& network, const std::vector<std::string>& names) {
  auto blocks = nlohmann::json::array();
  auto merged = nlohmann::json::array();
  for (std::size_t k = 0; k < network.blocks.size(); ++k) {
    const auto& block = network.blocks[k];
    auto edges = nlohmann::json::array();
    for (const auto& [a, b] : block.estimate.edges) {
      const int i = block.variables[static_cast<std::size_t>(a)];
      const int j = block.variables[static_cast<std::size_t>(b)];
      edges.push_back({{"i", std::min(i, j)},
                       {"j", std::max(i, j)},
                       {"theta", block.estimate.theta(a, b)}});
      merged.push_back(edges.back());
    }
    std::vector<std::string> labels;
    for (int v : block.variables)
      labels.push_back(static_cast<std::size_t>(v) < names.size() ? names[static_cast<std::size_t>(v)] : std::to_string(v));
    blocks.push_back({{"block", k},
                      {"variables", block.variables},
                      {"names", labels},
                      {"rho", block.rho},
                      {"converged", block.converged},
                      {"warnings", block.warnings},
                      {"edges", std::move(edges)}});
  }
  return {{"num_variables", network.partition.num_variables()},
          {"num_edges", network.edges().size()},
          {"partition", to_json(network.partition)},
          {"blocks", std::move(blocks)},
          {"edges", std::move(merged)}};
}

void write_kappa_dimension_csv(std::ostream& out, const StructureResult& result) {
  out << "kappa,dimension\n";
  if (!result.diagnostics || result.diagnostics->step_function.empty()) {
    out << "0," << result.selected.dimension << '\n';
    return;
  }
  const auto& steps = result.diagnostics->step_function;
  out << "0," << steps.front().dim_before << '\n';
  for (const auto& bp : steps) out << detail::format_double(bp.kappa) << ',' << bp.dim_after << '\n';
}

void write_dimension_loglik_csv(std::ostream& out, const StructureResult& result) {
  out << "dimension,loglik,lambda,num_blocks\n";
  for (const auto& m : result.scored.points)
    out << m.dimension << ',' << detail::format_double(m.loglik) << ',' << detail::format_double(m.lambda) << ','
        << m.partition.num_blocks() << '\n';
}

void write_block_edges_csv(std::ostream& out, const BlockNetwork& block) {
  out << "i,j,theta_ij\n";
  for (const auto& [a, b] : block.estimate.edges) {
    const int i = block.variables[static_cast<std::size_t>(a)];
    const int j = block.variables[static_cast<std::size_t>(b)];
    out << std::min(i, j) << ',' << std::max(i, j) << ',' << detail::format_double(block.estimate.theta(a, b)) << '\n';
  }
}

}  // namespace blocknet

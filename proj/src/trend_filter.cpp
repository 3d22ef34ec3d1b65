#include "gtn/trend_filter.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "gtn/kernels.hpp"

namespace gtn {

void FilterConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be a finite nonnegative number");
  }
  if (num_layers < 0) throw ConfigError("num_layers must be >= 0");
  if (!(gamma > 0.0 && gamma < 2.0)) throw ConfigError("gamma must lie in (0, 2)");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
}

namespace {

void check_embedding_rows(const Matrix& e, const IncidenceOperator& op, const char* what) {
  if (e.rows() != op.cols()) {
    throw ShapeError(std::string(what) + " has " + std::to_string(e.rows()) +
                     " rows, graph has " + std::to_string(op.cols()) + " nodes");
  }
}

}  // namespace

FilterTrace gtcf_filter(const Matrix& e_in, const IncidenceOperator& op, const FilterConfig& cfg) {
  cfg.validate();
  check_embedding_rows(e_in, op, "E_in");

  FilterTrace trace;
  trace.lambda = cfg.lambda;
  trace.gamma = cfg.gamma;
  trace.beta = cfg.beta;
  trace.num_layers = cfg.num_layers;
  trace.has_masks = cfg.record_masks;
  trace.output = e_in;
  trace.dual = Matrix::Zero(op.rows(), e_in.cols());
  if (cfg.record_trace) {
    trace.objective.reserve(cfg.num_layers + 1);
    trace.objective.push_back(gtf_objective(e_in, e_in, op, cfg.lambda));
  }
  if (cfg.num_layers == 0) return trace;

  const bool unit_gamma = cfg.gamma == 1.0;
  Matrix& e = trace.output;
  Matrix& y = trace.dual;
  Matrix dual_back = Matrix::Zero(e_in.rows(), e_in.cols());  // Delta~^T Y
  Matrix e_bar;
  Matrix y_bar;

  for (int k = 1; k <= cfg.num_layers; ++k) {
    // With gamma = 1 the primal prediction E_in - Delta~^T Y^k equals E^k.
    if (!unit_gamma) e_bar = e - cfg.gamma * (e - e_in) - cfg.gamma * dual_back;
    const Matrix& prediction = unit_gamma ? e : e_bar;
    if (cfg.record_iterates) trace.primal_prediction.push_back(prediction);

    std::uint8_t* mask = nullptr;
    if (cfg.record_masks) {
      trace.masks.emplace_back(static_cast<std::size_t>(y.size()));
      mask = trace.masks.back().data();
    }
    parallel::dual_step(op, prediction, cfg.beta, cfg.lambda, y,
                        cfg.record_iterates ? &y_bar : nullptr, mask);
    if (cfg.record_iterates) trace.dual_prediction.push_back(y_bar);

    apply_incidence(op, y, Direction::kTranspose, dual_back);
    if (unit_gamma) {
      e = e_in - dual_back;
    } else {
      e = e - cfg.gamma * (e - e_in) - cfg.gamma * dual_back;
    }
    if (!e.allFinite()) {
      throw NumericError("non-finite value in graph trend filter at iteration " +
                         std::to_string(k));
    }
    if (cfg.record_trace) trace.objective.push_back(gtf_objective(e, e_in, op, cfg.lambda));
  }
  return trace;
}

double gtf_objective(const Matrix& e, const Matrix& e_in, const IncidenceOperator& op,
                     double lambda) {
  check_embedding_rows(e, op, "E");
  if (e.rows() != e_in.rows() || e.cols() != e_in.cols()) {
    throw ShapeError("E and E_in differ in shape");
  }
  const double fidelity = 0.5 * (e - e_in).squaredNorm();
  if (lambda == 0.0) return fidelity;
  const Matrix diffs = apply_incidence(op, e, Direction::kForward);
  return fidelity + lambda * diffs.cwiseAbs().sum();
}

double gtf_dual_objective(const Matrix& y, const Matrix& e_in, const IncidenceOperator& op) {
  check_embedding_rows(e_in, op, "E_in");
  if (y.rows() != op.rows() || y.cols() != e_in.cols()) throw ShapeError("dual has wrong shape");
  const Matrix back = apply_incidence(op, y, Direction::kTranspose);
  const Matrix forward = apply_incidence(op, e_in, Direction::kForward);
  return (forward.array() * y.array()).sum() - 0.5 * back.squaredNorm();
}

std::vector<std::optional<double>> edge_weights_from_differences(const Matrix& diffs) {
  std::vector<std::optional<double>> weights(static_cast<std::size_t>(diffs.rows()));
  for (Index l = 0; l < diffs.rows(); ++l) {
    const double sq = diffs.row(l).squaredNorm();
    if (sq < 1e-12) continue;
    weights[l] = diffs.row(l).cwiseAbs().sum() / sq;
  }
  return weights;
}

std::vector<std::optional<double>> edge_weights(const Matrix& e, const IncidenceOperator& op) {
  check_embedding_rows(e, op, "E");
  return edge_weights_from_differences(apply_incidence(op, e, Direction::kForward));
}

namespace {

Matrix propagate_combined(const PropagationOperator& op, const Matrix& x, int num_layers,
                          LayerCombine combine) {
  if (num_layers < 0) throw ConfigError("num_layers must be >= 0");
  if (x.rows() != op.size()) {
    throw ShapeError("propagation input has " + std::to_string(x.rows()) + " rows, graph has " +
                     std::to_string(op.size()) + " nodes");
  }
  Matrix current = x;
  Matrix next;
  Matrix sum = x;
  for (int k = 0; k < num_layers; ++k) {
    apply_propagation(op, current, next);
    current.swap(next);
    if (combine == LayerCombine::kMean) sum += current;
  }
  if (combine == LayerCombine::kLast) return current;
  return sum / static_cast<double>(num_layers + 1);
}

}  // namespace

Matrix laplacian_propagate(const Matrix& e_in, const PropagationOperator& op, int num_layers,
                           LayerCombine combine) {
  return propagate_combined(op, e_in, num_layers, combine);
}

Matrix backward_laplacian(const PropagationOperator& op, const Matrix& grad_output,
                          int num_layers, LayerCombine combine) {
  // Every term is a power of the symmetric A~, so the adjoint is the same map.
  return propagate_combined(op, grad_output, num_layers, combine);
}

void write_trace_csv(const FilterTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "iteration,objective\n" << std::setprecision(17);
  for (std::size_t k = 0; k < trace.objective.size(); ++k) {
    out << k << ',' << trace.objective[k] << '\n';
  }
}

std::string to_string(LayerCombine combine) {
  return combine == LayerCombine::kLast ? "last" : "mean";
}

LayerCombine parse_layer_combine(const std::string& name) {
  if (name == "last") return LayerCombine::kLast;
  if (name == "mean") return LayerCombine::kMean;
  throw ConfigError("unknown layer combination '" + name + "' (expected last|mean)");
}

}  // namespace gtn

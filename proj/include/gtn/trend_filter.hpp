#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gtn/incidence.hpp"
#include "gtn/propagation.hpp"
#include "gtn/types.hpp"

namespace gtn {

struct FilterConfig {
  double lambda = 2.0;
  int num_layers = 3;
  // Primal and dual stepsizes. gamma = 1, beta = 1/2 is always convergent
  // because ||Delta~ Delta~^T||_2 <= 2.
  double gamma = 1.0;
  double beta = 0.5;
  // Record the objective value after every iteration.
  bool record_trace = false;
  // Keep the primal prediction and pre-threshold dual of every iteration.
  bool record_iterates = false;
  // Keep the clip-active masks needed by backward_gtcf.
  bool record_masks = false;

  // Throws ConfigError when lambda < 0, num_layers < 0, gamma outside (0, 2)
  // or beta <= 0.
  void validate() const;
  // gamma < 2 and beta <= 1 / (2 gamma), sufficient for convergence.
  bool satisfies_step_bound() const { return gamma > 0 && gamma < 2 && beta * gamma * 2.0 <= 1.0; }
};

// Per-edge, per-dimension flags: 1 where |Ybar| <= lambda (clip passes the
// value through, derivative 1), 0 where the clip saturates.
using ClipMask = std::vector<std::uint8_t>;

struct FilterTrace {
  Matrix output;  // E^K
  Matrix dual;    // Y^K
  double lambda = 0.0;
  double gamma = 1.0;
  double beta = 0.5;
  int num_layers = 0;
  // objective[k] is the objective at E^k, k = 0..K (present when record_trace).
  std::vector<double> objective;
  // One entry per iteration k = 1..K (present when record_iterates).
  std::vector<Matrix> primal_prediction;
  std::vector<Matrix> dual_prediction;
  // One mask per iteration (present when record_masks).
  std::vector<ClipMask> masks;
  bool has_masks = false;
};

// Graph trend filtering by the primal-dual iteration
//   Ebar = E - gamma (E - E_in) - gamma Delta~^T Y
//   Ybar = Y + beta Delta~ Ebar
//   Y    = clip(Ybar, lambda)
//   E    = E - gamma (E - E_in) - gamma Delta~^T Y
// starting from E = E_in, Y = 0. With the default stepsizes this reduces to
// Ebar = E_in - Delta~^T Y, Ybar = Y + Delta~ Ebar / 2, E = E_in - Delta~^T Y.
//
// Throws ShapeError on dimension mismatch and NumericError (naming the
// iteration) if a non-finite value appears.
FilterTrace gtcf_filter(const Matrix& e_in, const IncidenceOperator& op, const FilterConfig& cfg);

// 1/2 ||E - E_in||_F^2 + lambda ||Delta~ E||_1.
double gtf_objective(const Matrix& e, const Matrix& e_in, const IncidenceOperator& op,
                     double lambda);

// Dual objective <Delta~ E_in, Y> - 1/2 ||Delta~^T Y||_F^2 for |Y| <= lambda.
// Any feasible Y gives a lower bound on the minimum of gtf_objective.
double gtf_dual_objective(const Matrix& y, const Matrix& e_in, const IncidenceOperator& op);

// Reweighting view of the l1 penalty: W_l = ||delta_l||_1 / ||delta_l||_2^2
// where delta_l is row l of Delta~ E. Degenerate rows (squared norm below
// 1e-12) are reported as std::nullopt.
std::vector<std::optional<double>> edge_weights(const Matrix& e, const IncidenceOperator& op);
std::vector<std::optional<double>> edge_weights_from_differences(const Matrix& diffs);

enum class LayerCombine { kLast, kMean };

// Linear propagation E^{k+1} = A~ E^k. kLast returns A~^K E_in, kMean averages
// E^0..E^K.
Matrix laplacian_propagate(const Matrix& e_in, const PropagationOperator& op, int num_layers,
                           LayerCombine combine);

// Reverse-mode product of laplacian_propagate (A~ is symmetric).
Matrix backward_laplacian(const PropagationOperator& op, const Matrix& grad_output,
                          int num_layers, LayerCombine combine);

// Writes "iteration,objective" rows for a trace recorded with record_trace.
void write_trace_csv(const FilterTrace& trace, const std::string& path);

std::string to_string(LayerCombine combine);
LayerCombine parse_layer_combine(const std::string& name);

}  // namespace gtn

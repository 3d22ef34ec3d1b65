#pragma once

#include <vector>

#include "gtn/graph.hpp"
#include "gtn/types.hpp"

namespace gtn {

enum class Direction { kForward, kTranspose };

// Normalized oriented incidence matrix of the user-item graph.
//
// Row l corresponds to edge l = (u, i) of the sorted edge list and holds
//   -1 / sqrt(d_u + 1)   at global column u
//   +1 / sqrt(d_i + 1)   at global column n + i
// Stored as a two-entries-per-row CSR plus its transpose (node -> incident
// edges, ascending edge id) so both products are gather loops.
class IncidenceOperator {
 public:
  IncidenceOperator() = default;

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index num_users() const { return num_users_; }

  // Row l occupies entries [2l, 2l + 2): user entry first, then item entry.
  const std::vector<Index>& col_index() const { return col_index_; }
  const std::vector<double>& values() const { return values_; }

  // Transposed layout: node v owns [node_ptr[v], node_ptr[v+1]).
  const std::vector<Index>& node_ptr() const { return node_ptr_; }
  const std::vector<Index>& node_edge() const { return node_edge_; }
  const std::vector<double>& node_value() const { return node_value_; }

  // Dense copy, for tests and small diagnostics only.
  Matrix to_dense() const;

  friend IncidenceOperator build_incidence(const InteractionGraph& graph);

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Index num_users_ = 0;
  std::vector<Index> col_index_;
  std::vector<double> values_;
  std::vector<Index> node_ptr_;
  std::vector<Index> node_edge_;
  std::vector<double> node_value_;
};

IncidenceOperator build_incidence(const InteractionGraph& graph);

// Forward: |E| x d result of (Delta~ M), M has n + m rows.
// Transpose: (n + m) x d result of (Delta~^T M), M has |E| rows.
// Throws ShapeError on a row-count mismatch.
Matrix apply_incidence(const IncidenceOperator& op, const Matrix& m, Direction direction);
void apply_incidence(const IncidenceOperator& op, const Matrix& m, Direction direction,
                     Matrix& out);

// Power-iteration estimate of the largest eigenvalue of Delta~ Delta~^T.
// Runs on Delta~^T Delta~ (same nonzero spectrum, smaller side is irrelevant
// for a sparse operator). Deterministic given the seed.
double estimate_spectral_norm(const IncidenceOperator& op, int iterations = 200,
                              std::uint64_t seed = 1);

}  // namespace gtn

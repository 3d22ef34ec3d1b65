#pragma once

#include <vector>

#include "gtn/graph.hpp"
#include "gtn/types.hpp"

namespace gtn {

// Symmetric normalized adjacency with self-loops,
//   A~ = D^-1/2 (A + I) D^-1/2,
// stored as CSR over the n + m global nodes. Column indices within a row are
// ascending and every row contains its diagonal.
class PropagationOperator {
 public:
  PropagationOperator() = default;

  Index size() const { return size_; }
  const std::vector<Index>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_index() const { return col_index_; }
  const std::vector<double>& values() const { return values_; }

  // Entry lookup by binary search, 0 when absent.
  double coeff(Index row, Index col) const;

  Matrix to_dense() const;

  friend PropagationOperator build_propagation(const InteractionGraph& graph);

 private:
  Index size_ = 0;
  std::vector<Index> row_ptr_;
  std::vector<Index> col_index_;
  std::vector<double> values_;
};

PropagationOperator build_propagation(const InteractionGraph& graph);

// A~ M. Throws ShapeError when M does not have size() rows.
Matrix apply_propagation(const PropagationOperator& op, const Matrix& m);
void apply_propagation(const PropagationOperator& op, const Matrix& m, Matrix& out);

}  // namespace gtn

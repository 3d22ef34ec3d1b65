#include "gtn/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtn/kernels.hpp"

namespace gtn {

PropagationOperator build_propagation(const InteractionGraph& graph) {
  PropagationOperator op;
  const Index n = graph.num_users();
  const Index size = graph.num_nodes();
  op.size_ = size;

  std::vector<double> scale(size);
  for (Index v = 0; v < size; ++v) {
    scale[v] = 1.0 / std::sqrt(static_cast<double>(graph.node_degree(v) + 1));
  }

  // Neighbor lists in ascending global id: a user's items follow its
  // diagonal; an item's users precede its diagonal.
  std::vector<std::vector<Index>> item_users(graph.num_items());
  for (const auto& e : graph.edges()) item_users[e.item].push_back(e.user);

  op.row_ptr_.assign(size + 1, 0);
  for (Index v = 0; v < size; ++v) op.row_ptr_[v + 1] = op.row_ptr_[v] + graph.node_degree(v) + 1;
  op.col_index_.reserve(op.row_ptr_.back());
  op.values_.reserve(op.row_ptr_.back());

  for (Index u = 0; u < n; ++u) {
    op.col_index_.push_back(u);
    op.values_.push_back(scale[u] * scale[u]);
    for (const auto& e : graph.user_edges(u)) {
      const Index v = n + e.item;
      op.col_index_.push_back(v);
      op.values_.push_back(scale[u] * scale[v]);
    }
  }
  for (Index i = 0; i < graph.num_items(); ++i) {
    const Index v = n + i;
    for (Index u : item_users[i]) {
      op.col_index_.push_back(u);
      op.values_.push_back(scale[u] * scale[v]);
    }
    op.col_index_.push_back(v);
    op.values_.push_back(scale[v] * scale[v]);
  }
  return op;
}

double PropagationOperator::coeff(Index row, Index col) const {
  const auto begin = col_index_.begin() + row_ptr_[row];
  const auto end = col_index_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(begin, end, col);
  if (it == end || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - col_index_.begin())];
}

Matrix PropagationOperator::to_dense() const {
  Matrix dense = Matrix::Zero(size_, size_);
  for (Index r = 0; r < size_; ++r) {
    for (Index p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) dense(r, col_index_[p]) = values_[p];
  }
  return dense;
}

void apply_propagation(const PropagationOperator& op, const Matrix& m, Matrix& out) {
  if (m.rows() != op.size()) {
    throw ShapeError("propagation expects " + std::to_string(op.size()) + " rows, got " +
                     std::to_string(m.rows()));
  }
  parallel::propagate(op, m, out);
}

Matrix apply_propagation(const PropagationOperator& op, const Matrix& m) {
  Matrix out;
  apply_propagation(op, m, out);
  return out;
}

}  // namespace gtn

#include "gtn/incidence.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gtn/kernels.hpp"

namespace gtn {

IncidenceOperator build_incidence(const InteractionGraph& graph) {
  IncidenceOperator op;
  const Index n = graph.num_users();
  const Index num_edges = graph.num_edges();
  op.rows_ = num_edges;
  op.cols_ = graph.num_nodes();
  op.num_users_ = n;
  op.col_index_.resize(2 * num_edges);
  op.values_.resize(2 * num_edges);

  std::vector<double> scale(op.cols_);
  for (Index v = 0; v < op.cols_; ++v) {
    scale[v] = 1.0 / std::sqrt(static_cast<double>(graph.node_degree(v) + 1));
  }

  const auto& edges = graph.edges();
  for (Index l = 0; l < num_edges; ++l) {
    const Index u = edges[l].user;
    const Index v = n + edges[l].item;
    op.col_index_[2 * l] = u;
    op.values_[2 * l] = -scale[u];
    op.col_index_[2 * l + 1] = v;
    op.values_[2 * l + 1] = scale[v];
  }

  // Transposed layout. Filling edges in ascending order keeps each node's
  // list sorted by edge id.
  op.node_ptr_.assign(op.cols_ + 1, 0);
  for (Index v = 0; v < op.cols_; ++v) {
    op.node_ptr_[v + 1] = op.node_ptr_[v] + graph.node_degree(v);
  }
  op.node_edge_.resize(2 * num_edges);
  op.node_value_.resize(2 * num_edges);
  std::vector<Index> cursor(op.node_ptr_.begin(), op.node_ptr_.end() - 1);
  for (Index l = 0; l < num_edges; ++l) {
    for (int s = 0; s < 2; ++s) {
      const Index v = op.col_index_[2 * l + s];
      const Index pos = cursor[v]++;
      op.node_edge_[pos] = l;
      op.node_value_[pos] = op.values_[2 * l + s];
    }
  }
  return op;
}

Matrix IncidenceOperator::to_dense() const {
  Matrix dense = Matrix::Zero(rows_, cols_);
  for (Index l = 0; l < rows_; ++l) {
    dense(l, col_index_[2 * l]) = values_[2 * l];
    dense(l, col_index_[2 * l + 1]) = values_[2 * l + 1];
  }
  return dense;
}

void apply_incidence(const IncidenceOperator& op, const Matrix& m, Direction direction,
                     Matrix& out) {
  if (direction == Direction::kForward) {
    if (m.rows() != op.cols()) {
      throw ShapeError("incidence forward expects " + std::to_string(op.cols()) +
                       " rows, got " + std::to_string(m.rows()));
    }
    parallel::incidence_forward(op, m, out);
  } else {
    if (m.rows() != op.rows()) {
      throw ShapeError("incidence transpose expects " + std::to_string(op.rows()) +
                       " rows, got " + std::to_string(m.rows()));
    }
    parallel::incidence_transpose(op, m, out);
  }
}

Matrix apply_incidence(const IncidenceOperator& op, const Matrix& m, Direction direction) {
  Matrix out;
  apply_incidence(op, m, direction, out);
  return out;
}

double estimate_spectral_norm(const IncidenceOperator& op, int iterations, std::uint64_t seed) {
  if (op.rows() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(op.cols(), 1);
  for (Index i = 0; i < x.rows(); ++i) x(i, 0) = normal(rng);
  x /= x.norm();

  Matrix y;
  Matrix z;
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    parallel::incidence_forward(op, x, y);
    parallel::incidence_transpose(op, y, z);
    // Rayleigh quotient x^T (Delta^T Delta) x with ||x|| = 1.
    estimate = y.squaredNorm();
    const double norm = z.norm();
    if (norm == 0.0) return 0.0;
    x = z / norm;
  }
  return estimate;
}

}  // namespace gtn

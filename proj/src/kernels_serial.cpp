#include "gtn/kernels.hpp"

#include <cmath>

namespace gtn::serial {

void incidence_forward(const IncidenceOperator& op, const Matrix& in, Matrix& out) {
  out.setZero(op.rows(), in.cols());
  const auto& cols = op.col_index();
  const auto& vals = op.values();
  for (Index l = 0; l < op.rows(); ++l) {
    for (int s = 0; s < 2; ++s) {
      out.row(l) += vals[2 * l + s] * in.row(cols[2 * l + s]);
    }
  }
}

void incidence_transpose(const IncidenceOperator& op, const Matrix& in, Matrix& out) {
  out.setZero(op.cols(), in.cols());
  const auto& cols = op.col_index();
  const auto& vals = op.values();
  for (Index l = 0; l < op.rows(); ++l) {
    for (int s = 0; s < 2; ++s) {
      out.row(cols[2 * l + s]) += vals[2 * l + s] * in.row(l);
    }
  }
}

void dual_step(const IncidenceOperator& op, const Matrix& e_bar, double beta, double lambda,
               Matrix& y, Matrix* y_bar, std::uint8_t* mask) {
  Matrix diffs;
  incidence_forward(op, e_bar, diffs);
  const Matrix next = y + beta * diffs;
  for (Index i = 0; i < next.size(); ++i) {
    const double v = next.data()[i];
    if (mask != nullptr) mask[i] = std::abs(v) <= lambda ? 1 : 0;
    y.data()[i] = v > lambda ? lambda : (v < -lambda ? -lambda : v);
  }
  if (y_bar != nullptr) *y_bar = next;
}

void propagate(const PropagationOperator& op, const Matrix& in, Matrix& out) {
  out.setZero(op.size(), in.cols());
  const auto& ptr = op.row_ptr();
  const auto& cols = op.col_index();
  const auto& vals = op.values();
  for (Index r = 0; r < op.size(); ++r) {
    for (Index p = ptr[r]; p < ptr[r + 1]; ++p) out.row(r) += vals[p] * in.row(cols[p]);
  }
}

void inner_products(const Matrix& embeddings, Index num_users, std::span<const Index> users,
                    Matrix& scores) {
  const Index m = embeddings.rows() - num_users;
  scores.resize(static_cast<Index>(users.size()), m);
  for (std::size_t r = 0; r < users.size(); ++r) {
    for (Index j = 0; j < m; ++j) {
      double s = 0.0;
      for (Index c = 0; c < embeddings.cols(); ++c) {
        s += embeddings(users[r], c) * embeddings(num_users + j, c);
      }
      scores(static_cast<Index>(r), j) = s;
    }
  }
}

}  // namespace gtn::serial

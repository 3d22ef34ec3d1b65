#include "gtn/kernels.hpp"

#include <omp.h>

#include <cmath>

namespace gtn::parallel {

void incidence_forward(const IncidenceOperator& op, const Matrix& in, Matrix& out) {
  const Index d = in.cols();
  out.resize(op.rows(), d);
  const Index* cols = op.col_index().data();
  const double* vals = op.values().data();
  const double* src = in.data();
  double* dst = out.data();
  const Index rows = op.rows();

#pragma omp parallel for schedule(static)
  for (Index l = 0; l < rows; ++l) {
    const double a = vals[2 * l];
    const double b = vals[2 * l + 1];
    const double* x = src + cols[2 * l] * d;
    const double* y = src + cols[2 * l + 1] * d;
    double* o = dst + l * d;
#pragma omp simd
    for (Index c = 0; c < d; ++c) o[c] = a * x[c] + b * y[c];
  }
}

void incidence_transpose(const IncidenceOperator& op, const Matrix& in, Matrix& out) {
  const Index d = in.cols();
  out.resize(op.cols(), d);
  const Index* ptr = op.node_ptr().data();
  const Index* edge = op.node_edge().data();
  const double* vals = op.node_value().data();
  const double* src = in.data();
  double* dst = out.data();
  const Index nodes = op.cols();

#pragma omp parallel for schedule(dynamic, 64)
  for (Index v = 0; v < nodes; ++v) {
    double* o = dst + v * d;
    for (Index c = 0; c < d; ++c) o[c] = 0.0;
    for (Index p = ptr[v]; p < ptr[v + 1]; ++p) {
      const double w = vals[p];
      const double* y = src + edge[p] * d;
#pragma omp simd
      for (Index c = 0; c < d; ++c) o[c] += w * y[c];
    }
  }
}

void dual_step(const IncidenceOperator& op, const Matrix& e_bar, double beta, double lambda,
               Matrix& y, Matrix* y_bar, std::uint8_t* mask) {
  const Index d = e_bar.cols();
  if (y_bar != nullptr) y_bar->resize(op.rows(), d);
  const Index* cols = op.col_index().data();
  const double* vals = op.values().data();
  const double* src = e_bar.data();
  double* dual = y.data();
  double* pred = y_bar != nullptr ? y_bar->data() : nullptr;
  const Index rows = op.rows();

#pragma omp parallel for schedule(static)
  for (Index l = 0; l < rows; ++l) {
    const double a = vals[2 * l];
    const double b = vals[2 * l + 1];
    const double* x = src + cols[2 * l] * d;
    const double* z = src + cols[2 * l + 1] * d;
    double* o = dual + l * d;
    if (pred == nullptr && mask == nullptr) {
#pragma omp simd
      for (Index c = 0; c < d; ++c) {
        const double v = o[c] + beta * (a * x[c] + b * z[c]);
        o[c] = v > lambda ? lambda : (v < -lambda ? -lambda : v);
      }
      continue;
    }
    for (Index c = 0; c < d; ++c) {
      const double v = o[c] + beta * (a * x[c] + b * z[c]);
      if (pred != nullptr) pred[l * d + c] = v;
      if (mask != nullptr) mask[l * d + c] = std::abs(v) <= lambda ? 1 : 0;
      o[c] = v > lambda ? lambda : (v < -lambda ? -lambda : v);
    }
  }
}

void propagate(const PropagationOperator& op, const Matrix& in, Matrix& out) {
  const Index d = in.cols();
  out.resize(op.size(), d);
  const Index* ptr = op.row_ptr().data();
  const Index* cols = op.col_index().data();
  const double* vals = op.values().data();
  const double* src = in.data();
  double* dst = out.data();
  const Index rows = op.size();

#pragma omp parallel for schedule(dynamic, 64)
  for (Index r = 0; r < rows; ++r) {
    double* o = dst + r * d;
    for (Index c = 0; c < d; ++c) o[c] = 0.0;
    for (Index p = ptr[r]; p < ptr[r + 1]; ++p) {
      const double w = vals[p];
      const double* x = src + cols[p] * d;
#pragma omp simd
      for (Index c = 0; c < d; ++c) o[c] += w * x[c];
    }
  }
}

void inner_products(const Matrix& embeddings, Index num_users, std::span<const Index> users,
                    Matrix& scores) {
  const Index m = embeddings.rows() - num_users;
  const Index rows = static_cast<Index>(users.size());
  scores.resize(rows, m);
  const auto items = embeddings.bottomRows(m);

#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    scores.row(r).noalias() = embeddings.row(users[r]) * items.transpose();
  }
}

}  // namespace gtn::parallel

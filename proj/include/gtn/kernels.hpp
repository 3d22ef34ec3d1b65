#pragma once

// Sparse and dense kernels behind the operator classes. Every kernel exists in
// two flavors: `serial` is the straightforward reference kept for testing and
// benchmarking, `parallel` is the OpenMP version the library uses.
//
// The parallel kernels partition work by output row and accumulate each row in
// a fixed order, so their results do not depend on the thread count.

#include <cstdint>
#include <span>

#include "gtn/incidence.hpp"
#include "gtn/propagation.hpp"
#include "gtn/types.hpp"

namespace gtn {

namespace serial {

// Edge-major scatter: out = Delta~ in.
void incidence_forward(const IncidenceOperator& op, const Matrix& in, Matrix& out);
// Edge-major scatter-add: out = Delta~^T in.
void incidence_transpose(const IncidenceOperator& op, const Matrix& in, Matrix& out);
// Fused dual update of the filter: y_bar = y + beta Delta~ e_bar, then
// y = clip(y_bar, lambda). y_bar and the clip mask (1 where |y_bar| <= lambda)
// are written only when the pointers are non-null. NaN passes through the clip.
void dual_step(const IncidenceOperator& op, const Matrix& e_bar, double beta, double lambda,
               Matrix& y, Matrix* y_bar, std::uint8_t* mask);
void propagate(const PropagationOperator& op, const Matrix& in, Matrix& out);
// scores(r, j) = <users.row(user_rows[r]), items.row(j)>
void inner_products(const Matrix& embeddings, Index num_users, std::span<const Index> users,
                    Matrix& scores);

}  // namespace serial

namespace parallel {

void incidence_forward(const IncidenceOperator& op, const Matrix& in, Matrix& out);
// Node-major gather over the transposed layout.
void incidence_transpose(const IncidenceOperator& op, const Matrix& in, Matrix& out);
void dual_step(const IncidenceOperator& op, const Matrix& e_bar, double beta, double lambda,
               Matrix& y, Matrix* y_bar, std::uint8_t* mask);
void propagate(const PropagationOperator& op, const Matrix& in, Matrix& out);
void inner_products(const Matrix& embeddings, Index num_users, std::span<const Index> users,
                    Matrix& scores);

}  // namespace parallel

}  // namespace gtn

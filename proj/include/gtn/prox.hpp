#pragma once

#include "gtn/types.hpp"

namespace gtn {

// Elementwise sign(x) * min(|x|, lambda): projection onto the l-inf ball,
// i.e. the prox of the conjugate of lambda * ||.||_1.
Matrix clip_prox(const Matrix& x, double lambda);
void clip_prox_inplace(Matrix& x, double lambda);

// Elementwise sign(x) * max(|x| - tau, 0).
Matrix soft_threshold(const Matrix& x, double tau);

}  // namespace gtn

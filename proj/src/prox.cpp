#include "gtn/prox.hpp"

#include <algorithm>
#include <cmath>

namespace gtn {

namespace {

void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0)) {
    throw ConfigError(std::string(name) + " must be nonnegative");
  }
}

}  // namespace

void clip_prox_inplace(Matrix& x, double lambda) {
  require_nonnegative(lambda, "clip threshold");
  x = x.cwiseMax(-lambda).cwiseMin(lambda);
}

Matrix clip_prox(const Matrix& x, double lambda) {
  Matrix out = x;
  clip_prox_inplace(out, lambda);
  return out;
}

Matrix soft_threshold(const Matrix& x, double tau) {
  require_nonnegative(tau, "soft-threshold level");
  return x.unaryExpr([tau](double v) {
    const double shrunk = std::max(std::abs(v) - tau, 0.0);
    return v < 0.0 ? -shrunk : shrunk;
  });
}

}  // namespace gtn

#include "distil/kernels.hpp"

namespace distil::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

double gather_dot(const double* w, const int* idx, const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += w[k] * x[idx[k]];
  return s;
}

}  // namespace distil::kernels::scalar

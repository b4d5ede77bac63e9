#pragma once

#include <cstddef>
#include <string>

namespace distil::kernels {

// sum_k a[k] * b[k]
using DotFn = double (*)(const double* a, const double* b, std::size_t n);
// sum_k w[k] * x[idx[k]]
using GatherDotFn = double (*)(const double* w, const int* idx, const double* x, std::size_t n);

enum class Backend { Scalar, Avx2 };

struct Table {
  Backend backend;
  DotFn dot;
  GatherDotFn gather_dot;
};

// Selected once from CPU features; DISTIL_SIMD=scalar forces the reference path.
const Table& active();
const Table& scalar_table();
// nullptr when the build or the CPU lacks AVX2+FMA.
const Table* avx2_table();
bool cpu_has_avx2();
void force_backend(Backend b);
std::string backend_name(Backend b);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double gather_dot(const double* w, const int* idx, const double* x, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double gather_dot(const double* w, const int* idx, const double* x, std::size_t n);
}  // namespace avx2

}  // namespace distil::kernels

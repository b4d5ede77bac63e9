#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "distil/kernels.hpp"

using namespace distil::kernels;

namespace {

struct Data {
  std::vector<double> a, b, x;
  std::vector<int> idx;
};

Data make_data(std::size_t n, std::size_t nx, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> ui(0, static_cast<int>(nx) - 1);
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    d.a.push_back(nd(g));
    d.b.push_back(nd(g));
    d.idx.push_back(ui(g));
  }
  for (std::size_t i = 0; i < nx; ++i) d.x.push_back(nd(g));
  return d;
}

// extended precision reference
double ref_dot(const double* a, const double* b, std::size_t n) {
  long double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

double tol_for(const Data& d) {
  double s = 0;
  for (std::size_t i = 0; i < d.a.size(); ++i) s += std::abs(d.a[i] * d.b[i]);
  return 1e-14 * (1 + s);
}

}  // namespace

TEST_CASE("scalar kernels against a long double reference") {
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1000u}) {
    Data d = make_data(n, 50, n + 1);
    CHECK(std::abs(scalar::dot(d.a.data(), d.b.data(), n) - ref_dot(d.a.data(), d.b.data(), n)) <= tol_for(d));
    std::vector<double> gx;
    for (int i : d.idx) gx.push_back(d.x[i]);
    CHECK(std::abs(scalar::gather_dot(d.a.data(), d.idx.data(), d.x.data(), n) -
                   ref_dot(d.a.data(), gx.data(), n)) <= 1e-13 * (1 + n));
  }
}

TEST_CASE("AVX2 kernels agree with scalar kernels") {
  const Table* t = avx2_table();
  if (!t) {
    MESSAGE("AVX2 not available; skipping equivalence");
    return;
  }
  CHECK(t->backend == Backend::Avx2);
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 8u, 9u, 15u, 17u, 64u, 1001u, 4099u}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Data d = make_data(n, 200, 100 * n + seed);
      double s = scalar::dot(d.a.data(), d.b.data(), n);
      double v = t->dot(d.a.data(), d.b.data(), n);
      CHECK(std::abs(s - v) <= tol_for(d));
      double sg = scalar::gather_dot(d.a.data(), d.idx.data(), d.x.data(), n);
      double vg = t->gather_dot(d.a.data(), d.idx.data(), d.x.data(), n);
      CHECK(std::abs(sg - vg) <= 1e-13 * (1 + n));
    }
  }
}

TEST_CASE("dispatch table and forced backends") {
  CHECK(scalar_table().backend == Backend::Scalar);
  CHECK(backend_name(Backend::Scalar) == "scalar");
  CHECK(backend_name(Backend::Avx2) == "avx2");
  const Backend before = active().backend;
  force_backend(Backend::Scalar);
  CHECK(active().backend == Backend::Scalar);
  CHECK(active().dot == scalar_table().dot);
  force_backend(Backend::Avx2);
  CHECK(active().backend == (avx2_table() ? Backend::Avx2 : Backend::Scalar));
  if (!cpu_has_avx2()) CHECK(avx2_table() == nullptr);
  force_backend(before);
  Data d = make_data(37, 10, 9);
  CHECK(std::abs(active().dot(d.a.data(), d.b.data(), 37) - scalar::dot(d.a.data(), d.b.data(), 37)) <=
        tol_for(d));
}

#include "distil/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace distil::kernels {

namespace {

const Table kScalar{Backend::Scalar, &scalar::dot, &scalar::gather_dot};
#ifdef DISTIL_WITH_AVX2
const Table kAvx2{Backend::Avx2, &avx2::dot, &avx2::gather_dot};
#endif

const Table* pick() {
  const char* env = std::getenv("DISTIL_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return &kScalar;
  if (const Table* t = avx2_table()) return t;
  return &kScalar;
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> t{pick()};
  return t;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table& scalar_table() { return kScalar; }

const Table* avx2_table() {
#ifdef DISTIL_WITH_AVX2
  if (cpu_has_avx2()) return &kAvx2;
#endif
  return nullptr;
}

const Table& active() { return *current().load(std::memory_order_relaxed); }

void force_backend(Backend b) {
  if (b == Backend::Avx2 && avx2_table()) current().store(avx2_table());
  else current().store(&kScalar);
}

std::string backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

}  // namespace distil::kernels

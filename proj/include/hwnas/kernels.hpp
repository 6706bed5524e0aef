#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hwnas::kernels {

// Single-precision inner-loop primitives behind a runtime-selected table.
// The scalar entries are the reference semantics; SIMD variants must agree
// with them: bitwise for the elementwise ops, to tolerance for reductions
// (see tests/test_kernels.cpp). Selection is per-process, so repeated runs on
// one host use one kernel set and artifacts stay byte-reproducible.
struct Ops {
  const char* name;
  float (*dot)(const float* a, const float* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  float (*absmax)(const float* x, std::size_t n);
  // Symmetric uniform quantizer, scale = absmax / qmax, round half to even.
  // Codes that land on +-qmax snap to +-absmax exactly so that requantizing
  // a quantized tensor reproduces it bitwise. Requires absmax > 0.
  void (*quantize_symmetric)(const float* x, float* y, std::size_t n, float absmax, int qmax);
  // Bias-corrected Adam step; bias_c1 = 1 - beta1^t, bias_c2 = 1 - beta2^t.
  void (*adam_update)(float* w, const float* g, float* m, float* v, std::size_t n, float lr,
                      float beta1, float beta2, float eps, float bias_c1, float bias_c2);
};

const Ops& scalar_ops();
#if defined(__x86_64__) || defined(__i386__)
const Ops& avx2_ops();  // callable only when the CPU reports AVX2+FMA
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
const Ops& neon_ops();
#endif

// The table picked at startup: best available, or the HWNAS_KERNEL env var
// ("scalar", "avx2", "neon", "auto") when set and usable on this host.
const Ops& active();

// nullptr if this build doesn't carry the variant or the CPU can't run it.
const Ops* find(std::string_view name);
std::vector<std::string> available();

// Reference implementations; also the double-precision path used by the
// gradient-check oracle.
namespace ref {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
T absmax(const T* x, std::size_t n) {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc = std::max(acc, std::abs(x[i]));
  return acc;
}

template <typename T>
void quantize_symmetric(const T* x, T* y, std::size_t n, T amax, int qmax) {
  const T q = static_cast<T>(qmax);
  const T scale = amax / q;
  for (std::size_t i = 0; i < n; ++i) {
    T code = std::nearbyint(x[i] / scale);
    code = std::min(std::max(code, -q), q);
    y[i] = (std::abs(code) == q) ? std::copysign(amax, code) : code * scale;
  }
}

template <typename T>
void adam_update(T* w, const T* g, T* m, T* v, std::size_t n, T lr, T beta1, T beta2, T eps,
                 T bias_c1, T bias_c2) {
  const T om1 = T(1) - beta1;
  const T om2 = T(1) - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const T gi = g[i];
    m[i] = beta1 * m[i] + om1 * gi;
    v[i] = beta2 * v[i] + om2 * (gi * gi);
    w[i] = w[i] - lr * ((m[i] / bias_c1) / (std::sqrt(v[i] / bias_c2) + eps));
  }
}

}  // namespace ref

// Typed shim so templated engine code routes float through the dispatch table
// and double through the scalar reference.
template <typename T>
struct Traits {
  static T dot(const T* a, const T* b, std::size_t n) { return ref::dot(a, b, n); }
  static void axpy(T alpha, const T* x, T* y, std::size_t n) { ref::axpy(alpha, x, y, n); }
  static T absmax(const T* x, std::size_t n) { return ref::absmax(x, n); }
  static void quantize_symmetric(const T* x, T* y, std::size_t n, T amax, int qmax) {
    ref::quantize_symmetric(x, y, n, amax, qmax);
  }
  static void adam_update(T* w, const T* g, T* m, T* v, std::size_t n, T lr, T beta1, T beta2,
                          T eps, T bc1, T bc2) {
    ref::adam_update(w, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
  }
};

template <>
struct Traits<float> {
  static float dot(const float* a, const float* b, std::size_t n) { return active().dot(a, b, n); }
  static void axpy(float alpha, const float* x, float* y, std::size_t n) {
    active().axpy(alpha, x, y, n);
  }
  static float absmax(const float* x, std::size_t n) { return active().absmax(x, n); }
  static void quantize_symmetric(const float* x, float* y, std::size_t n, float amax, int qmax) {
    active().quantize_symmetric(x, y, n, amax, qmax);
  }
  static void adam_update(float* w, const float* g, float* m, float* v, std::size_t n, float lr,
                          float beta1, float beta2, float eps, float bc1, float bc2) {
    active().adam_update(w, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
  }
};

}  // namespace hwnas::kernels

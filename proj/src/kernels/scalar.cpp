#include "hwnas/kernels.hpp"

namespace hwnas::kernels {

namespace {

float dot_f(const float* a, const float* b, std::size_t n) { return ref::dot(a, b, n); }
void axpy_f(float alpha, const float* x, float* y, std::size_t n) { ref::axpy(alpha, x, y, n); }
float absmax_f(const float* x, std::size_t n) { return ref::absmax(x, n); }
void quantize_f(const float* x, float* y, std::size_t n, float amax, int qmax) {
  ref::quantize_symmetric(x, y, n, amax, qmax);
}
void adam_f(float* w, const float* g, float* m, float* v, std::size_t n, float lr, float beta1,
            float beta2, float eps, float bc1, float bc2) {
  ref::adam_update(w, g, m, v, n, lr, beta1, beta2, eps, bc1, bc2);
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar", dot_f, axpy_f, absmax_f, quantize_f, adam_f};
  return ops;
}

}  // namespace hwnas::kernels

#if defined(__aarch64__) || defined(__ARM_NEON)

#include <arm_neon.h>

#include "hwnas/kernels.hpp"

namespace hwnas::kernels {

namespace {

float dot_f(const float* a, const float* b, std::size_t n) {
  float32x4_t acc0 = vdupq_n_f32(0.0f);
  float32x4_t acc1 = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
    acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
  }
  float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_f(float alpha, const float* x, float* y, std::size_t n) {
  const float32x4_t va = vdupq_n_f32(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t vy = vld1q_f32(y + i);
    vy = vaddq_f32(vy, vmulq_f32(va, vld1q_f32(x + i)));
    vst1q_f32(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

float absmax_f(const float* x, std::size_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = vmaxq_f32(acc, vabsq_f32(vld1q_f32(x + i)));
  }
  float m = vmaxvq_f32(acc);
  for (; i < n; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

void quantize_f(const float* x, float* y, std::size_t n, float amax, int qmax) {
  const float qf = static_cast<float>(qmax);
  const float scale = amax / qf;
  const float32x4_t vscale = vdupq_n_f32(scale);
  const float32x4_t vq = vdupq_n_f32(qf);
  const float32x4_t vnq = vdupq_n_f32(-qf);
  const float32x4_t vamax = vdupq_n_f32(amax);
  const uint32x4_t signbit = vdupq_n_u32(0x80000000u);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t code = vrndnq_f32(vdivq_f32(vld1q_f32(x + i), vscale));
    code = vminq_f32(vq, vmaxq_f32(vnq, code));
    float32x4_t vy = vmulq_f32(code, vscale);
    float32x4_t snapped = vbslq_f32(signbit, code, vamax);
    uint32x4_t at_edge = vceqq_f32(vabsq_f32(code), vq);
    vst1q_f32(y + i, vbslq_f32(at_edge, snapped, vy));
  }
  for (; i < n; ++i) {
    float code = std::nearbyint(x[i] / scale);
    code = std::min(std::max(code, -qf), qf);
    y[i] = (std::abs(code) == qf) ? std::copysign(amax, code) : code * scale;
  }
}

void adam_f(float* w, const float* g, float* m, float* v, std::size_t n, float lr, float beta1,
            float beta2, float eps, float bc1, float bc2) {
  const float32x4_t vb1 = vdupq_n_f32(beta1);
  const float32x4_t vb2 = vdupq_n_f32(beta2);
  const float32x4_t vo1 = vdupq_n_f32(1.0f - beta1);
  const float32x4_t vo2 = vdupq_n_f32(1.0f - beta2);
  const float32x4_t vlr = vdupq_n_f32(lr);
  const float32x4_t veps = vdupq_n_f32(eps);
  const float32x4_t vc1 = vdupq_n_f32(bc1);
  const float32x4_t vc2 = vdupq_n_f32(bc2);
  std::size_t i = 0;
  // Same multiply/add sequence as the scalar reference (no FMA) so the two
  // variants agree bitwise.
  for (; i + 4 <= n; i += 4) {
    float32x4_t vg = vld1q_f32(g + i);
    float32x4_t vm = vaddq_f32(vmulq_f32(vb1, vld1q_f32(m + i)), vmulq_f32(vo1, vg));
    float32x4_t vv =
        vaddq_f32(vmulq_f32(vb2, vld1q_f32(v + i)), vmulq_f32(vo2, vmulq_f32(vg, vg)));
    vst1q_f32(m + i, vm);
    vst1q_f32(v + i, vv);
    float32x4_t denom = vaddq_f32(vsqrtq_f32(vdivq_f32(vv, vc2)), veps);
    float32x4_t step = vmulq_f32(vlr, vdivq_f32(vdivq_f32(vm, vc1), denom));
    vst1q_f32(w + i, vsubq_f32(vld1q_f32(w + i), step));
  }
  const float om1 = 1.0f - beta1;
  const float om2 = 1.0f - beta2;
  for (; i < n; ++i) {
    const float gi = g[i];
    m[i] = beta1 * m[i] + om1 * gi;
    v[i] = beta2 * v[i] + om2 * (gi * gi);
    w[i] = w[i] - lr * ((m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps));
  }
}

}  // namespace

const Ops& neon_ops() {
  static const Ops ops{"neon", dot_f, axpy_f, absmax_f, quantize_f, adam_f};
  return ops;
}

}  // namespace hwnas::kernels

#endif

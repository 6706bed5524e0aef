#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include "hwnas/kernels.hpp"

namespace hwnas::kernels {

namespace {

float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
  return _mm_cvtss_f32(s);
}

float hmax(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_max_ps(lo, hi);
  s = _mm_max_ps(s, _mm_movehl_ps(s, s));
  s = _mm_max_ss(s, _mm_shuffle_ps(s, s, 0x55));
  return _mm_cvtss_f32(s);
}

float dot_f(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  }
  float acc = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_f(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vy = _mm256_loadu_ps(y + i);
    vy = _mm256_add_ps(vy, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    _mm256_storeu_ps(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

float absmax_f(const float* x, std::size_t n) {
  const __m256 mask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_max_ps(acc, _mm256_and_ps(mask, _mm256_loadu_ps(x + i)));
  }
  float m = hmax(acc);
  for (; i < n; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

void quantize_f(const float* x, float* y, std::size_t n, float amax, int qmax) {
  const float qf = static_cast<float>(qmax);
  const float scale = amax / qf;
  const __m256 vscale = _mm256_set1_ps(scale);
  const __m256 vq = _mm256_set1_ps(qf);
  const __m256 vnq = _mm256_set1_ps(-qf);
  const __m256 vamax = _mm256_set1_ps(amax);
  const __m256 signbit = _mm256_set1_ps(-0.0f);
  const __m256 absmask = _mm256_castsi256_ps(_mm256_set1_epi32(0x7fffffff));
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 code = _mm256_div_ps(_mm256_loadu_ps(x + i), vscale);
    code = _mm256_round_ps(code, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    code = _mm256_min_ps(vq, _mm256_max_ps(vnq, code));
    __m256 vy = _mm256_mul_ps(code, vscale);
    __m256 snapped = _mm256_or_ps(vamax, _mm256_and_ps(code, signbit));
    __m256 at_edge = _mm256_cmp_ps(_mm256_and_ps(code, absmask), vq, _CMP_EQ_OQ);
    _mm256_storeu_ps(y + i, _mm256_blendv_ps(vy, snapped, at_edge));
  }
  for (; i < n; ++i) {
    float code = std::nearbyint(x[i] / scale);
    code = std::min(std::max(code, -qf), qf);
    y[i] = (std::abs(code) == qf) ? std::copysign(amax, code) : code * scale;
  }
}

void adam_f(float* w, const float* g, float* m, float* v, std::size_t n, float lr, float beta1,
            float beta2, float eps, float bc1, float bc2) {
  const __m256 vb1 = _mm256_set1_ps(beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2);
  const __m256 vo1 = _mm256_set1_ps(1.0f - beta1);
  const __m256 vo2 = _mm256_set1_ps(1.0f - beta2);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vc1 = _mm256_set1_ps(bc1);
  const __m256 vc2 = _mm256_set1_ps(bc2);
  std::size_t i = 0;
  // Same multiply/add sequence as the scalar reference (no FMA) so the two
  // variants agree bitwise.
  for (; i + 8 <= n; i += 8) {
    __m256 vg = _mm256_loadu_ps(g + i);
    __m256 vm = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(vo1, vg));
    __m256 vv = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(vo2, _mm256_mul_ps(vg, vg)));
    _mm256_storeu_ps(m + i, vm);
    _mm256_storeu_ps(v + i, vv);
    __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_div_ps(vv, vc2)), veps);
    __m256 step = _mm256_mul_ps(vlr, _mm256_div_ps(_mm256_div_ps(vm, vc1), denom));
    _mm256_storeu_ps(w + i, _mm256_sub_ps(_mm256_loadu_ps(w + i), step));
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

const Ops& avx2_ops() {
  static const Ops ops{"avx2", dot_f, axpy_f, absmax_f, quantize_f, adam_f};
  return ops;
}

}  // namespace hwnas::kernels

#endif

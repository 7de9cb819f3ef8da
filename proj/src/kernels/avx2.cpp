#include "ainc/kernels.hpp"

// AVX2 lane. Bit-identical to the scalar lane: elementwise ops use the same
// per-element expressions (cmp+blend instead of min/max so -0.0 and NaN edge
// behavior matches the scalar ternaries), reductions replicate the canonical
// 4-accumulator blocked order with one accumulator per vector lane, and no
// FMA instructions are emitted (separate mul/add intrinsics; this TU is
// compiled with -mavx2, not -mfma).

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace ainc::kern {
namespace {

void k_add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void k_sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void k_mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void k_mul_acc(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), prod));
  }
  for (; i < n; ++i) out[i] += a[i] * b[i];
}

void k_scale(const double* x, double s, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = s * x[i];
}

void k_axpy(double s, const double* x, double* y, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(vs, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += s * x[i];
}

void k_add_scalar_acc(double s, double* y, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), vs));
  for (; i < n; ++i) y[i] += s;
}

void k_relu(const double* x, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d gt = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(zero, v, gt));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void k_relu_bwd_acc(const double* x, const double* g, double* dx, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d gt = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    __m256d addend = _mm256_and_pd(gt, _mm256_loadu_pd(g + i));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), addend));
  }
  for (; i < n; ++i) dx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void k_clamp(const double* x, double lo, double hi, double* out, std::size_t n) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    v = _mm256_blendv_pd(v, vlo, _mm256_cmp_pd(v, vlo, _CMP_LT_OQ));
    v = _mm256_blendv_pd(v, vhi, _mm256_cmp_pd(v, vhi, _CMP_GT_OQ));
    _mm256_storeu_pd(out + i, v);
  }
  for (; i < n; ++i) {
    double v = x[i];
    v = v < lo ? lo : v;
    v = v > hi ? hi : v;
    out[i] = v;
  }
}

double k_dot(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  __m256d vacc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4)
    vacc = _mm256_add_pd(vacc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  alignas(32) double t[4];
  _mm256_store_pd(t, vacc);
  double total = (t[0] + t[1]) + (t[2] + t[3]);
  for (std::size_t i = n4; i < n; ++i) total += a[i] * b[i];
  return total;
}

double k_sum(const double* x, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  __m256d vacc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < n4; i += 4)
    vacc = _mm256_add_pd(vacc, _mm256_loadu_pd(x + i));
  alignas(32) double t[4];
  _mm256_store_pd(t, vacc);
  double total = (t[0] + t[1]) + (t[2] + t[3]);
  for (std::size_t i = n4; i < n; ++i) total += x[i];
  return total;
}

void k_matmul_ab(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l)
      k_axpy(a[i * k + l], b + l * n, c + i * n, n);
}

void k_matmul_abt(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c[i * n + j] += k_dot(a + i * k, b + j * k, k);
}

void k_matmul_atb(const double* a, const double* b, double* c,
                  std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t l = 0; l < k; ++l)
    for (std::size_t i = 0; i < m; ++i)
      k_axpy(a[l * m + i], b + l * n, c + i * n, n);
}

void k_ger_acc(const double* x, const double* y, double* c,
               std::size_t m, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) k_axpy(x[i], y, c + i * n, n);
}

const Ops table = {
    "avx2",
    k_add, k_sub, k_mul, k_mul_acc, k_scale, k_axpy, k_add_scalar_acc,
    k_relu, k_relu_bwd_acc, k_clamp,
    k_dot, k_sum,
    k_matmul_ab, k_matmul_abt, k_matmul_atb, k_ger_acc,
};

}  // namespace

const Ops* avx2_ops() {
  return __builtin_cpu_supports("avx2") ? &table : nullptr;
}

}  // namespace ainc::kern

#else  // non-x86 build: lane not compiled in

namespace ainc::kern {
const Ops* avx2_ops() { return nullptr; }
}  // namespace ainc::kern

#endif

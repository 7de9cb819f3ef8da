#include "ainc/kernels.hpp"

// Reference lane. The 4-accumulator blocked reductions are the *definition*
// of reduction order for every lane (see kernels.hpp); the SIMD lanes mirror
// this structure exactly.

namespace ainc::kern {
namespace {

void k_add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void k_sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void k_mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void k_mul_acc(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void k_scale(const double* x, double s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = s * x[i];
}

void k_axpy(double s, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

void k_add_scalar_acc(double s, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += s;
}

void k_relu(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void k_relu_bwd_acc(const double* x, const double* g, double* dx, std::size_t n) {
  // Always adds (0.0 when gated) so SIMD masked-add lanes match bit-for-bit.
  for (std::size_t i = 0; i < n; ++i) dx[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void k_clamp(const double* x, double lo, double hi, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    v = v < lo ? lo : v;
    v = v > hi ? hi : v;
    out[i] = v;
  }
}

double k_dot(const double* a, const double* b, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  for (std::size_t i = 0; i < n4; i += 4) {
    a0 += a[i] * b[i];
    a1 += a[i + 1] * b[i + 1];
    a2 += a[i + 2] * b[i + 2];
    a3 += a[i + 3] * b[i + 3];
  }
  double total = (a0 + a1) + (a2 + a3);
  for (std::size_t i = n4; i < n; ++i) total += a[i] * b[i];
  return total;
}

double k_sum(const double* x, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  for (std::size_t i = 0; i < n4; i += 4) {
    a0 += x[i];
    a1 += x[i + 1];
    a2 += x[i + 2];
    a3 += x[i + 3];
  }
  double total = (a0 + a1) + (a2 + a3);
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

}  // namespace

const Ops& scalar_ops() {
  static const Ops table = {
      "scalar",
      k_add, k_sub, k_mul, k_mul_acc, k_scale, k_axpy, k_add_scalar_acc,
      k_relu, k_relu_bwd_acc, k_clamp,
      k_dot, k_sum,
      k_matmul_ab, k_matmul_abt, k_matmul_atb, k_ger_acc,
  };
  return table;
}

}  // namespace ainc::kern

#pragma once

#include <cstddef>

namespace ainc::kern {

// Dense f64 kernel table. A scalar reference lane always exists; an AVX2 lane
// is compiled on x86-64 and selected at runtime when the CPU supports it.
// Every lane must produce bit-identical results on finite inputs:
//
//  - elementwise kernels vectorize across independent output elements and use
//    separate mul/add (no FMA; the build sets -ffp-contract=off);
//  - every dot-like reduction uses the canonical 4-accumulator blocked order:
//      acc_j = sum of terms with index ≡ j (mod 4), j = 0..3, over n & ~3;
//      total = ((acc0 + acc1) + (acc2 + acc3)); then remaining tail terms
//      are added sequentially in index order;
//  - exp/log stay scalar libm calls in all lanes.
//
// Matrix kernels ACCUMULATE into C (C += product); callers zero-fill fresh
// outputs. Elementwise kernels may alias out with an input (same address);
// partially overlapping buffers are not supported. All matrices row-major.
struct Ops {
  const char* name;

  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul_acc)(const double* a, const double* b, double* out, std::size_t n);  // out += a∘b
  void (*scale)(const double* x, double s, double* out, std::size_t n);
  void (*axpy)(double s, const double* x, double* y, std::size_t n);  // y += s*x
  void (*add_scalar_acc)(double s, double* y, std::size_t n);         // y += s
  void (*relu)(const double* x, double* out, std::size_t n);
  void (*relu_bwd_acc)(const double* x, const double* g, double* dx, std::size_t n);
  void (*clamp)(const double* x, double lo, double hi, double* out, std::size_t n);

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* x, std::size_t n);

  // C(m,n) += A(m,k) · B(k,n)^layouts; see each signature.
  void (*matmul_ab)(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n);   // A(m,k)·B(k,n)
  void (*matmul_abt)(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t k, std::size_t n);  // A(m,k)·B(n,k)ᵀ
  void (*matmul_atb)(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t k, std::size_t n);  // A(k,m)ᵀ·B(k,n)
  void (*ger_acc)(const double* x, const double* y, double* c,
                  std::size_t m, std::size_t n);                    // C(m,n) += x⊗y
};

const Ops& scalar_ops();

// nullptr when the lane is not compiled in or the CPU lacks the feature.
const Ops* avx2_ops();

// Runtime-selected lane. Honors AINC_KERNELS=scalar|avx2 (falls back with a
// warning if the requested lane is unavailable). Selection is made once.
const Ops& ops();

}  // namespace ainc::kern

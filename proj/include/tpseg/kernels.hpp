#pragma once

#include <cstddef>
#include <vector>

namespace tpseg::kernels {

// Dense double-precision kernels behind the tensor ops. Every entry has a
// scalar reference implementation and, on x86-64, an AVX2 variant selected at
// runtime. The two are bit-identical by construction: identical per-element
// accumulation order, no FMA contraction anywhere (the project builds with
// -ffp-contract=off and the AVX2 code uses separate mul/add).
//
// conv_fwd   y[co,oy,ox] = bias[co] + sum_{ci,ky,kx} w[co,ci,ky,kx] *
//            xpad[ci, oy+ky, ox+kx]; stride-1 cross-correlation over an input
//            that the caller has already zero-padded. bias may be null.
//
// conv_wgrad gw[co,ci,ky,kx] = sum_{oy,ox} gy[co,oy,ox] * xpad[ci,oy+ky,ox+kx].
//            The (oy,ox) reduction is defined as four lane partials over ox
//            (lane = ox mod 4, vector body ox < wo&~3, rows visited in order)
//            plus a left-to-right scalar tail per row, combined at the end as
//            ((l0+l2)+(l1+l3)) + tail. Both variants follow this order
//            exactly so their results match bitwise.
//
// adam_update  m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g*g;
//              p -= lr * (m/bc1) / (sqrt(v/bc2) + eps)   per element.
struct KernelOps {
  const char* name;
  void (*conv_fwd)(const double* xpad, int ci, int hp, int wp,
                   const double* w, const double* bias, int co,
                   int kh, int kw, double* y, int ho, int wo);
  void (*conv_wgrad)(const double* xpad, int ci, int hp, int wp,
                     const double* gy, int co, int ho, int wo,
                     int kh, int kw, double* gw);
  void (*add)(const double* a, const double* b, double* y, std::size_t n);
  void (*mul)(const double* a, const double* b, double* y, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*adam_update)(double* p, double* m, double* v, const double* g,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2);
};

const KernelOps& scalar_kernels();

// Null when the AVX2 translation unit is not built or the CPU lacks AVX2.
const KernelOps* avx2_kernels();

// Scalar unless AVX2 is usable. TPSEG_KERNELS=scalar|avx2 forces a variant
// (forcing avx2 on a CPU without it is a usage error).
const KernelOps& active_kernels();

std::vector<const KernelOps*> available_kernels();

}  // namespace tpseg::kernels

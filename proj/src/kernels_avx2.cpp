// AVX2 variants of the dense kernels. Compiled with -mavx2 only (no FMA):
// every lane performs the same mul-then-add sequence as the scalar reference,
// so outputs are bit-identical and the equivalence tests can memcmp.

#include "tpseg/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>

namespace tpseg::kernels {
namespace {

void conv_fwd_avx2(const double* xpad, int ci, int hp, int wp,
                   const double* w, const double* bias, int co,
                   int kh, int kw, double* y, int ho, int wo) {
  const int nvec = wo & ~3;
  for (int oc = 0; oc < co; ++oc) {
    const double* wc = w + std::size_t(oc) * ci * kh * kw;
    const double b = bias ? bias[oc] : 0.0;
    double* yc = y + std::size_t(oc) * ho * wo;
    for (int oy = 0; oy < ho; ++oy) {
      double* yr = yc + std::size_t(oy) * wo;
      for (int ox = 0; ox < nvec; ox += 4) {
        __m256d acc = _mm256_set1_pd(b);
        const double* wk = wc;
        for (int ic = 0; ic < ci; ++ic) {
          const double* xc = xpad + (std::size_t(ic) * hp + oy) * wp + ox;
          for (int ky = 0; ky < kh; ++ky) {
            const double* xr = xc + std::size_t(ky) * wp;
            for (int kx = 0; kx < kw; ++kx) {
              const __m256d xv = _mm256_loadu_pd(xr + kx);
              const __m256d wv = _mm256_set1_pd(wk[kx]);
              acc = _mm256_add_pd(acc, _mm256_mul_pd(wv, xv));
            }
            wk += kw;
          }
        }
        _mm256_storeu_pd(yr + ox, acc);
      }
      for (int ox = nvec; ox < wo; ++ox) {
        double acc = b;
        const double* wk = wc;
        for (int ic = 0; ic < ci; ++ic) {
          const double* xc = xpad + (std::size_t(ic) * hp + oy) * wp + ox;
          for (int ky = 0; ky < kh; ++ky) {
            const double* xr = xc + std::size_t(ky) * wp;
            for (int kx = 0; kx < kw; ++kx) acc += wk[kx] * xr[kx];
            wk += kw;
          }
        }
        yr[ox] = acc;
      }
    }
  }
}

void conv_wgrad_avx2(const double* xpad, int ci, int hp, int wp,
                     const double* gy, int co, int ho, int wo,
                     int kh, int kw, double* gw) {
  const int nvec = wo & ~3;
  for (int oc = 0; oc < co; ++oc) {
    const double* gc = gy + std::size_t(oc) * ho * wo;
    for (int ic = 0; ic < ci; ++ic) {
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          __m256d acc = _mm256_setzero_pd();
          double tail = 0.0;
          for (int oy = 0; oy < ho; ++oy) {
            const double* gr = gc + std::size_t(oy) * wo;
            const double* xr = xpad + (std::size_t(ic) * hp + oy + ky) * wp + kx;
            for (int ox = 0; ox < nvec; ox += 4) {
              const __m256d gv = _mm256_loadu_pd(gr + ox);
              const __m256d xv = _mm256_loadu_pd(xr + ox);
              acc = _mm256_add_pd(acc, _mm256_mul_pd(gv, xv));
            }
            for (int ox = nvec; ox < wo; ++ox) tail += gr[ox] * xr[ox];
          }
          // (l0+l2)+(l1+l3), matching the documented reduction order.
          const __m128d lo = _mm256_castpd256_pd128(acc);
          const __m128d hi = _mm256_extractf128_pd(acc, 1);
          const __m128d s = _mm_add_pd(lo, hi);
          const double partial =
              _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
          gw[((std::size_t(oc) * ci + ic) * kh + ky) * kw + kx] = partial + tail;
        }
      }
    }
  }
}

void add_avx2(const double* a, const double* b, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

void mul_avx2(const double* a, const double* b, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void adam_avx2(double* p, double* m, double* v, const double* g,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bc1, double bc2) {
  const double om1 = 1.0 - beta1;
  const double om2 = 1.0 - beta2;
  const __m256d b1v = _mm256_set1_pd(beta1), om1v = _mm256_set1_pd(om1);
  const __m256d b2v = _mm256_set1_pd(beta2), om2v = _mm256_set1_pd(om2);
  const __m256d bc1v = _mm256_set1_pd(bc1), bc2v = _mm256_set1_pd(bc2);
  const __m256d lrv = _mm256_set1_pd(lr), epsv = _mm256_set1_pd(eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gv = _mm256_loadu_pd(g + i);
    __m256d mv = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    mv = _mm256_add_pd(_mm256_mul_pd(b1v, mv), _mm256_mul_pd(om1v, gv));
    vv = _mm256_add_pd(_mm256_mul_pd(b2v, vv),
                       _mm256_mul_pd(om2v, _mm256_mul_pd(gv, gv)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mh = _mm256_div_pd(mv, bc1v);
    const __m256d vh = _mm256_div_pd(vv, bc2v);
    const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vh), epsv);
    const __m256d step = _mm256_mul_pd(lrv, _mm256_div_pd(mh, den));
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    const double gi = g[i];
    m[i] = beta1 * m[i] + om1 * gi;
    v[i] = beta2 * v[i] + om2 * (gi * gi);
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    p[i] -= lr * (mh / (std::sqrt(vh) + eps));
  }
}

}  // namespace

const KernelOps* avx2_kernels_impl() {
  static const KernelOps ops = {
      "avx2",       conv_fwd_avx2, conv_wgrad_avx2, add_avx2,
      mul_avx2,     axpy_avx2,     adam_avx2,
  };
  return &ops;
}

}  // namespace tpseg::kernels

#else

namespace tpseg::kernels {
const KernelOps* avx2_kernels_impl() { return nullptr; }
}  // namespace tpseg::kernels

#endif

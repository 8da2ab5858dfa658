#include "tpseg/kernels.hpp"

#include <cmath>

namespace tpseg::kernels {
namespace {

void conv_fwd_scalar(const double* xpad, int ci, int hp, int wp,
                     const double* w, const double* bias, int co,
                     int kh, int kw, double* y, int ho, int wo) {
  for (int oc = 0; oc < co; ++oc) {
    const double* wc = w + std::size_t(oc) * ci * kh * kw;
    const double b = bias ? bias[oc] : 0.0;
    double* yc = y + std::size_t(oc) * ho * wo;
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
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
        yc[std::size_t(oy) * wo + ox] = acc;
      }
    }
  }
}

void conv_wgrad_scalar(const double* xpad, int ci, int hp, int wp,
                       const double* gy, int co, int ho, int wo,
                       int kh, int kw, double* gw) {
  const int nvec = wo & ~3;
  for (int oc = 0; oc < co; ++oc) {
    const double* gc = gy + std::size_t(oc) * ho * wo;
    for (int ic = 0; ic < ci; ++ic) {
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx) {
          double lane[4] = {0.0, 0.0, 0.0, 0.0};
          double tail = 0.0;
          for (int oy = 0; oy < ho; ++oy) {
            const double* gr = gc + std::size_t(oy) * wo;
            const double* xr = xpad + (std::size_t(ic) * hp + oy + ky) * wp + kx;
            for (int ox = 0; ox < nvec; ++ox) lane[ox & 3] += gr[ox] * xr[ox];
            for (int ox = nvec; ox < wo; ++ox) tail += gr[ox] * xr[ox];
          }
          gw[((std::size_t(oc) * ci + ic) * kh + ky) * kw + kx] =
              ((lane[0] + lane[2]) + (lane[1] + lane[3])) + tail;
        }
      }
    }
  }
}

void add_scalar(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void mul_scalar(const double* a, const double* b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void adam_scalar(double* p, double* m, double* v, const double* g,
                 std::size_t n, double lr, double beta1, double beta2,
                 double eps, double bc1, double bc2) {
  const double om1 = 1.0 - beta1;
  const double om2 = 1.0 - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    m[i] = beta1 * m[i] + om1 * gi;
    v[i] = beta2 * v[i] + om2 * (gi * gi);
    const double mh = m[i] / bc1;
    const double vh = v[i] / bc2;
    p[i] -= lr * (mh / (std::sqrt(vh) + eps));
  }
}

}  // namespace

const KernelOps& scalar_kernels() {
  static const KernelOps ops = {
      "scalar",         conv_fwd_scalar, conv_wgrad_scalar,
      add_scalar,       mul_scalar,      axpy_scalar,
      adam_scalar,
  };
  return ops;
}

}  // namespace tpseg::kernels

#include "tpseg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "tpseg/kernels.hpp"

namespace tpseg::ad {
namespace {

using kernels::active_kernels;

std::shared_ptr<Node> make_node(const char* op, std::vector<int> shape,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->shape = std::move(shape);
  n->value.resize(shape_numel(n->shape));
  n->parents = std::move(parents);
  for (auto& p : n->parents)
    if (p->needs_grad) n->needs_grad = true;
  return n;
}

void expect_nchw(const Tensor& t, const char* op) {
  if (t.ndim() != 4)
    throw DimensionError(std::string(op) + ": expected 4-d NCHW tensor, got " +
                         shape_str(t.shape()));
}

// Zero-padded per-channel copy; both conv kernels consume this layout so the
// inner loops never branch on borders.
std::vector<double> pad_channels(const double* x, int c, int h, int w, int pad) {
  const int hp = h + 2 * pad, wp = w + 2 * pad;
  std::vector<double> out(std::size_t(c) * hp * wp, 0.0);
  for (int ic = 0; ic < c; ++ic)
    for (int y = 0; y < h; ++y)
      std::memcpy(&out[(std::size_t(ic) * hp + y + pad) * wp + pad],
                  &x[(std::size_t(ic) * h + y) * w], sizeof(double) * w);
  return out;
}

// Generic strided reference used for stride > 1 (the network itself only
// builds stride-1 convolutions).
void conv_fwd_strided(const double* xpad, int ci, int hp, int wp,
                      const double* w, const double* bias, int co,
                      int kh, int kw, int stride, double* y, int ho, int wo) {
  for (int oc = 0; oc < co; ++oc) {
    const double b = bias ? bias[oc] : 0.0;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double acc = b;
        for (int ic = 0; ic < ci; ++ic)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx)
              acc += w[((std::size_t(oc) * ci + ic) * kh + ky) * kw + kx] *
                     xpad[(std::size_t(ic) * hp + oy * stride + ky) * wp +
                          ox * stride + kx];
        y[(std::size_t(oc) * ho + oy) * wo + ox] = acc;
      }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int stride, int padding) {
  expect_nchw(x, "conv2d");
  if (kernel.ndim() != 4)
    throw DimensionError("conv2d: kernel must be 4-d [Co,Ci,kh,kw], got " +
                         shape_str(kernel.shape()));
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int co = kernel.dim(0), kci = kernel.dim(1), kh = kernel.dim(2),
            kw = kernel.dim(3);
  if (kci != ci)
    throw DimensionError("conv2d: input channel axis " + std::to_string(ci) +
                         " != kernel channel axis " + std::to_string(kci));
  if (bias.ndim() != 1 || bias.dim(0) != co)
    throw DimensionError("conv2d: bias axis must be [" + std::to_string(co) +
                         "], got " + shape_str(bias.shape()));
  if (kh % 2 == 0 || kw % 2 == 0)
    throw DimensionError("conv2d: kernel spatial axes must be odd, got " +
                         shape_str(kernel.shape()));
  if (padding < 0 || stride < 1)
    throw DimensionError("conv2d: padding must be >= 0 and stride >= 1");
  if ((h + 2 * padding - kh) % stride != 0 || (w + 2 * padding - kw) % stride != 0)
    throw DimensionError("conv2d: output extent not integral on spatial axes");
  const int ho = (h + 2 * padding - kh) / stride + 1;
  const int wo = (w + 2 * padding - kw) / stride + 1;
  if (ho <= 0 || wo <= 0)
    throw DimensionError("conv2d: empty output for input " + shape_str(x.shape()));

  auto node = make_node("conv2d", {n, co, ho, wo},
                        {x.node(), kernel.node(), bias.node()});
  const int hp = h + 2 * padding, wp = w + 2 * padding;

  // The padded copies are kept for the weight-gradient pass.
  std::vector<std::vector<double>> xpads(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    xpads[i] = pad_channels(x.values().data() + std::size_t(i) * ci * h * w, ci,
                            h, w, padding);
    double* y = node->value.data() + std::size_t(i) * co * ho * wo;
    if (stride == 1)
      active_kernels().conv_fwd(xpads[i].data(), ci, hp, wp,
                                kernel.values().data(), bias.values().data(),
                                co, kh, kw, y, ho, wo);
    else
      conv_fwd_strided(xpads[i].data(), ci, hp, wp, kernel.values().data(),
                       bias.values().data(), co, kh, kw, stride, y, ho, wo);
  }

  Node* self = node.get();
  Node* xn = x.node().get();
  Node* wn = kernel.node().get();
  Node* bn = bias.node().get();
  node->backprop = [self, xn, wn, bn, n, ci, h, w, co, kh, kw, ho, wo, stride,
                    padding, hp, wp, xpads = std::move(xpads)]() {
    const auto& k = active_kernels();
    for (int i = 0; i < n; ++i) {
      const double* gy = self->grad.data() + std::size_t(i) * co * ho * wo;
      if (bn->needs_grad) {
        for (int oc = 0; oc < co; ++oc) {
          double s = 0.0;
          const double* gc = gy + std::size_t(oc) * ho * wo;
          for (int j = 0; j < ho * wo; ++j) s += gc[j];
          bn->grad[oc] += s;
        }
      }
      if (wn->needs_grad) {
        std::vector<double> gw(wn->numel());
        if (stride == 1) {
          k.conv_wgrad(xpads[i].data(), ci, hp, wp, gy, co, ho, wo, kh, kw,
                       gw.data());
        } else {
          std::fill(gw.begin(), gw.end(), 0.0);
          for (int oc = 0; oc < co; ++oc)
            for (int ic = 0; ic < ci; ++ic)
              for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                  double s = 0.0;
                  for (int oy = 0; oy < ho; ++oy)
                    for (int ox = 0; ox < wo; ++ox)
                      s += gy[(std::size_t(oc) * ho + oy) * wo + ox] *
                           xpads[i][(std::size_t(ic) * hp + oy * stride + ky) *
                                        wp + ox * stride + kx];
                  gw[((std::size_t(oc) * ci + ic) * kh + ky) * kw + kx] = s;
                }
        }
        k.axpy(1.0, gw.data(), wn->grad.data(), gw.size());
      }
      if (xn->needs_grad) {
        double* gx = xn->grad.data() + std::size_t(i) * ci * h * w;
        if (stride == 1 && padding <= kh - 1 && padding <= kw - 1) {
          // Input gradient as a stride-1 convolution of the padded output
          // gradient with the channel-transposed, 180-degree-rotated kernel.
          const int py = kh - 1 - padding, px = kw - 1 - padding;
          const int ghp = ho + 2 * py, gwp = wo + 2 * px;
          std::vector<double> gypad(std::size_t(co) * ghp * gwp, 0.0);
          for (int oc = 0; oc < co; ++oc)
            for (int oy = 0; oy < ho; ++oy)
              std::memcpy(&gypad[(std::size_t(oc) * ghp + oy + py) * gwp + px],
                          &gy[(std::size_t(oc) * ho + oy) * wo],
                          sizeof(double) * wo);
          std::vector<double> wflip(wn->numel());
          const double* wv = wn->value.data();
          for (int ic = 0; ic < ci; ++ic)
            for (int oc = 0; oc < co; ++oc)
              for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx)
                  wflip[((std::size_t(ic) * co + oc) * kh + ky) * kw + kx] =
                      wv[((std::size_t(oc) * ci + ic) * kh + kh - 1 - ky) * kw +
                         kw - 1 - kx];
          std::vector<double> gx_tmp(std::size_t(ci) * h * w);
          k.conv_fwd(gypad.data(), co, ghp, gwp, wflip.data(), nullptr, ci, kh,
                     kw, gx_tmp.data(), h, w);
          k.axpy(1.0, gx_tmp.data(), gx, gx_tmp.size());
        } else {
          const double* wv = wn->value.data();
          for (int oc = 0; oc < co; ++oc)
            for (int oy = 0; oy < ho; ++oy)
              for (int ox = 0; ox < wo; ++ox) {
                const double g = gy[(std::size_t(oc) * ho + oy) * wo + ox];
                for (int ic = 0; ic < ci; ++ic)
                  for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                      const int iy = oy * stride + ky - padding;
                      const int ix = ox * stride + kx - padding;
                      if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                      gx[(std::size_t(ic) * h + iy) * w + ix] +=
                          g * wv[((std::size_t(oc) * ci + ic) * kh + ky) * kw + kx];
                    }
              }
        }
      }
    }
  };
  return Tensor::wrap(std::move(node));
}

Tensor maxpool2(const Tensor& x) {
  expect_nchw(x, "maxpool2");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0)
    throw DimensionError("maxpool2: spatial axes must be even, got " +
                         shape_str(x.shape()));
  const int ho = h / 2, wo = w / 2;
  auto node = make_node("maxpool2", {n, c, ho, wo}, {x.node()});
  std::vector<int> arg(node->numel());
  const double* xv = x.values().data();
  for (int p = 0; p < n * c; ++p) {
    const double* plane = xv + std::size_t(p) * h * w;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        int best = (2 * oy) * w + 2 * ox;
        double bv = plane[best];
        const int cand[3] = {(2 * oy) * w + 2 * ox + 1, (2 * oy + 1) * w + 2 * ox,
                             (2 * oy + 1) * w + 2 * ox + 1};
        for (int j : cand)
          if (plane[j] > bv) {
            bv = plane[j];
            best = j;
          }
        const std::size_t oi = (std::size_t(p) * ho + oy) * wo + ox;
        node->value[oi] = bv;
        arg[oi] = p * h * w + best;
      }
  }
  Node* self = node.get();
  Node* xn = x.node().get();
  node->backprop = [self, xn, arg = std::move(arg)]() {
    if (!xn->needs_grad) return;
    for (std::size_t i = 0; i < self->grad.size(); ++i)
      xn->grad[std::size_t(arg[i])] += self->grad[i];
  };
  return Tensor::wrap(std::move(node));
}

Tensor upsample2(const Tensor& x, Interp mode) {
  expect_nchw(x, "upsample2");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = 2 * h, wo = 2 * w;
  auto node = make_node("upsample2", {n, c, ho, wo}, {x.node()});
  const double* xv = x.values().data();

  if (mode == Interp::Nearest) {
    for (int p = 0; p < n * c; ++p)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox)
          node->value[(std::size_t(p) * ho + oy) * wo + ox] =
              xv[(std::size_t(p) * h + oy / 2) * w + ox / 2];
    Node* self = node.get();
    Node* xn = x.node().get();
    node->backprop = [self, xn, n, c, h, w, ho, wo]() {
      if (!xn->needs_grad) return;
      for (int p = 0; p < n * c; ++p)
        for (int oy = 0; oy < ho; ++oy)
          for (int ox = 0; ox < wo; ++ox)
            xn->grad[(std::size_t(p) * h + oy / 2) * w + ox / 2] +=
                self->grad[(std::size_t(p) * ho + oy) * wo + ox];
    };
    return Tensor::wrap(std::move(node));
  }

  // Bilinear, align-corners false: src = (dst + 0.5) / 2 - 0.5, borders
  // clamped. Separable index/weight tables shared by forward and backward.
  auto table = [](int out, int in) {
    std::vector<int> i0(out), i1(out);
    std::vector<double> f(out);
    for (int o = 0; o < out; ++o) {
      const double src = (o + 0.5) / 2.0 - 0.5;
      const double fl = std::floor(src);
      int a = int(fl);
      double frac = src - fl;
      int b = a + 1;
      a = std::clamp(a, 0, in - 1);
      b = std::clamp(b, 0, in - 1);
      i0[o] = a;
      i1[o] = b;
      f[o] = frac;
    }
    return std::tuple{i0, i1, f};
  };
  auto [y0, y1, fy] = table(ho, h);
  auto [x0, x1, fx] = table(wo, w);
  for (int p = 0; p < n * c; ++p) {
    const double* plane = xv + std::size_t(p) * h * w;
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        const double v00 = plane[y0[oy] * w + x0[ox]];
        const double v01 = plane[y0[oy] * w + x1[ox]];
        const double v10 = plane[y1[oy] * w + x0[ox]];
        const double v11 = plane[y1[oy] * w + x1[ox]];
        const double top = v00 * (1.0 - fx[ox]) + v01 * fx[ox];
        const double bot = v10 * (1.0 - fx[ox]) + v11 * fx[ox];
        node->value[(std::size_t(p) * ho + oy) * wo + ox] =
            top * (1.0 - fy[oy]) + bot * fy[oy];
      }
  }
  Node* self = node.get();
  Node* xn = x.node().get();
  node->backprop = [self, xn, n, c, h, w, ho, wo, y0 = y0, y1 = y1, fy = fy,
                    x0 = x0, x1 = x1, fx = fx]() {
    if (!xn->needs_grad) return;
    for (int p = 0; p < n * c; ++p) {
      double* gplane = xn->grad.data() + std::size_t(p) * h * w;
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          const double g = self->grad[(std::size_t(p) * ho + oy) * wo + ox];
          gplane[y0[oy] * w + x0[ox]] += g * (1.0 - fy[oy]) * (1.0 - fx[ox]);
          gplane[y0[oy] * w + x1[ox]] += g * (1.0 - fy[oy]) * fx[ox];
          gplane[y1[oy] * w + x0[ox]] += g * fy[oy] * (1.0 - fx[ox]);
          gplane[y1[oy] * w + x1[ox]] += g * fy[oy] * fx[ox];
        }
    }
  };
  return Tensor::wrap(std::move(node));
}

Tensor activation(const Tensor& x, Act kind) {
  auto node = make_node(kind == Act::Relu ? "relu" : "sigmoid", x.shape(),
                        {x.node()});
  const double* xv = x.values().data();
  const std::size_t n = node->numel();
  if (kind == Act::Relu) {
    for (std::size_t i = 0; i < n; ++i)
      node->value[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < n; ++i)
      node->value[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  }
  Node* self = node.get();
  Node* xn = x.node().get();
  node->backprop = [self, xn, kind]() {
    if (!xn->needs_grad) return;
    const std::size_t n = self->numel();
    if (kind == Act::Relu) {
      for (std::size_t i = 0; i < n; ++i)
        if (xn->value[i] > 0.0) xn->grad[i] += self->grad[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double y = self->value[i];
        xn->grad[i] += self->grad[i] * y * (1.0 - y);
      }
    }
  };
  return Tensor::wrap(std::move(node));
}

Tensor relu(const Tensor& x) { return activation(x, Act::Relu); }
Tensor sigmoid(const Tensor& x) { return activation(x, Act::Sigmoid); }

namespace {
void expect_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  expect_same_shape(a, b, "add");
  auto node = make_node("add", a.shape(), {a.node(), b.node()});
  active_kernels().add(a.values().data(), b.values().data(),
                       node->value.data(), node->numel());
  Node* self = node.get();
  Node* an = a.node().get();
  Node* bn = b.node().get();
  node->backprop = [self, an, bn]() {
    const auto& k = active_kernels();
    if (an->needs_grad) k.axpy(1.0, self->grad.data(), an->grad.data(), self->numel());
    if (bn->needs_grad) k.axpy(1.0, self->grad.data(), bn->grad.data(), self->numel());
  };
  return Tensor::wrap(std::move(node));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  expect_same_shape(a, b, "mul");
  auto node = make_node("mul", a.shape(), {a.node(), b.node()});
  active_kernels().mul(a.values().data(), b.values().data(),
                       node->value.data(), node->numel());
  Node* self = node.get();
  Node* an = a.node().get();
  Node* bn = b.node().get();
  node->backprop = [self, an, bn]() {
    const std::size_t n = self->numel();
    if (an->needs_grad)
      for (std::size_t i = 0; i < n; ++i)
        an->grad[i] += self->grad[i] * bn->value[i];
    if (bn->needs_grad)
      for (std::size_t i = 0; i < n; ++i)
        bn->grad[i] += self->grad[i] * an->value[i];
  };
  return Tensor::wrap(std::move(node));
}

Tensor elementwise(Elem kind, const Tensor& a, const Tensor& b) {
  return kind == Elem::Add ? add(a, b) : mul(a, b);
}

Tensor mul_broadcast_channel(const Tensor& x, const Tensor& att) {
  expect_nchw(x, "mul_broadcast_channel");
  expect_nchw(att, "mul_broadcast_channel");
  if (att.dim(1) != 1 || att.dim(0) != x.dim(0) || att.dim(2) != x.dim(2) ||
      att.dim(3) != x.dim(3))
    throw DimensionError("mul_broadcast_channel: attention " +
                         shape_str(att.shape()) + " not broadcastable to " +
                         shape_str(x.shape()));
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t plane = std::size_t(h) * w;
  auto node = make_node("mul_bcast_c", x.shape(), {x.node(), att.node()});
  for (int i = 0; i < n; ++i) {
    const double* ap = att.values().data() + std::size_t(i) * plane;
    for (int ic = 0; ic < c; ++ic) {
      const std::size_t off = (std::size_t(i) * c + ic) * plane;
      active_kernels().mul(x.values().data() + off, ap,
                           node->value.data() + off, plane);
    }
  }
  Node* self = node.get();
  Node* xn = x.node().get();
  Node* an = att.node().get();
  node->backprop = [self, xn, an, n, c, plane]() {
    for (int i = 0; i < n; ++i) {
      const std::size_t aoff = std::size_t(i) * plane;
      for (int ic = 0; ic < c; ++ic) {
        const std::size_t off = (std::size_t(i) * c + ic) * plane;
        if (xn->needs_grad)
          for (std::size_t j = 0; j < plane; ++j)
            xn->grad[off + j] += self->grad[off + j] * an->value[aoff + j];
        if (an->needs_grad)
          for (std::size_t j = 0; j < plane; ++j)
            an->grad[aoff + j] += self->grad[off + j] * xn->value[off + j];
      }
    }
  };
  return Tensor::wrap(std::move(node));
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  expect_nchw(a, "concat_channels");
  expect_nchw(b, "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    throw DimensionError("concat_channels: spatial/batch mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1), h = a.dim(2),
            w = a.dim(3);
  const std::size_t plane = std::size_t(h) * w;
  auto node = make_node("concat_c", {n, ca + cb, h, w}, {a.node(), b.node()});
  for (int i = 0; i < n; ++i) {
    std::memcpy(node->value.data() + std::size_t(i) * (ca + cb) * plane,
                a.values().data() + std::size_t(i) * ca * plane,
                sizeof(double) * ca * plane);
    std::memcpy(node->value.data() + (std::size_t(i) * (ca + cb) + ca) * plane,
                b.values().data() + std::size_t(i) * cb * plane,
                sizeof(double) * cb * plane);
  }
  Node* self = node.get();
  Node* an = a.node().get();
  Node* bn = b.node().get();
  node->backprop = [self, an, bn, n, ca, cb, plane]() {
    for (int i = 0; i < n; ++i) {
      if (an->needs_grad) {
        const double* g = self->grad.data() + std::size_t(i) * (ca + cb) * plane;
        active_kernels().axpy(1.0, g,
                              an->grad.data() + std::size_t(i) * ca * plane,
                              std::size_t(ca) * plane);
      }
      if (bn->needs_grad) {
        const double* g =
            self->grad.data() + (std::size_t(i) * (ca + cb) + ca) * plane;
        active_kernels().axpy(1.0, g,
                              bn->grad.data() + std::size_t(i) * cb * plane,
                              std::size_t(cb) * plane);
      }
    }
  };
  return Tensor::wrap(std::move(node));
}

Tensor slice_channels(const Tensor& x, int c0, int c1) {
  expect_nchw(x, "slice_channels");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (c0 < 0 || c1 > c || c0 >= c1)
    throw DimensionError("slice_channels: bad channel range [" +
                         std::to_string(c0) + "," + std::to_string(c1) +
                         ") for " + shape_str(x.shape()));
  const int cs = c1 - c0;
  const std::size_t plane = std::size_t(h) * w;
  auto node = make_node("slice_c", {n, cs, h, w}, {x.node()});
  for (int i = 0; i < n; ++i)
    std::memcpy(node->value.data() + std::size_t(i) * cs * plane,
                x.values().data() + (std::size_t(i) * c + c0) * plane,
                sizeof(double) * cs * plane);
  Node* self = node.get();
  Node* xn = x.node().get();
  node->backprop = [self, xn, n, c, c0, cs, plane]() {
    if (!xn->needs_grad) return;
    for (int i = 0; i < n; ++i)
      active_kernels().axpy(1.0,
                            self->grad.data() + std::size_t(i) * cs * plane,
                            xn->grad.data() + (std::size_t(i) * c + c0) * plane,
                            std::size_t(cs) * plane);
  };
  return Tensor::wrap(std::move(node));
}

Tensor softmax_channel(const Tensor& x) {
  expect_nchw(x, "softmax_channel");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (c < 2)
    throw DimensionError("softmax_channel: needs >= 2 channels, got " +
                         shape_str(x.shape()));
  const std::size_t plane = std::size_t(h) * w;
  auto node = make_node("softmax_c", x.shape(), {x.node()});
  const double* xv = x.values().data();
  for (int i = 0; i < n; ++i)
    for (std::size_t j = 0; j < plane; ++j) {
      const std::size_t base = std::size_t(i) * c * plane + j;
      double m = xv[base];
      for (int ic = 1; ic < c; ++ic)
        m = std::max(m, xv[base + std::size_t(ic) * plane]);
      double s = 0.0;
      for (int ic = 0; ic < c; ++ic) {
        const double e = std::exp(xv[base + std::size_t(ic) * plane] - m);
        node->value[base + std::size_t(ic) * plane] = e;
        s += e;
      }
      for (int ic = 0; ic < c; ++ic)
        node->value[base + std::size_t(ic) * plane] /= s;
    }
  Node* self = node.get();
  Node* xn = x.node().get();
  node->backprop = [self, xn, n, c, plane]() {
    if (!xn->needs_grad) return;
    for (int i = 0; i < n; ++i)
      for (std::size_t j = 0; j < plane; ++j) {
        const std::size_t base = std::size_t(i) * c * plane + j;
        double dot = 0.0;
        for (int ic = 0; ic < c; ++ic) {
          const std::size_t idx = base + std::size_t(ic) * plane;
          dot += self->grad[idx] * self->value[idx];
        }
        for (int ic = 0; ic < c; ++ic) {
          const std::size_t idx = base + std::size_t(ic) * plane;
          xn->grad[idx] += self->value[idx] * (self->grad[idx] - dot);
        }
      }
  };
  return Tensor::wrap(std::move(node));
}

Tensor sum_all(const Tensor& x) {
  auto node = make_node("sum", {1}, {x.node()});
  double s = 0.0;
  for (double v : x.values()) s += v;
  node->value[0] = s;
  Node* self = node.get();
  Node* xn = x.node().get();
  node->backprop = [self, xn]() {
    if (!xn->needs_grad) return;
    const double g = self->grad[0];
    for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += g;
  };
  return Tensor::wrap(std::move(node));
}

Tensor scale(const Tensor& x, double cfac) {
  auto node = make_node("scale", x.shape(), {x.node()});
  for (std::size_t i = 0; i < node->numel(); ++i)
    node->value[i] = cfac * x.values()[i];
  Node* self = node.get();
  Node* xn = x.node().get();
  node->backprop = [self, xn, cfac]() {
    if (!xn->needs_grad) return;
    active_kernels().axpy(cfac, self->grad.data(), xn->grad.data(),
                          self->numel());
  };
  return Tensor::wrap(std::move(node));
}

}  // namespace tpseg::ad

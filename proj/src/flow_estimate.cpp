#include <algorithm>
#include <cmath>

#include "tpseg/flow.hpp"

namespace tpseg::flow {
namespace {

// Single-channel working image for the pyramid.
struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int w_, int h_) : w(w_), h(h_), v(std::size_t(w_) * h_, 0.0) {}
  double at(int y, int x) const { return v[std::size_t(y) * w + x]; }
  double& at(int y, int x) { return v[std::size_t(y) * w + x]; }
};

Plane to_gray(const img::Frame& f) {
  Plane p(f.width, f.height);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < f.channels; ++c) s += f.at(c, y, x);
      p.at(y, x) = s / f.channels;
    }
  return p;
}

Plane downsample2(const Plane& in) {
  const int w = std::max(1, in.w / 2), h = std::max(1, in.h / 2);
  Plane out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int x0 = 2 * x, y0 = 2 * y;
      const int x1 = std::min(x0 + 1, in.w - 1), y1 = std::min(y0 + 1, in.h - 1);
      out.at(y, x) =
          0.25 * (in.at(y0, x0) + in.at(y0, x1) + in.at(y1, x0) + in.at(y1, x1));
    }
  return out;
}

double sample_clamped(const Plane& p, double x, double y) {
  x = std::clamp(x, 0.0, double(p.w - 1));
  y = std::clamp(y, 0.0, double(p.h - 1));
  const int x0 = int(x), y0 = int(y);
  const int x1 = std::min(x0 + 1, p.w - 1), y1 = std::min(y0 + 1, p.h - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = p.at(y0, x0) * (1 - fx) + p.at(y0, x1) * fx;
  const double bot = p.at(y1, x0) * (1 - fx) + p.at(y1, x1) * fx;
  return top * (1 - fy) + bot * fy;
}

// Bilinear x2 field upsample; vector magnitudes double with the grid.
void upsample_field(const Plane& in, Plane& out) {
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      out.at(y, x) =
          2.0 * sample_clamped(in, (x + 0.5) / 2.0 - 0.5, (y + 0.5) / 2.0 - 0.5);
}

inline double at_clamped(const Plane& p, int y, int x) {
  return p.at(std::clamp(y, 0, p.h - 1), std::clamp(x, 0, p.w - 1));
}

// One pyramid level: warp cur toward prev by the incoming flow, then relax
// the Horn-Schunck update on the residual displacement.
void hs_level(const Plane& prev, const Plane& cur, Plane& u, Plane& v,
              double lambda, int iterations) {
  const int w = prev.w, h = prev.h;
  Plane warped(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      warped.at(y, x) = sample_clamped(cur, x + u.at(y, x), y + v.at(y, x));

  Plane ix(w, h), iy(w, h), it(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      ix.at(y, x) = 0.25 * (at_clamped(prev, y, x + 1) - at_clamped(prev, y, x - 1) +
                            at_clamped(warped, y, x + 1) - at_clamped(warped, y, x - 1));
      iy.at(y, x) = 0.25 * (at_clamped(prev, y + 1, x) - at_clamped(prev, y - 1, x) +
                            at_clamped(warped, y + 1, x) - at_clamped(warped, y - 1, x));
      it.at(y, x) = warped.at(y, x) - prev.at(y, x);
    }

  Plane du(w, h), dv(w, h), du2(w, h), dv2(w, h);
  for (int iter = 0; iter < iterations; ++iter) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double ub = 0.25 * (at_clamped(du, y, x - 1) + at_clamped(du, y, x + 1) +
                                  at_clamped(du, y - 1, x) + at_clamped(du, y + 1, x));
        const double vb = 0.25 * (at_clamped(dv, y, x - 1) + at_clamped(dv, y, x + 1) +
                                  at_clamped(dv, y - 1, x) + at_clamped(dv, y + 1, x));
        const double gx = ix.at(y, x), gy = iy.at(y, x);
        const double r =
            (gx * ub + gy * vb + it.at(y, x)) / (lambda + gx * gx + gy * gy);
        du2.at(y, x) = ub - gx * r;
        dv2.at(y, x) = vb - gy * r;
      }
    std::swap(du, du2);
    std::swap(dv, dv2);
  }
  for (std::size_t i = 0; i < u.v.size(); ++i) {
    u.v[i] += du.v[i];
    v.v[i] += dv.v[i];
  }
}

}  // namespace

FlowField estimate_flow(const img::Frame& prev, const img::Frame& cur,
                        const FlowConfig& cfg) {
  if (prev.width != cur.width || prev.height != cur.height)
    throw DimensionError("estimate_flow: frame dimension mismatch " +
                         std::to_string(prev.width) + "x" +
                         std::to_string(prev.height) + " vs " +
                         std::to_string(cur.width) + "x" +
                         std::to_string(cur.height));
  if (cfg.lambda <= 0.0)
    throw DataError("estimate_flow: smoothness weight must be positive");
  if (cfg.levels < 1) throw DataError("estimate_flow: pyramid levels must be >= 1");

  std::vector<Plane> p1{to_gray(prev)}, p2{to_gray(cur)};
  int levels = cfg.levels;
  // Cap the depth so the coarsest level keeps enough support for gradients.
  while (int(p1.size()) < levels &&
         std::min(p1.back().w, p1.back().h) >= 16) {
    p1.push_back(downsample2(p1.back()));
    p2.push_back(downsample2(p2.back()));
  }
  levels = int(p1.size());

  Plane u(p1.back().w, p1.back().h), v(p1.back().w, p1.back().h);
  for (int l = levels - 1; l >= 0; --l) {
    if (l != levels - 1) {
      Plane u2(p1[l].w, p1[l].h), v2(p1[l].w, p1[l].h);
      upsample_field(u, u2);
      upsample_field(v, v2);
      u = std::move(u2);
      v = std::move(v2);
    }
    hs_level(p1[l], p2[l], u, v, cfg.lambda, cfg.iterations);
  }

  FlowField f(prev.width, prev.height);
  f.dx = std::move(u.v);
  f.dy = std::move(v.v);
  return f;
}

}  // namespace tpseg::flow

#include "tpseg/propagate.hpp"

#include <algorithm>
#include <cmath>

namespace tpseg::flow {

void scatter_max_plane(const double* src, int width, int height,
                       const FlowField& f, double* out, int* winner) {
  std::fill(out, out + std::size_t(width) * height, 0.0);
  if (winner)
    std::fill(winner, winner + std::size_t(width) * height, -1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = std::size_t(y) * width + x;
      const long tx = std::lround(x + f.dx[i]);
      const long ty = std::lround(y + f.dy[i]);
      if (tx < 0 || tx >= width || ty < 0 || ty >= height) continue;
      const std::size_t t = std::size_t(ty) * width + tx;
      const bool unclaimed = winner ? winner[t] < 0 : out[t] == 0.0;
      if ((unclaimed && src[i] >= out[t]) || src[i] > out[t]) {
        out[t] = src[i];
        if (winner) winner[t] = int(i);
      }
    }
}

PriorMap apply_flow(const PriorMap& source, const FlowField& f) {
  if (source.width != f.width || source.height != f.height)
    throw DimensionError("apply_flow: map " + std::to_string(source.width) +
                         "x" + std::to_string(source.height) +
                         " vs flow " + std::to_string(f.width) + "x" +
                         std::to_string(f.height));
  PriorMap out(source.width, source.height);
  scatter_max_plane(source.p.data(), source.width, source.height, f,
                    out.p.data(), nullptr);
  return out;
}

PriorMap dilate(const PriorMap& mask, int radius) {
  if (radius < 0) throw DataError("dilate: negative radius");
  if (radius == 0) return mask;
  const int w = mask.width, h = mask.height;
  // Square window is separable: max over rows, then over columns.
  PriorMap tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double m = 0.0;
      const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
      for (int k = x0; k <= x1; ++k) m = std::max(m, mask.at(y, k));
      tmp.at(y, x) = m;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double m = 0.0;
      const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
      for (int k = y0; k <= y1; ++k) m = std::max(m, tmp.at(k, x));
      out.at(y, x) = m;
    }
  return out;
}

PriorMap collapse_foreground(const std::vector<double>& probs, int classes,
                             int height, int width) {
  if (classes < 2)
    throw DimensionError("collapse_foreground: need >= 2 classes, got " +
                         std::to_string(classes));
  if (probs.size() != std::size_t(classes) * height * width)
    throw DimensionError("collapse_foreground: value count mismatch");
  PriorMap out(width, height);
  const std::size_t plane = std::size_t(height) * width;
  for (std::size_t i = 0; i < plane; ++i)
    out.p[i] = std::clamp(1.0 - probs[i], 0.0, 1.0);
  return out;
}

PriorMap collapse_foreground(const ad::Tensor& probs) {
  if (probs.ndim() != 4 || probs.dim(0) != 1)
    throw DimensionError("collapse_foreground: expected [1,C,H,W], got " +
                         ad::shape_str(probs.shape()));
  return collapse_foreground(probs.values(), probs.dim(1), probs.dim(2),
                             probs.dim(3));
}

PriorMap propagate_prior(const std::vector<double>& prev_probs, int classes,
                         const FlowField& f, int radius) {
  PriorMap fg = collapse_foreground(prev_probs, classes, f.height, f.width);
  return dilate(apply_flow(fg, f), radius);
}

PriorMap propagate_prior(const ad::Tensor& prev_probs, const FlowField& f,
                         int radius) {
  PriorMap fg = collapse_foreground(prev_probs);
  return dilate(apply_flow(fg, f), radius);
}

}  // namespace tpseg::flow

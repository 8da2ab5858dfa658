#pragma once

#include "tpseg/flow.hpp"
#include "tpseg/tensor.hpp"

namespace tpseg::flow {

// Single-channel probability map in [0,1]; the temporal prior carrier.
struct PriorMap {
  int width = 0;
  int height = 0;
  std::vector<double> p;

  PriorMap() = default;
  PriorMap(int w, int h) : width(w), height(h), p(std::size_t(w) * h, 0.0) {}

  double at(int y, int x) const { return p[std::size_t(y) * width + x]; }
  double& at(int y, int x) { return p[std::size_t(y) * width + x]; }
};

// Forward splat of one plane: src value at (x,y) deposits at
// (lround(x+dx), lround(y+dy)). Colliding deposits keep the maximum (ties:
// first source in row-major scan order); out-of-bounds deposits are dropped;
// unhit targets stay 0. When winner is non-null it receives the flat source
// index per target (-1 = unhit) so gradients can be routed to the winning
// source. Shared by the plain prior path and the autodiff warp node.
void scatter_max_plane(const double* src, int width, int height,
                       const FlowField& f, double* out, int* winner);

// Splat a prior along the flow (max-collision rule).
PriorMap apply_flow(const PriorMap& source, const FlowField& f);

// Grayscale dilation by a (2r+1)x(2r+1) square, border clipped.
PriorMap dilate(const PriorMap& mask, int radius);

// 1 - P(background): per-pixel foreground probability of a softmax output
// [1,C,H,W] with class 0 as background; clamped to [0,1].
PriorMap collapse_foreground(const ad::Tensor& probs);
PriorMap collapse_foreground(const std::vector<double>& probs, int classes,
                             int height, int width);

// collapse -> warp -> dilate; the temporal prior for the next frame.
PriorMap propagate_prior(const ad::Tensor& prev_probs, const FlowField& f,
                         int radius);
PriorMap propagate_prior(const std::vector<double>& prev_probs, int classes,
                         const FlowField& f, int radius);

}  // namespace tpseg::flow

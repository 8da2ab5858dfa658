#pragma once

#include <string>
#include <vector>

#include "tpseg/common.hpp"
#include "tpseg/image.hpp"

namespace tpseg::flow {

// Dense per-pixel displacement between a frame pair: (dx, dy) in pixels,
// mapping a position in the earlier frame to its position in the later one.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> dx;
  std::vector<double> dy;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w), height(h), dx(std::size_t(w) * h, 0.0),
        dy(std::size_t(w) * h, 0.0) {}

  std::size_t size() const { return dx.size(); }
};

struct FlowConfig {
  int levels = 3;        // coarse-to-fine pyramid depth
  double lambda = 0.1;   // smoothness weight
  int iterations = 100;  // relaxation sweeps per level
};

// Coarse-to-fine Horn-Schunck estimation. Pure function of its inputs; color
// frames are reduced to grayscale by channel mean.
FlowField estimate_flow(const img::Frame& prev, const img::Frame& cur,
                        const FlowConfig& cfg);

// Element-wise negation; involution.
FlowField reverse_flow(const FlowField& f);

// Middlebury .flo interchange: magic "PIEH", little-endian int32 width and
// height, then row-major interleaved (dx,dy) as little-endian float32.
// Round-trips are bit-exact at 32-bit precision.
FlowField read_flo(const std::string& path);
void write_flo(const FlowField& f, const std::string& path);

}  // namespace tpseg::flow

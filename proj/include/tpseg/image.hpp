#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tpseg/common.hpp"

namespace tpseg::img {

// Planar image, intensities in [0,1]. 1 channel = grayscale (PGM), 3 = color
// (PPM). Written/read as binary P5/P6 with maxval 255, mapped linearly.
struct Frame {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> v;  // [c][y][x]

  Frame() = default;
  Frame(int w, int h, int c = 1)
      : width(w), height(h), channels(c),
        v(std::size_t(c) * w * h, 0.0) {}

  double& at(int c, int y, int x) {
    return v[(std::size_t(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return v[(std::size_t(c) * height + y) * width + x];
  }
  const double* plane(int c) const {
    return v.data() + std::size_t(c) * height * width;
  }
};

// Per-pixel integer class ids; background is 0. Stored as PGM with the class
// id as the gray level.
struct LabelMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> ids;

  LabelMask() = default;
  LabelMask(int w, int h) : width(w), height(h), ids(std::size_t(w) * h, 0) {}

  uint8_t& at(int y, int x) { return ids[std::size_t(y) * width + x]; }
  uint8_t at(int y, int x) const { return ids[std::size_t(y) * width + x]; }
};

Frame read_pnm(const std::string& path);
void write_pnm(const Frame& f, const std::string& path);

LabelMask read_mask_pgm(const std::string& path);
void write_mask_pgm(const LabelMask& m, const std::string& path);

}  // namespace tpseg::img

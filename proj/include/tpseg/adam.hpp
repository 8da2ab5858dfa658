#pragma once

#include <cstdint>
#include <vector>

#include "tpseg/net.hpp"

namespace tpseg::train {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment buffers aligned index-for-index with NetParams::named.
struct AdamState {
  int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init_for(const net::NetParams& params);
  bool initialized() const { return !m.empty(); }
};

// One bias-corrected Adam update over every parameter that has a gradient.
// Parameters without a gradient this step keep untouched moments, so a
// zero-gradient parameter starting from fresh state never moves.
void adam_step(net::NetParams& params, AdamState& state, const AdamConfig& cfg);

}  // namespace tpseg::train

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "tpseg/ops.hpp"
#include "tpseg/propagate.hpp"

namespace tpseg::net {

// Prior injection tier: None = plain encoder-decoder (attention forced to
// zero), Raw = previous frame's prediction as-is, Flow = prediction propagated
// along the motion flow.
enum class PriorMode { None, Raw, Flow };

PriorMode prior_mode_from_string(const std::string& s);
std::string to_string(PriorMode m);

struct NetworkConfig {
  int in_channels = 1;
  int num_classes = 2;
  std::array<int, 5> stage_widths{8, 16, 32, 32, 32};
  PriorMode prior_mode = PriorMode::Flow;
  ad::Interp upsample = ad::Interp::Bilinear;

  void validate() const;
};

// Parameters as an ordered list of named tensors. Order is fixed by
// construction and shared with the optimizer state and the checkpoint format.
struct NetParams {
  std::vector<std::pair<std::string, ad::Tensor>> named;

  ad::Tensor& at(const std::string& name);
  const ad::Tensor& at(const std::string& name) const;
  void zero_grads();
};

// He fan-in initialization for all convolutions, zero biases, deterministic
// per seed.
NetParams init_params(const NetworkConfig& cfg, uint64_t seed);

// Five encoder features, feature i at H/2^(i+1) per side (post-pool).
std::vector<ad::Tensor> encode(const NetworkConfig& cfg, const NetParams& params,
                               const ad::Tensor& frame);

// One attention-guided decoder stage: f = conv1x1(concat(f_low, f_high));
// o = f + a_in (x) f; a_out = sigmoid(conv3x3(o)), single channel. Caller
// upsamples o and a_out before the next (finer) stage. With a_in undefined
// the stage degenerates to the plain fused feature and a_out is undefined.
std::pair<ad::Tensor, ad::Tensor> ag_module(const ad::Tensor& f_low,
                                            const ad::Tensor& f_high,
                                            const ad::Tensor& a_in,
                                            const ad::Tensor& merge_w,
                                            const ad::Tensor& merge_b,
                                            const ad::Tensor& att_w,
                                            const ad::Tensor& att_b);

struct ForwardResult {
  ad::Tensor logits;  // [1,C,H,W]
  // Attention map consumed by each decoder stage, coarse to fine:
  // attention[0] is the downsampled prior at the bottleneck, attention[4]
  // drives the finest stage. All single-channel at their stage resolution.
  std::array<ad::Tensor, 5> attention;
  // Stage outputs o, coarse to fine, before upsampling (for inspection).
  std::array<ad::Tensor, 5> stage_outputs;
};

// Full pass. prior must be non-null (frame-sized) unless prior_mode is None.
ForwardResult forward(const NetworkConfig& cfg, const NetParams& params,
                      const ad::Tensor& frame, const flow::PriorMap* prior);

}  // namespace tpseg::net

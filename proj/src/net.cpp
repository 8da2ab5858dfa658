#include "tpseg/net.hpp"

#include <cmath>

namespace tpseg::net {

using ad::Tensor;

PriorMode prior_mode_from_string(const std::string& s) {
  if (s == "none") return PriorMode::None;
  if (s == "raw") return PriorMode::Raw;
  if (s == "flow") return PriorMode::Flow;
  throw UsageError("unknown prior_mode: " + s);
}

std::string to_string(PriorMode m) {
  switch (m) {
    case PriorMode::None: return "none";
    case PriorMode::Raw: return "raw";
    case PriorMode::Flow: return "flow";
  }
  return "?";
}

void NetworkConfig::validate() const {
  if (in_channels != 1 && in_channels != 3)
    throw UsageError("in_channels must be 1 or 3");
  if (num_classes < 2) throw UsageError("num_classes must be >= 2");
  for (int w : stage_widths)
    if (w <= 0) throw UsageError("stage widths must be positive");
}

Tensor& NetParams::at(const std::string& name) {
  for (auto& [n, t] : named)
    if (n == name) return t;
  throw DataError("unknown parameter " + name);
}

const Tensor& NetParams::at(const std::string& name) const {
  for (auto& [n, t] : named)
    if (n == name) return t;
  throw DataError("unknown parameter " + name);
}

void NetParams::zero_grads() {
  for (auto& [n, t] : named) t.zero_grad();
}

namespace {

// Decoder widths mirror the encoder from the bottleneck outward.
std::array<int, 5> decoder_widths(const NetworkConfig& cfg) {
  return {cfg.stage_widths[4], cfg.stage_widths[3], cfg.stage_widths[2],
          cfg.stage_widths[1], cfg.stage_widths[0]};
}

void add_conv(NetParams& p, Rng& rng, const std::string& name, int co, int ci,
              int k) {
  const double stddev = std::sqrt(2.0 / (double(ci) * k * k));
  std::vector<double> w(std::size_t(co) * ci * k * k);
  for (auto& v : w) v = stddev * rng.normal();
  p.named.emplace_back(name + ".w",
                       Tensor::leaf({co, ci, k, k}, std::move(w), true));
  p.named.emplace_back(name + ".b", Tensor::zeros({co}, true));
}

// Block-average a frame-resolution prior down to the bottleneck grid.
Tensor prior_to_bottleneck(const flow::PriorMap& prior, int factor) {
  const int hw = prior.width / factor, hh = prior.height / factor;
  std::vector<double> v(std::size_t(hw) * hh, 0.0);
  for (int y = 0; y < prior.height; ++y)
    for (int x = 0; x < prior.width; ++x)
      v[std::size_t(y / factor) * hw + x / factor] += prior.at(y, x);
  const double inv = 1.0 / (double(factor) * factor);
  for (auto& e : v) e *= inv;
  return Tensor::leaf({1, 1, hh, hw}, std::move(v), false);
}

}  // namespace

NetParams init_params(const NetworkConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  NetParams p;
  int ci = cfg.in_channels;
  for (int i = 0; i < 5; ++i) {
    add_conv(p, rng, "enc" + std::to_string(i + 1), cfg.stage_widths[i], ci, 3);
    ci = cfg.stage_widths[i];
  }
  add_conv(p, rng, "center", cfg.stage_widths[4], cfg.stage_widths[4], 3);

  const auto dw = decoder_widths(cfg);
  // Stage s consumes encoder feature 5-s and the upsampled previous output.
  int high = cfg.stage_widths[4];  // center width feeding AG5
  for (int s = 0; s < 5; ++s) {
    const int low = cfg.stage_widths[4 - s];
    const std::string name = "ag" + std::to_string(5 - s);
    add_conv(p, rng, name + ".merge", dw[s], low + high, 1);
    add_conv(p, rng, name + ".att", 1, dw[s], 3);
    high = dw[s];
  }
  add_conv(p, rng, "head", cfg.num_classes, dw[4], 3);
  return p;
}

std::vector<Tensor> encode(const NetworkConfig& cfg, const NetParams& params,
                           const Tensor& frame) {
  if (frame.ndim() != 4 || frame.dim(0) != 1 || frame.dim(1) != cfg.in_channels)
    throw DimensionError("encode: expected [1," +
                         std::to_string(cfg.in_channels) + ",H,W], got " +
                         ad::shape_str(frame.shape()));
  if (frame.dim(2) % 32 != 0 || frame.dim(3) % 32 != 0)
    throw DimensionError("encode: spatial axes must be divisible by 32, got " +
                         ad::shape_str(frame.shape()));
  std::vector<Tensor> feats;
  Tensor x = frame;
  for (int i = 0; i < 5; ++i) {
    const std::string name = "enc" + std::to_string(i + 1);
    x = ad::relu(ad::conv2d(x, params.at(name + ".w"), params.at(name + ".b"),
                            1, 1));
    x = ad::maxpool2(x);
    feats.push_back(x);
  }
  return feats;
}

std::pair<Tensor, Tensor> ag_module(const Tensor& f_low, const Tensor& f_high,
                                    const Tensor& a_in, const Tensor& merge_w,
                                    const Tensor& merge_b, const Tensor& att_w,
                                    const Tensor& att_b) {
  Tensor f = ad::conv2d(ad::concat_channels(f_low, f_high), merge_w, merge_b,
                        1, 0);
  if (!a_in.defined()) return {f, Tensor()};
  Tensor o = ad::add(f, ad::mul_broadcast_channel(f, a_in));
  Tensor a_out = ad::sigmoid(ad::conv2d(o, att_w, att_b, 1, 1));
  return {o, a_out};
}

ForwardResult forward(const NetworkConfig& cfg, const NetParams& params,
                      const Tensor& frame, const flow::PriorMap* prior) {
  const bool plain = cfg.prior_mode == PriorMode::None;
  if (!plain) {
    if (!prior)
      throw DataError("forward: prior required for prior_mode=" +
                      to_string(cfg.prior_mode));
    if (prior->width != frame.dim(3) || prior->height != frame.dim(2))
      throw DimensionError("forward: prior dims " +
                           std::to_string(prior->width) + "x" +
                           std::to_string(prior->height) +
                           " do not match frame " +
                           ad::shape_str(frame.shape()));
  }

  auto feats = encode(cfg, params, frame);
  Tensor center = ad::relu(ad::conv2d(feats[4], params.at("center.w"),
                                      params.at("center.b"), 1, 1));

  ForwardResult res;
  Tensor a;  // attention entering the current stage; undefined when plain
  if (!plain) a = prior_to_bottleneck(*prior, 32);

  Tensor high = center;
  for (int s = 0; s < 5; ++s) {
    const std::string name = "ag" + std::to_string(5 - s);
    if (!plain) res.attention[s] = a;
    auto [o, a_next] = ag_module(feats[4 - s], high, a, params.at(name + ".merge.w"),
                                 params.at(name + ".merge.b"),
                                 params.at(name + ".att.w"),
                                 params.at(name + ".att.b"));
    res.stage_outputs[s] = o;
    if (s < 4) {
      high = ad::upsample2(o, cfg.upsample);
      if (!plain) a = ad::upsample2(a_next, cfg.upsample);
    } else {
      high = o;
    }
  }
  if (plain) {
    for (int s = 0; s < 5; ++s)
      res.attention[s] = Tensor::zeros(
          {1, 1, res.stage_outputs[s].dim(2), res.stage_outputs[s].dim(3)});
  }

  Tensor up = ad::upsample2(high, cfg.upsample);
  res.logits = ad::conv2d(up, params.at("head.w"), params.at("head.b"), 1, 1);
  return res;
}

}  // namespace tpseg::net

#include "tpseg/train.hpp"

#include <algorithm>
#include <cmath>

namespace tpseg::train {

using ad::Tensor;

std::vector<double> auto_class_weights(const std::vector<data::SequenceData>& seqs,
                                       int num_classes) {
  std::vector<int64_t> counts(std::size_t(num_classes), 0);
  int64_t total = 0;
  for (const auto& s : seqs)
    for (std::size_t t = 0; t < s.masks.size(); ++t) {
      if (!s.labeled[t]) continue;
      for (uint8_t id : s.masks[t].ids) {
        if (id >= num_classes)
          throw DataError("label id out of range while computing class weights");
        ++counts[id];
        ++total;
      }
    }
  if (total == 0) throw DataError("no labeled pixels to derive class weights");
  // Laplace smoothing keeps absent classes finite.
  std::vector<double> w(std::size_t(num_classes));
  for (int c = 0; c < num_classes; ++c)
    w[std::size_t(c)] = double(total + num_classes) / double(counts[std::size_t(c)] + 1);
  double mean = 0.0;
  for (double x : w) mean += x;
  mean /= double(num_classes);
  for (double& x : w) x /= mean;
  return w;
}

std::vector<double> softmax_values(const std::vector<double>& logits, int classes,
                                   int height, int width) {
  const std::size_t plane = std::size_t(height) * width;
  if (logits.size() != plane * std::size_t(classes))
    throw DimensionError("softmax_values: size mismatch");
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < plane; ++i) {
    double m = logits[i];
    for (int c = 1; c < classes; ++c)
      m = std::max(m, logits[std::size_t(c) * plane + i]);
    double s = 0.0;
    for (int c = 0; c < classes; ++c) {
      const double e = std::exp(logits[std::size_t(c) * plane + i] - m);
      out[std::size_t(c) * plane + i] = e;
      s += e;
    }
    for (int c = 0; c < classes; ++c) out[std::size_t(c) * plane + i] /= s;
  }
  return out;
}

img::LabelMask argmax_mask(const Tensor& logits) {
  const int c = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
  const std::size_t plane = std::size_t(h) * w;
  img::LabelMask m(w, h);
  const double* z = logits.values().data();
  for (std::size_t i = 0; i < plane; ++i) {
    int best = 0;
    double bv = z[i];
    for (int ic = 1; ic < c; ++ic)
      if (z[std::size_t(ic) * plane + i] > bv) {
        bv = z[std::size_t(ic) * plane + i];
        best = ic;
      }
    m.ids[i] = uint8_t(best);
  }
  return m;
}

flow::PriorMap make_prior(net::PriorMode mode, const std::vector<double>* prev_probs,
                          int classes, int height, int width,
                          const flow::FlowField* flow_to_here, int radius) {
  if (mode == net::PriorMode::None || !prev_probs)
    return flow::PriorMap(width, height);  // zero prior for the first frame
  if (mode == net::PriorMode::Raw)
    return flow::collapse_foreground(*prev_probs, classes, height, width);
  if (!flow_to_here)
    throw DataError("flow prior requested without a flow field");
  return flow::propagate_prior(*prev_probs, classes, *flow_to_here, radius);
}

namespace {

struct FrameStep {
  Tensor logits;
  net::ForwardResult fwd;
};

net::ForwardResult forward_frame(const data::SequenceData& seq, int t,
                                 const net::NetworkConfig& cfg,
                                 const net::NetParams& params,
                                 const std::vector<double>* prev_probs,
                                 int dilation_radius) {
  const img::Frame& fr = seq.frames[std::size_t(t)];
  if (fr.channels != cfg.in_channels)
    throw DataError("sequence " + seq.name + " frame channels " +
                    std::to_string(fr.channels) + " do not match network");
  Tensor x = Tensor::leaf({1, fr.channels, fr.height, fr.width}, fr.v, false);
  const flow::FlowField* fl =
      (t > 0 && seq.has_flows) ? &seq.flows[std::size_t(t)] : nullptr;
  if (cfg.prior_mode == net::PriorMode::Flow && t > 0 && !fl)
    throw DataError("sequence " + seq.name + " needs flows for the flow prior");
  flow::PriorMap prior =
      make_prior(cfg.prior_mode, t > 0 ? prev_probs : nullptr, cfg.num_classes,
                 fr.height, fr.width, fl, dilation_radius);
  return net::forward(cfg, params, x,
                      cfg.prior_mode == net::PriorMode::None ? nullptr : &prior);
}

}  // namespace

std::vector<StepLog> train_sequence(const data::SequenceData& seq,
                                    const net::NetworkConfig& cfg,
                                    net::NetParams& params, TrainState& state,
                                    const LossConfig& loss_cfg,
                                    const AdamConfig& adam_cfg,
                                    int dilation_radius) {
  if (seq.frames.empty()) throw DataError("empty sequence " + seq.name);
  if (!seq.labeled[0])
    throw DataError("sequence " + seq.name + ": first frame must be labeled");
  if (int(loss_cfg.alpha.size()) != cfg.num_classes)
    throw DataError("train_sequence: alpha size does not match classes");

  std::vector<StepLog> logs;
  std::vector<double> prev_probs;
  for (int t = 0; t < int(seq.frames.size()); ++t) {
    auto fwd = forward_frame(seq, t, cfg, params, &prev_probs, dilation_radius);

    const bool labeled = seq.labeled[std::size_t(t)] != 0;
    const bool prev_labeled = t > 0 && seq.labeled[std::size_t(t - 1)] != 0;
    Tensor loss;
    const char* kind = nullptr;
    if (labeled) {
      loss = weighted_ce(fwd.logits, seq.masks[std::size_t(t)], loss_cfg.alpha);
      kind = "sup";
    } else if (loss_cfg.semi && prev_labeled) {
      if (!seq.has_flows)
        throw DataError("sequence " + seq.name +
                        " needs flows for the consistency loss");
      auto sl = semi_loss(fwd.logits, seq.flows[std::size_t(t)],
                          seq.masks[std::size_t(t - 1)], loss_cfg.beta);
      if (!sl.degenerate) {
        loss = sl.loss;
        kind = "semi";
      }
    }

    if (loss.defined()) {
      check_finite(loss.values()[0], "training loss");
      ad::backward(loss);
      adam_step(params, state.adam, adam_cfg);
      params.zero_grads();
      ++state.step;
      logs.push_back({state.step, t, kind, loss.values()[0]});
    }

    // Circulate the (detached) prediction for the next frame's prior.
    const int h = seq.frames[std::size_t(t)].height;
    const int w = seq.frames[std::size_t(t)].width;
    prev_probs = softmax_values(fwd.logits.values(), cfg.num_classes, h, w);
  }
  return logs;
}

std::vector<StepLog> train_epoch(const std::vector<data::SequenceData>& seqs,
                                 const net::NetworkConfig& cfg,
                                 net::NetParams& params, TrainState& state,
                                 const LossConfig& loss_cfg,
                                 const AdamConfig& adam_cfg,
                                 int dilation_radius, int epoch_index) {
  std::vector<int> order(seqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  Rng rng(state.seed * 0x100000001b3ULL + uint64_t(epoch_index) + 1);
  for (int i = int(order.size()) - 1; i > 0; --i)
    std::swap(order[std::size_t(i)], order[std::size_t(rng.uniform_int(0, i))]);

  std::vector<StepLog> logs;
  for (int idx : order) {
    auto part = train_sequence(seqs[std::size_t(idx)], cfg, params, state,
                               loss_cfg, adam_cfg, dilation_radius);
    logs.insert(logs.end(), part.begin(), part.end());
  }
  return logs;
}

metrics::MetricReport evaluate_sequences(
    const std::vector<data::SequenceData>& seqs, const net::NetworkConfig& cfg,
    const net::NetParams& params, int dilation_radius, const EvalHook& hook) {
  std::vector<metrics::FrameScore> scores;
  for (const auto& seq : seqs) {
    std::vector<double> prev_probs;
    for (int t = 0; t < int(seq.frames.size()); ++t) {
      auto fwd = forward_frame(seq, t, cfg, params, &prev_probs, dilation_radius);
      for (double v : fwd.logits.values()) check_finite(v, "evaluation logits");
      img::LabelMask pred = argmax_mask(fwd.logits);
      scores.push_back(
          metrics::score_frame(pred, seq.masks[std::size_t(t)], cfg.num_classes));
      if (hook) hook(seq, t, fwd, pred);
      const int h = seq.frames[std::size_t(t)].height;
      const int w = seq.frames[std::size_t(t)].width;
      prev_probs = softmax_values(fwd.logits.values(), cfg.num_classes, h, w);
    }
  }
  return metrics::build_report(scores, cfg.num_classes);
}

}  // namespace tpseg::train

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tpseg/adam.hpp"
#include "tpseg/dataset.hpp"
#include "tpseg/losses.hpp"
#include "tpseg/metrics.hpp"
#include "tpseg/net.hpp"

namespace tpseg::train {

struct LossConfig {
  std::vector<double> alpha;  // per-class weights, resolved
  double beta = 1.0;
  bool semi = true;
};

struct TrainState {
  int64_t step = 0;
  AdamState adam;
  uint64_t seed = 0;
};

struct StepLog {
  int64_t step;
  int frame_index;
  const char* kind;  // "sup" | "semi"
  double value;
};

// Inverse pixel-frequency weights over labeled frames, normalized to mean 1.
std::vector<double> auto_class_weights(const std::vector<data::SequenceData>& seqs,
                                       int num_classes);

// Plain softmax over logit values (no graph), [C*H*W] channel planes.
std::vector<double> softmax_values(const std::vector<double>& logits, int classes,
                                   int height, int width);

img::LabelMask argmax_mask(const ad::Tensor& logits);

// Temporal prior entering the network for one frame. prev_probs is the
// previous frame's softmax output (null for the first frame -> zero prior).
flow::PriorMap make_prior(net::PriorMode mode, const std::vector<double>* prev_probs,
                          int classes, int height, int width,
                          const flow::FlowField* flow_to_here, int radius);

// One temporal pass over a sequence: frames in order, the prior circulated
// from the network's own previous prediction, one optimizer step per frame.
// Labeled frames take the weighted cross-entropy; unlabeled frames take the
// reverse-warp consistency loss when enabled and the previous frame is
// labeled, and are forward-only otherwise (the prediction still circulates).
std::vector<StepLog> train_sequence(const data::SequenceData& seq,
                                    const net::NetworkConfig& cfg,
                                    net::NetParams& params, TrainState& state,
                                    const LossConfig& loss_cfg,
                                    const AdamConfig& adam_cfg,
                                    int dilation_radius);

// Epoch over all sequences in a seed-deterministic shuffled order.
std::vector<StepLog> train_epoch(const std::vector<data::SequenceData>& seqs,
                                 const net::NetworkConfig& cfg,
                                 net::NetParams& params, TrainState& state,
                                 const LossConfig& loss_cfg,
                                 const AdamConfig& adam_cfg,
                                 int dilation_radius, int epoch_index);

// Sequential evaluation with the same prior circulation as training.
// The hook, when set, sees every frame's forward result and prediction.
using EvalHook = std::function<void(const data::SequenceData&, int,
                                    const net::ForwardResult&,
                                    const img::LabelMask&)>;

metrics::MetricReport evaluate_sequences(
    const std::vector<data::SequenceData>& seqs, const net::NetworkConfig& cfg,
    const net::NetParams& params, int dilation_radius,
    const EvalHook& hook = nullptr);

}  // namespace tpseg::train

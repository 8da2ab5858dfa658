#pragma once

#include "tpseg/image.hpp"
#include "tpseg/ops.hpp"
#include "tpseg/propagate.hpp"

namespace tpseg::train {

// Mean over pixels of -alpha[y] * log softmax(logits)[y]. Works on logits via
// log-sum-exp; gradient w.r.t. logits is alpha[y]*(softmax - onehot)/Npix.
ad::Tensor weighted_ce(const ad::Tensor& logits, const img::LabelMask& labels,
                       const std::vector<double>& alpha);

// Differentiable forward splat of a per-channel probability tensor [1,C,H,W]
// along the flow. Max-collision per channel; gradient routes to the winning
// source. Unhit targets are zero in every channel.
ad::Tensor scatter_warp(const ad::Tensor& probs, const flow::FlowField& f);

// Cross-entropy of a warped probability tensor against a label mask, computed
// on hit pixels only: the warped channels are renormalized per pixel and the
// mean of -beta*log p[y] is taken over pixels that received mass. warped must
// come from scatter_warp of strictly positive sources (softmax output), so a
// pixel is hit iff its channel values are nonzero.
struct SemiNll {
  ad::Tensor loss;  // [1]; undefined when degenerate
  bool degenerate = false;
  int hit_pixels = 0;
};
SemiNll semi_nll(const ad::Tensor& warped, const img::LabelMask& labels,
                 double beta);

// Consistency loss for an unlabeled frame: softmax(pred_t) is warped back to
// frame t-1 coordinates by the negated flow and scored against that frame's
// labels. fwd_flow is the (t-1 -> t) field. Degenerate (no pixel hit) means
// the caller should skip the step.
SemiNll semi_loss(const ad::Tensor& pred_logits, const flow::FlowField& fwd_flow,
                  const img::LabelMask& label_prev, double beta);

}  // namespace tpseg::train

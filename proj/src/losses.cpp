#include "tpseg/losses.hpp"

#include <cmath>

namespace tpseg::train {

using ad::Node;
using ad::Tensor;

namespace {

void expect_logits_vs_labels(const Tensor& t, const img::LabelMask& labels,
                             const char* op) {
  if (t.ndim() != 4 || t.dim(0) != 1)
    throw DimensionError(std::string(op) + ": expected [1,C,H,W], got " +
                         ad::shape_str(t.shape()));
  if (t.dim(2) != labels.height || t.dim(3) != labels.width)
    throw DimensionError(std::string(op) + ": labels " +
                         std::to_string(labels.width) + "x" +
                         std::to_string(labels.height) + " vs tensor " +
                         ad::shape_str(t.shape()));
}

}  // namespace

Tensor weighted_ce(const Tensor& logits, const img::LabelMask& labels,
                   const std::vector<double>& alpha) {
  expect_logits_vs_labels(logits, labels, "weighted_ce");
  const int c = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
  if (int(alpha.size()) != c)
    throw DimensionError("weighted_ce: alpha has " +
                         std::to_string(alpha.size()) + " entries for " +
                         std::to_string(c) + " classes");
  for (double a : alpha)
    if (a <= 0.0) throw DataError("weighted_ce: class weights must be positive");
  const std::size_t plane = std::size_t(h) * w;
  for (std::size_t i = 0; i < plane; ++i)
    if (labels.ids[i] >= c)
      throw DataError("weighted_ce: label id " + std::to_string(labels.ids[i]) +
                      " out of range for " + std::to_string(c) + " classes");

  auto node = std::make_shared<Node>();
  node->op = "weighted_ce";
  node->shape = {1};
  node->value.resize(1);
  node->parents = {logits.node()};
  node->needs_grad = logits.node()->needs_grad;

  const double* z = logits.values().data();
  std::vector<double> probs(logits.size());  // kept for the backward pass
  double total = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    double m = z[i];
    for (int ic = 1; ic < c; ++ic)
      m = std::max(m, z[std::size_t(ic) * plane + i]);
    double s = 0.0;
    for (int ic = 0; ic < c; ++ic) {
      const double e = std::exp(z[std::size_t(ic) * plane + i] - m);
      probs[std::size_t(ic) * plane + i] = e;
      s += e;
    }
    for (int ic = 0; ic < c; ++ic) probs[std::size_t(ic) * plane + i] /= s;
    const int y = labels.ids[i];
    const double lse = m + std::log(s);
    total += alpha[std::size_t(y)] * (lse - z[std::size_t(y) * plane + i]);
  }
  node->value[0] = total / double(plane);

  Node* self = node.get();
  Node* zn = logits.node().get();
  node->backprop = [self, zn, c, plane, alpha, ids = labels.ids,
                    probs = std::move(probs)]() {
    if (!zn->needs_grad) return;
    const double g = self->grad[0] / double(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      const int y = ids[i];
      const double ay = alpha[std::size_t(y)];
      for (int ic = 0; ic < c; ++ic) {
        const std::size_t idx = std::size_t(ic) * plane + i;
        const double delta = (ic == y) ? 1.0 : 0.0;
        zn->grad[idx] += g * ay * (probs[idx] - delta);
      }
    }
  };
  return Tensor::wrap(std::move(node));
}

Tensor scatter_warp(const Tensor& probs, const flow::FlowField& f) {
  if (probs.ndim() != 4 || probs.dim(0) != 1)
    throw DimensionError("scatter_warp: expected [1,C,H,W], got " +
                         ad::shape_str(probs.shape()));
  const int c = probs.dim(1), h = probs.dim(2), w = probs.dim(3);
  if (f.width != w || f.height != h)
    throw DimensionError("scatter_warp: flow " + std::to_string(f.width) + "x" +
                         std::to_string(f.height) + " vs tensor " +
                         ad::shape_str(probs.shape()));

  auto node = std::make_shared<Node>();
  node->op = "scatter_warp";
  node->shape = probs.shape();
  node->value.resize(probs.size());
  node->parents = {probs.node()};
  node->needs_grad = probs.node()->needs_grad;

  const std::size_t plane = std::size_t(h) * w;
  std::vector<int> winners(probs.size());
  for (int ic = 0; ic < c; ++ic)
    flow::scatter_max_plane(probs.values().data() + std::size_t(ic) * plane, w,
                            h, f, node->value.data() + std::size_t(ic) * plane,
                            winners.data() + std::size_t(ic) * plane);

  Node* self = node.get();
  Node* pn = probs.node().get();
  node->backprop = [self, pn, c, plane, winners = std::move(winners)]() {
    if (!pn->needs_grad) return;
    for (int ic = 0; ic < c; ++ic)
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t idx = std::size_t(ic) * plane + i;
        const int src = winners[idx];
        if (src >= 0)
          pn->grad[std::size_t(ic) * plane + std::size_t(src)] += self->grad[idx];
      }
  };
  return Tensor::wrap(std::move(node));
}

SemiNll semi_nll(const Tensor& warped, const img::LabelMask& labels,
                 double beta) {
  expect_logits_vs_labels(warped, labels, "semi_nll");
  if (beta <= 0.0) throw DataError("semi_nll: beta must be positive");
  const int c = warped.dim(1), h = warped.dim(2), w = warped.dim(3);
  const std::size_t plane = std::size_t(h) * w;
  const double* wv = warped.values().data();

  // Hit pixels carry positive mass in every channel (positive sources share
  // one scatter pattern across channels).
  std::vector<uint8_t> hit(plane, 0);
  std::vector<double> chansum(plane, 0.0);
  int nhit = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    double s = 0.0;
    for (int ic = 0; ic < c; ++ic) s += wv[std::size_t(ic) * plane + i];
    if (s > 0.0) {
      hit[i] = 1;
      chansum[i] = s;
      ++nhit;
    }
  }
  SemiNll out;
  out.hit_pixels = nhit;
  if (nhit == 0) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < plane; ++i)
    if (hit[i] && labels.ids[i] >= c)
      throw DataError("semi_nll: label id out of range");

  auto node = std::make_shared<Node>();
  node->op = "semi_nll";
  node->shape = {1};
  node->value.resize(1);
  node->parents = {warped.node()};
  node->needs_grad = warped.node()->needs_grad;

  double total = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    if (!hit[i]) continue;
    const double py = wv[std::size_t(labels.ids[i]) * plane + i];
    total += std::log(chansum[i]) - std::log(py);
  }
  node->value[0] = beta * total / double(nhit);

  Node* self = node.get();
  Node* wn = warped.node().get();
  node->backprop = [self, wn, c, plane, beta, nhit, ids = labels.ids,
                    hit = std::move(hit), chansum = std::move(chansum)]() {
    if (!wn->needs_grad) return;
    const double g = self->grad[0] * beta / double(nhit);
    for (std::size_t i = 0; i < plane; ++i) {
      if (!hit[i]) continue;
      const int y = ids[i];
      const double inv_s = 1.0 / chansum[i];
      const double inv_py = 1.0 / wn->value[std::size_t(y) * plane + i];
      for (int ic = 0; ic < c; ++ic)
        wn->grad[std::size_t(ic) * plane + i] +=
            g * (inv_s - (ic == y ? inv_py : 0.0));
    }
  };
  out.loss = Tensor::wrap(std::move(node));
  return out;
}

SemiNll semi_loss(const Tensor& pred_logits, const flow::FlowField& fwd_flow,
                  const img::LabelMask& label_prev, double beta) {
  Tensor probs = ad::softmax_channel(pred_logits);
  Tensor warped = scatter_warp(probs, flow::reverse_flow(fwd_flow));
  return semi_nll(warped, label_prev, beta);
}

}  // namespace tpseg::train

#include "tpseg/adam.hpp"

#include <cmath>

#include "tpseg/kernels.hpp"

namespace tpseg::train {

void AdamState::init_for(const net::NetParams& params) {
  m.assign(params.named.size(), {});
  v.assign(params.named.size(), {});
  for (std::size_t i = 0; i < params.named.size(); ++i) {
    m[i].assign(params.named[i].second.size(), 0.0);
    v[i].assign(params.named[i].second.size(), 0.0);
  }
  t = 0;
}

void adam_step(net::NetParams& params, AdamState& state, const AdamConfig& cfg) {
  if (!state.initialized()) state.init_for(params);
  if (state.m.size() != params.named.size())
    throw DataError("adam_step: optimizer state does not match parameter set");
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.t));
  const auto& k = kernels::active_kernels();
  for (std::size_t i = 0; i < params.named.size(); ++i) {
    auto& tensor = params.named[i].second;
    if (!tensor.has_grad()) continue;
    if (state.m[i].size() != tensor.size())
      throw DataError("adam_step: moment size mismatch for " +
                      params.named[i].first);
    k.adam_update(tensor.mutable_values().data(), state.m[i].data(),
                  state.v[i].data(), tensor.grad().data(), tensor.size(),
                  cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
  }
}

}  // namespace tpseg::train

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gridwalk/errors.hpp"

namespace gridwalk::nn {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 added to the gradient
};

/// First/second moment buffers plus the bias-correction step counter.
template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, T(0)), v(n, T(0)) {}
};

/// One bias-corrected Adam update, elementwise over the flat arenas.
/// Deterministic: identical (state, grads, lr) give identical results.
template <typename T>
void adam_step(std::vector<T>& params, const std::vector<T>& grads, AdamState<T>& state,
               double lr, const AdamHyper& hyper = {}) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ArgumentError("adam_step: size mismatch between params, grads and moments");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(hyper.beta1);
  const T b2 = static_cast<T>(hyper.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    T g = grads[i];
    if (hyper.weight_decay != 0.0) g += static_cast<T>(hyper.weight_decay) * params[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const double mhat = static_cast<double>(state.m[i]) / bc1;
    const double vhat = static_cast<double>(state.v[i]) / bc2;
    params[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + hyper.eps));
  }
}

}  // namespace gridwalk::nn

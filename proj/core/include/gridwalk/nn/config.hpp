#pragma once

#include "gridwalk/errors.hpp"

namespace gridwalk::nn {

/// Decoder-only transformer shape. Pre-norm residual blocks, learned
/// additive positional embeddings, ReLU MLP, LayerNorm, vocab fixed at 4.
struct ModelConfig {
  int layers = 4;
  int heads = 4;
  int d_model = 128;
  int d_head = 32;
  int d_mlp = 512;
  int context = 8;  // tau
  static constexpr int vocab = 4;

  void validate() const {
    if (layers < 1 || heads < 1 || d_model < 1 || d_head < 1 || d_mlp < 1 || context < 1)
      throw ArgumentError("ModelConfig: all dimensions must be positive");
    if (d_model != heads * d_head)
      throw ArgumentError("ModelConfig: d_model must equal heads * d_head");
  }

  bool operator==(const ModelConfig&) const = default;
};

/// Paper-scale defaults (L=4, H=4, d_head=32, d_model=128, d_mlp=512, tau=8).
inline ModelConfig full_scale_model() { return ModelConfig{}; }

/// Reduced configuration sized for laptop runs.
inline ModelConfig desk_scale_model() {
  ModelConfig c;
  c.layers = 2;
  c.heads = 2;
  c.d_model = 64;
  c.d_head = 32;
  c.d_mlp = 256;
  c.context = 8;
  return c;
}

}  // namespace gridwalk::nn

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gridwalk/dataset.hpp"
#include "gridwalk/nn/params.hpp"

namespace gridwalk::nn {

/// Dense row-major token batch: `batch` sequences of equal length `seqlen`.
struct TokenBatch {
  int batch = 0;
  int seqlen = 0;
  std::vector<std::uint8_t> tokens;  // batch * seqlen

  static TokenBatch from(std::span<const TokenSequence> seqs);
  std::uint8_t at(int b, int i) const { return tokens[static_cast<std::size_t>(b) * seqlen + i]; }
};

/// Captured activations, one matrix per capture point, rows = batch*seqlen.
/// Points: "embed", "ln1.<l>", "resid_post.<l>", "ln_final". LayerNorm
/// points hold the normalized (pre-gain/bias) vectors, so each row has mean
/// zero and unit scale by construction; capture never perturbs the forward
/// values.
using ActivationSet = std::map<std::string, MatX<double>>;

/// Decoder-only pre-norm transformer with explicit reverse-mode backward.
/// Single-threaded: forward/backward reuse an internal workspace.
template <typename T>
class Transformer {
 public:
  Transformer(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  const ParamLayout& layout() const { return layout_; }
  ParamArena<T>& params() { return params_; }
  const ParamArena<T>& params() const { return params_; }
  ParamArena<T>& grads() { return grads_; }

  /// Log-probabilities over the next token for every position: rows
  /// batch*seqlen, cols 4, log-softmax normalized per row. Token ids >= 4
  /// throw ArgumentError. Optionally fills `capture`.
  MatX<T> forward(const TokenBatch& batch, ActivationSet* capture = nullptr);

  /// Mean next-token cross entropy over positions 1..seqlen-1 and the batch;
  /// fills the gradient arena. Throws NumericalError on a non-finite loss.
  double loss_and_grads(const TokenBatch& batch);

  /// Convenience: per-sequence, per-position log-prob rows (validation hook).
  std::vector<std::vector<LogProbs4>> batch_log_probs(std::span<const TokenSequence> seqs);

 private:
  void run_forward(const TokenBatch& batch, ActivationSet* capture);

  ModelConfig cfg_;
  ParamLayout layout_;
  ParamArena<T> params_;
  ParamArena<T> grads_;

  // Forward workspace, resized per batch shape.
  struct LayerCache {
    MatX<T> resid_pre;  // block input
    MatX<T> n1;         // ln1 normalized
    std::vector<T> inv1;
    MatX<T> a_in;       // ln1 output (gain/bias applied)
    MatX<T> q, k, v;    // projections
    MatX<T> probs;      // attention rows, (B*H*S) x S
    MatX<T> ctx;        // heads re-packed
    MatX<T> resid_mid;
    MatX<T> n2;
    std::vector<T> inv2;
    MatX<T> m_in;
    MatX<T> pre;  // mlp pre-activation
    MatX<T> h1;   // relu(pre)
  };
  std::vector<LayerCache> cache_;
  MatX<T> embed_, resid_final_, nf_, f_, logprobs_;
  std::vector<T> invf_;
  int cur_batch_ = 0, cur_seqlen_ = 0;
};

extern template class Transformer<double>;
extern template class Transformer<float>;

}  // namespace gridwalk::nn

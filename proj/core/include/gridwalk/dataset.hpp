#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gridwalk/lattice.hpp"
#include "gridwalk/rng.hpp"

namespace gridwalk {

/// One length-tau prefix, symbols encoded 0..3 in (L,R,D,U) order.
struct TokenSequence {
  std::vector<std::uint8_t> tokens;

  bool operator==(const TokenSequence&) const = default;
};

/// Exact joint distribution over all nonzero-probability length-tau prefixes.
/// Sequences are stored in lexicographic token order; per-sequence log
/// probabilities are sums of exact next-step factors. Immutable after build.
class PrefixDistribution {
 public:
  static PrefixDistribution build(const WalkerSpec& spec, const GreensTable& table);

  const WalkerSpec& spec() const { return spec_; }
  const GreensTable& table() const { return *table_; }
  int prefix_len() const { return spec_.prefix_len; }
  std::size_t size() const { return sequences_.size(); }
  const std::vector<TokenSequence>& sequences() const { return sequences_; }
  const std::vector<double>& log_probs() const { return log_probs_; }

  /// log probability of an arbitrary token prefix (length <= tau); -inf when
  /// the prefix is invalid.
  double sequence_log_prob(std::span<const std::uint8_t> tokens) const;

 private:
  WalkerSpec spec_;
  const GreensTable* table_ = nullptr;
  std::vector<TokenSequence> sequences_;
  std::vector<double> log_probs_;
};

/// I.i.d. batch via sequential exact next-step sampling (the default path).
/// Deterministic given the seed stream; batch_size 0 yields an empty batch.
std::vector<TokenSequence> sample_batch(const PrefixDistribution& dist, std::size_t batch_size,
                                        SeedStream seeds);

/// Same law, sampled by inverse-CDF over the enumerated joint. Kept as an
/// independent route for distribution-equality tests.
std::vector<TokenSequence> sample_batch_categorical(const PrefixDistribution& dist,
                                                    std::size_t batch_size, SeedStream seeds);

/// Model interface for exact validation: given a batch of sequences, return
/// for each sequence and each position 1..tau-1 (0-based output index
/// pos-1) the log-probabilities over the next token.
using BatchLogProbFn = std::function<std::vector<std::vector<LogProbs4>>(
    std::span<const TokenSequence>)>;

/// Exact per-position validation quantities. Positions are 1-based target
/// positions 2..tau; vectors are indexed [pos - 2].
struct ValidationReport {
  std::vector<double> loss_per_pos;     // expected cross entropy
  std::vector<double> entropy_per_pos;  // exact conditional entropy baseline
  std::vector<double> excess_per_pos;   // loss - entropy
  double mean_loss = 0.0;
  double mean_excess = 0.0;
};

/// Expected cross-entropy of a model under the exact joint: for target
/// positions 2..tau, sum_s Pr(s) * (-log model(s_pos | s_<pos)), evaluated
/// over the full enumerated sequence set in a fixed order. Also reports the
/// excess over the exact conditional-entropy baseline and its mean.
ValidationReport expected_cross_entropy(const PrefixDistribution& dist,
                                        const BatchLogProbFn& model,
                                        std::size_t eval_batch = 4096);

/// H(C_pos | S_{pos-1}) under the exact distribution, target positions 2..tau.
std::vector<double> entropy_baseline(const PrefixDistribution& dist);

}  // namespace gridwalk

#include "gridwalk/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace gridwalk {

PrefixDistribution PrefixDistribution::build(const WalkerSpec& spec, const GreensTable& table) {
  spec.validate();
  if (table.horizon() < spec.horizon)
    throw ArgumentError("PrefixDistribution: table horizon is smaller than the walker's");

  PrefixDistribution dist;
  dist.spec_ = spec;
  dist.table_ = &table;

  const int tau = spec.prefix_len;
  // Depth-first enumeration in lexicographic (L,R,D,U) order, accumulating
  // exact next-step factors and pruning zero-probability branches.
  std::vector<std::uint8_t> tokens(tau);
  std::vector<Offset> pos(tau + 1);
  pos[0] = {0, 0};

  struct Frame {
    LogProbs4 step_logp;
    int symbol;
  };
  std::vector<Frame> stack(tau);
  std::vector<double> running(tau + 1);
  running[0] = 0.0;

  int depth = 0;
  stack[0] = {next_step_log_probs(table, spec, pos[0], 0), 0};
  while (depth >= 0) {
    Frame& f = stack[depth];
    if (f.symbol >= kNumSymbols) {
      --depth;
      if (depth >= 0) ++stack[depth].symbol;
      continue;
    }
    const double lp = f.step_logp[f.symbol];
    if (lp == kNegInf) {
      ++f.symbol;
      continue;
    }
    tokens[depth] = static_cast<std::uint8_t>(f.symbol);
    pos[depth + 1] = pos[depth] + displacement(f.symbol);
    running[depth + 1] = running[depth] + lp;
    if (depth + 1 == tau) {
      dist.sequences_.push_back(TokenSequence{tokens});
      dist.log_probs_.push_back(running[tau]);
      ++f.symbol;
    } else {
      ++depth;
      stack[depth] = {next_step_log_probs(table, spec, pos[depth], depth), 0};
    }
  }
  return dist;
}

double PrefixDistribution::sequence_log_prob(std::span<const std::uint8_t> tokens) const {
  if (static_cast<int>(tokens.size()) > spec_.prefix_len)
    throw ArgumentError("sequence_log_prob: prefix longer than tau");
  Offset x{0, 0};
  double lp = 0.0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] >= kNumSymbols) throw ArgumentError("sequence_log_prob: token id >= 4");
    double completions = table_->log_count(spec_.horizon - static_cast<int>(t),
                                           spec_.endpoint - x);
    if (completions == kNegInf) return kNegInf;
    const LogProbs4 step = next_step_log_probs(*table_, spec_, x, static_cast<int>(t));
    if (step[tokens[t]] == kNegInf) return kNegInf;
    lp += step[tokens[t]];
    x = x + displacement(tokens[t]);
  }
  return lp;
}

std::vector<TokenSequence> sample_batch(const PrefixDistribution& dist, std::size_t batch_size,
                                        SeedStream seeds) {
  auto rng = seeds.make_rng();
  const auto& spec = dist.spec();
  const auto& table = dist.table();
  const int tau = spec.prefix_len;

  std::vector<TokenSequence> batch(batch_size);
  for (auto& seq : batch) {
    seq.tokens.resize(tau);
    Offset x{0, 0};
    for (int t = 0; t < tau; ++t) {
      const LogProbs4 logp = next_step_log_probs(table, spec, x, t);
      // Inverse CDF in fixed (L,R,D,U) order.
      const double u = uniform01(rng);
      double acc = 0.0;
      int pick = -1;
      for (int c = 0; c < kNumSymbols; ++c) {
        if (logp[c] == kNegInf) continue;
        acc += std::exp(logp[c]);
        if (u < acc) {
          pick = c;
          break;
        }
      }
      if (pick < 0) {  // u landed in the rounding tail; take the last live symbol
        for (int c = kNumSymbols - 1; c >= 0; --c) {
          if (logp[c] != kNegInf) {
            pick = c;
            break;
          }
        }
      }
      seq.tokens[t] = static_cast<std::uint8_t>(pick);
      x = x + displacement(pick);
    }
  }
  return batch;
}

std::vector<TokenSequence> sample_batch_categorical(const PrefixDistribution& dist,
                                                    std::size_t batch_size, SeedStream seeds) {
  auto rng = seeds.make_rng();
  const auto& logp = dist.log_probs();
  std::vector<double> cdf(logp.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) {
    acc += std::exp(logp[i]);
    cdf[i] = acc;
  }
  std::vector<TokenSequence> batch(batch_size);
  for (auto& seq : batch) {
    const double u = uniform01(rng) * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t idx = std::min(static_cast<std::size_t>(it - cdf.begin()),
                                     logp.size() - 1);
    seq = dist.sequences()[idx];
  }
  return batch;
}

std::vector<double> entropy_baseline(const PrefixDistribution& dist) {
  const auto& spec = dist.spec();
  const auto& table = dist.table();
  std::vector<double> out(spec.prefix_len - 1, 0.0);
  // H(C_{t+1} | S_t) = sum over classes at t of mass * entropy of the class
  // conditional; target position pos = t + 1.
  for (int t = 1; t <= spec.prefix_len - 1; ++t) {
    double h = 0.0;
    for (const auto& cls : enumerate_classes_at(table, spec, t)) {
      const double mass = cls.degeneracy * std::exp(cls.log_prob);
      double cls_h = 0.0;
      for (double lp : cls.next_step_logp) {
        if (lp != kNegInf) cls_h -= std::exp(lp) * lp;
      }
      h += mass * cls_h;
    }
    out[t - 1] = h;
  }
  return out;
}

ValidationReport expected_cross_entropy(const PrefixDistribution& dist,
                                        const BatchLogProbFn& model, std::size_t eval_batch) {
  const int tau = dist.prefix_len();
  const auto& seqs = dist.sequences();
  const auto& logp = dist.log_probs();

  ValidationReport rep;
  rep.loss_per_pos.assign(tau - 1, 0.0);

  // Fixed enumeration order (lexicographic), fixed batch boundaries: sums
  // are bit-reproducible.
  for (std::size_t begin = 0; begin < seqs.size(); begin += eval_batch) {
    const std::size_t end = std::min(begin + eval_batch, seqs.size());
    const auto out = model(std::span(seqs.data() + begin, end - begin));
    if (out.size() != end - begin)
      throw ArgumentError("expected_cross_entropy: model returned a wrong-sized batch");
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (static_cast<int>(out[i].size()) < tau - 1)
        throw ArgumentError("expected_cross_entropy: model returned too few positions");
      const double w = std::exp(logp[begin + i]);
      const auto& tokens = seqs[begin + i].tokens;
      for (int pos = 2; pos <= tau; ++pos) {
        const double model_lp = out[i][pos - 2][tokens[pos - 1]];
        rep.loss_per_pos[pos - 2] += w * (-model_lp);
      }
    }
  }

  rep.entropy_per_pos = entropy_baseline(dist);
  rep.excess_per_pos.resize(tau - 1);
  for (int k = 0; k < tau - 1; ++k) {
    rep.excess_per_pos[k] = rep.loss_per_pos[k] - rep.entropy_per_pos[k];
    rep.mean_loss += rep.loss_per_pos[k];
    rep.mean_excess += rep.excess_per_pos[k];
  }
  rep.mean_loss /= (tau - 1);
  rep.mean_excess /= (tau - 1);
  return rep;
}

}  // namespace gridwalk

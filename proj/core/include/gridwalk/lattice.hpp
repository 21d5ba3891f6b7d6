#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "gridwalk/errors.hpp"
#include "gridwalk/geom.hpp"

namespace gridwalk {

/// One constrained walker: all length-`horizon` paths ending at `endpoint`
/// are equally likely; training/analysis look at prefixes of length <= prefix_len.
struct WalkerSpec {
  Offset endpoint;
  int horizon = 0;     // T
  int prefix_len = 8;  // tau

  /// Throws ArgumentError when no valid path exists (parity / range) or
  /// when prefix_len is out of range.
  void validate() const;
};

/// Stable log-sum-exp with max subtraction; -inf entries are exact zeros.
double log_sum_exp(const double* v, int n);
inline double log_sum_exp(const std::vector<double>& v) {
  return log_sum_exp(v.data(), static_cast<int>(v.size()));
}

/// log C(n, k) via lgamma; -inf outside 0 <= k <= n.
double log_binomial(int n, int k);

/// Closed-form log path count: the rotated basis splits an n-step walk into
/// two independent +-1 walks, so G_n(r) = C(n,(n+rx+ry)/2) * C(n,(n+rx-ry)/2).
/// Returns -inf when parity fails or |r|_1 > n.
double log_count_closed_form(int n, Offset r);

/// Log-domain table of unconstrained path counts log G_n(r), n = 0..horizon.
/// Levels live in the rotated basis (i,j) = ((rx+ry+n)/2, (rx-ry+n)/2); level n
/// is a dense (n+1)x(n+1) row-major array. Impossible offsets hold -inf.
/// Immutable after construction; all queries are pure and thread-safe.
class GreensTable {
 public:
  static constexpr std::size_t kDefaultMemoryBudget = std::size_t{1} << 30;  // 1 GiB

  /// Dynamic-programming build via the four-corner recursion, all levels
  /// 0..horizon. Throws ResourceError when the dense storage would exceed
  /// memory_budget_bytes (callers may fall back to closed_form()).
  static GreensTable build(int horizon, std::size_t memory_budget_bytes = kDefaultMemoryBudget);

  /// Storage-free table answering every query through log_count_closed_form.
  static GreensTable closed_form(int horizon);

  /// Bytes of level storage a dense build of `horizon` requires.
  static std::size_t dense_bytes(int horizon);

  int horizon() const { return horizon_; }
  bool dense() const { return !levels_.empty(); }

  /// log G_n(r); -inf when unreachable. Throws ArgumentError for n outside 0..horizon.
  double log_count(int n, Offset r) const;

  /// Direct row-major access to a dense level (testing / persistence).
  const std::vector<double>& level(int n) const;

  /// Versioned little-endian binary persistence (magic "GWGT"). Dense only.
  void save(const std::filesystem::path& path) const;
  static GreensTable load(const std::filesystem::path& path);

 private:
  GreensTable() = default;

  int horizon_ = 0;
  std::vector<std::vector<double>> levels_;  // empty => closed-form backing
};

/// Equivalence class (x_t, t) of prefixes: all share the same predictive
/// distribution. `degeneracy` counts member strings; `log_prob` is the log
/// probability of any single member.
struct PrefixClass {
  Offset position;
  int step = 0;                 // t, 1-based
  std::uint64_t degeneracy = 0; // n(s_t, t) = G_t(x_t)
  double log_prob = 0.0;        // of one member sequence
  LogProbs4 next_step_logp{};   // log Pr(c | s_t; p), order (L,R,D,U)
};

/// log Pr(S_t = s_t | p) for a prefix ending at x_t after t steps:
/// log G_{T-t}(p - x_t) - log G_T(p). Returns -inf for prefixes that are
/// unreachable or have no valid completion. Throws ArgumentError for t > T
/// or t < 0.
double prefix_log_prob(const GreensTable& table, const WalkerSpec& spec, Offset x_t, int t);

/// Exact next-step log probabilities from (x_t, t): entry c is
/// log G_{T-t-1}(p - x_t - Delta_c) - log G_{T-t}(p - x_t).
/// The recursion guarantees the four numerators sum to the denominator, so the
/// result log-sum-exps to 0. Throws StateError when the denominator count is
/// zero, ArgumentError when t > T-1.
LogProbs4 next_step_log_probs(const GreensTable& table, const WalkerSpec& spec, Offset x_t, int t);

/// All classes with nonzero prefix probability for t = 1..spec.prefix_len,
/// ordered by (t, rotated i, rotated j). Requires prefix_len <= horizon - 1.
std::vector<PrefixClass> enumerate_classes(const GreensTable& table, const WalkerSpec& spec);

/// Classes for a single t (same ordering / filtering as enumerate_classes).
std::vector<PrefixClass> enumerate_classes_at(const GreensTable& table, const WalkerSpec& spec,
                                              int t);

}  // namespace gridwalk

#include "gridwalk/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "gridwalk/io.hpp"

namespace gridwalk {

namespace {

// Rotated index of offset r at level n, or nullopt when parity/range fail.
struct Rot {
  int i;
  int j;
};

std::optional<Rot> rotated(int n, Offset r) {
  const int a = r.x + r.y + n;
  const int b = r.x - r.y + n;
  if ((a & 1) != 0 || (b & 1) != 0) return std::nullopt;
  const int i = a / 2;
  const int j = b / 2;
  if (i < 0 || i > n || j < 0 || j > n) return std::nullopt;
  return Rot{i, j};
}

constexpr double kLog4 = 1.3862943611198906188344642429164;

}  // namespace

void WalkerSpec::validate() const {
  if (horizon < 1) throw ArgumentError("WalkerSpec: horizon must be >= 1");
  if (endpoint.l1() > horizon)
    throw ArgumentError("WalkerSpec: endpoint is unreachable within the horizon");
  if (((endpoint.x + endpoint.y + horizon) & 1) != 0)
    throw ArgumentError("WalkerSpec: endpoint parity admits zero valid paths");
  if (prefix_len < 1 || prefix_len > horizon - 1)
    throw ArgumentError("WalkerSpec: prefix_len must satisfy 1 <= tau <= horizon - 1");
}

double log_sum_exp(const double* v, int n) {
  double m = kNegInf;
  for (int i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    if (v[i] != kNegInf) s += std::exp(v[i] - m);
  }
  return m + std::log(s);
}

double log_binomial(int n, int k) {
  if (k < 0 || k > n) return kNegInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_count_closed_form(int n, Offset r) {
  const auto rot = rotated(n, r);
  if (!rot) return kNegInf;
  const double a = log_binomial(n, rot->i);
  const double b = log_binomial(n, rot->j);
  if (a == kNegInf || b == kNegInf) return kNegInf;
  return a + b;
}

std::size_t GreensTable::dense_bytes(int horizon) {
  std::size_t doubles = 0;
  for (int n = 0; n <= horizon; ++n) {
    doubles += static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1);
  }
  return doubles * sizeof(double);
}

GreensTable GreensTable::build(int horizon, std::size_t memory_budget_bytes) {
  if (horizon < 0) throw ArgumentError("GreensTable: horizon must be >= 0");
  if (dense_bytes(horizon) > memory_budget_bytes)
    throw ResourceError("GreensTable: dense build for horizon " + std::to_string(horizon) +
                        " exceeds the memory budget; use closed_form()");

  GreensTable t;
  t.horizon_ = horizon;
  t.levels_.reserve(horizon + 1);
  t.levels_.push_back({0.0});  // log G_0(0,0) = 0
  for (int n = 1; n <= horizon; ++n) {
    const auto& prev = t.levels_.back();
    const int pw = n;  // previous level width
    std::vector<double> cur(static_cast<std::size_t>(n + 1) * (n + 1), kNegInf);
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        // Four-corner recursion: (i,j), (i-1,j), (i,j-1), (i-1,j-1) of level n-1.
        double terms[4];
        int m = 0;
        if (i < pw && j < pw) terms[m++] = prev[static_cast<std::size_t>(i) * pw + j];
        if (i > 0 && j < pw) terms[m++] = prev[static_cast<std::size_t>(i - 1) * pw + j];
        if (i < pw && j > 0) terms[m++] = prev[static_cast<std::size_t>(i) * pw + j - 1];
        if (i > 0 && j > 0) terms[m++] = prev[static_cast<std::size_t>(i - 1) * pw + j - 1];
        cur[static_cast<std::size_t>(i) * (n + 1) + j] = log_sum_exp(terms, m);
      }
    }
    t.levels_.push_back(std::move(cur));
  }
  return t;
}

GreensTable GreensTable::closed_form(int horizon) {
  if (horizon < 0) throw ArgumentError("GreensTable: horizon must be >= 0");
  GreensTable t;
  t.horizon_ = horizon;
  return t;
}

double GreensTable::log_count(int n, Offset r) const {
  if (n < 0 || n > horizon_)
    throw ArgumentError("GreensTable: level " + std::to_string(n) + " outside 0.." +
                        std::to_string(horizon_));
  if (levels_.empty()) return log_count_closed_form(n, r);
  const auto rot = rotated(n, r);
  if (!rot) return kNegInf;
  return levels_[n][static_cast<std::size_t>(rot->i) * (n + 1) + rot->j];
}

const std::vector<double>& GreensTable::level(int n) const {
  if (!dense()) throw StateError("GreensTable: closed-form table has no stored levels");
  if (n < 0 || n > horizon_) throw ArgumentError("GreensTable: level out of range");
  return levels_[n];
}

namespace {
constexpr char kTableMagic[4] = {'G', 'W', 'G', 'T'};
constexpr std::uint32_t kTableVersion = 1;
}  // namespace

void GreensTable::save(const std::filesystem::path& path) const {
  if (!dense()) throw StateError("GreensTable: only dense tables can be persisted");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("GreensTable: cannot open " + path.string() + " for writing");
  out.write(kTableMagic, 4);
  io::write_u32(out, kTableVersion);
  io::write_u32(out, static_cast<std::uint32_t>(horizon_));
  for (const auto& lvl : levels_) io::write_f64_block(out, lvl.data(), lvl.size());
  if (!out) throw CorruptionError("GreensTable: short write to " + path.string());
}

GreensTable GreensTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("GreensTable: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kTableMagic, 4) != 0)
    throw FormatError("GreensTable: bad magic in " + path.string());
  const auto version = io::read_u32(in);
  if (version != kTableVersion)
    throw FormatError("GreensTable: unsupported version " + std::to_string(version));
  const auto horizon = io::read_u32(in);
  if (horizon > 100000) throw FormatError("GreensTable: implausible horizon");

  GreensTable t;
  t.horizon_ = static_cast<int>(horizon);
  t.levels_.reserve(horizon + 1);
  for (std::uint32_t n = 0; n <= horizon; ++n) {
    std::vector<double> lvl(static_cast<std::size_t>(n + 1) * (n + 1));
    io::read_f64_block(in, lvl.data(), lvl.size());
    if (!in) throw CorruptionError("GreensTable: truncated file " + path.string());
    t.levels_.push_back(std::move(lvl));
  }
  // Integrity: every level must log-sum-exp to n*log(4).
  for (std::uint32_t n = 0; n <= horizon; ++n) {
    const double lse = log_sum_exp(t.levels_[n]);
    if (std::fabs(lse - n * kLog4) > 1e-9)
      throw CorruptionError("GreensTable: level " + std::to_string(n) +
                            " fails the normalization check");
  }
  return t;
}

double prefix_log_prob(const GreensTable& table, const WalkerSpec& spec, Offset x_t, int t) {
  if (t < 0 || t > spec.horizon)
    throw ArgumentError("prefix_log_prob: t outside 0..horizon");
  if (t == 0) return (x_t == Offset{0, 0}) ? 0.0 : kNegInf;
  // A prefix string ending at x_t exists only if x_t is reachable in t steps.
  if (log_count_closed_form(t, x_t) == kNegInf) return kNegInf;
  const double completions = table.log_count(spec.horizon - t, spec.endpoint - x_t);
  if (completions == kNegInf) return kNegInf;
  const double total = table.log_count(spec.horizon, spec.endpoint);
  if (total == kNegInf) throw StateError("prefix_log_prob: walker admits no valid paths");
  return completions - total;
}

LogProbs4 next_step_log_probs(const GreensTable& table, const WalkerSpec& spec, Offset x_t,
                              int t) {
  if (t < 0 || t > spec.horizon - 1)
    throw ArgumentError("next_step_log_probs: t outside 0..horizon-1");
  const Offset rem = spec.endpoint - x_t;
  const double denom = table.log_count(spec.horizon - t, rem);
  if (denom == kNegInf)
    throw StateError("next_step_log_probs: zero completion count at (x_t, t)");
  LogProbs4 out;
  for (int c = 0; c < kNumSymbols; ++c) {
    out[c] = table.log_count(spec.horizon - t - 1, rem - displacement(c)) - denom;
  }
  return out;
}

std::vector<PrefixClass> enumerate_classes_at(const GreensTable& table, const WalkerSpec& spec,
                                              int t) {
  if (t < 1 || t > spec.horizon - 1)
    throw ArgumentError("enumerate_classes_at: t outside 1..horizon-1");
  std::vector<PrefixClass> out;
  // Walk the rotated (t+1)x(t+1) grid of positions reachable in t steps.
  for (int i = 0; i <= t; ++i) {
    for (int j = 0; j <= t; ++j) {
      const Offset x{i + j - t, i - j};
      const double lp = prefix_log_prob(table, spec, x, t);
      if (lp == kNegInf) continue;
      PrefixClass cls;
      cls.position = x;
      cls.step = t;
      // Exact integer degeneracy C(t,i)*C(t,j); t is small (<= tau), no overflow.
      std::uint64_t binom_i = 1, binom_j = 1;
      for (int k = 1; k <= i; ++k) binom_i = binom_i * (t - k + 1) / k;
      for (int k = 1; k <= j; ++k) binom_j = binom_j * (t - k + 1) / k;
      cls.degeneracy = binom_i * binom_j;
      cls.log_prob = lp;
      cls.next_step_logp = next_step_log_probs(table, spec, x, t);
      out.push_back(cls);
    }
  }
  return out;
}

std::vector<PrefixClass> enumerate_classes(const GreensTable& table, const WalkerSpec& spec) {
  spec.validate();
  std::vector<PrefixClass> out;
  for (int t = 1; t <= spec.prefix_len; ++t) {
    auto level = enumerate_classes_at(table, spec, t);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

}  // namespace gridwalk

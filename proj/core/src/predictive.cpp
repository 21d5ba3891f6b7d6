#include "gridwalk/predictive.hpp"

#include <cmath>

namespace gridwalk {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

Vec2 scaled_displacement(const WalkerSpec& spec, Offset x_t, int t) {
  const int remaining = spec.horizon - t - 1;
  if (remaining < 1) throw ArgumentError("scaled_displacement: requires t <= horizon - 2");
  const Offset d = x_t - spec.endpoint;
  return {static_cast<double>(d.x) / remaining, static_cast<double>(d.y) / remaining};
}

Vec2 suff_vec_from_logprobs(const LogProbs4& logp) {
  for (double lp : logp) {
    if (lp == kNegInf)
      throw DegenerateDistributionError(
          "suff_vec_from_logprobs: distribution has a zero entry");
  }
  const int L = 0, R = 1, D = 2, U = 3;
  return {0.5 * (logp[L] - logp[R]), 0.5 * (logp[D] - logp[U])};
}

LogProbs4 centered_logprobs(const LogProbs4& logp) {
  double mean = 0.0;
  for (double lp : logp) {
    if (lp == kNegInf)
      throw DegenerateDistributionError("centered_logprobs: distribution has a zero entry");
    mean += lp;
  }
  mean *= 0.25;
  return {logp[0] - mean, logp[1] - mean, logp[2] - mean, logp[3] - mean};
}

LogProbs4 log_softmax_from_v(Vec2 v) {
  LogProbs4 logits;
  for (int c = 0; c < kNumSymbols; ++c) logits[c] = -v.dot(displacement_vec(c));
  const double lz = log_sum_exp(logits.data(), kNumSymbols);
  for (double& l : logits) l -= lz;
  return logits;
}

std::array<double, 4> softmax_from_v(Vec2 v) {
  auto logp = log_softmax_from_v(v);
  std::array<double, 4> p;
  for (int c = 0; c < kNumSymbols; ++c) p[c] = std::exp(logp[c]);
  return p;
}

Vec2 structure_map_F(Vec2 q) {
  const double s = std::cosh(q.x) + std::cosh(q.y);
  return {std::sinh(q.x) / s, std::sinh(q.y) / s};
}

Jacobian2 jacobian_F(Vec2 q) {
  const double cx = std::cosh(q.x), cy = std::cosh(q.y);
  const double sx = std::sinh(q.x), sy = std::sinh(q.y);
  const double s2 = (cx + cy) * (cx + cy);
  Jacobian2 j;
  j.dx_dqx = (1.0 + cx * cy) / s2;
  j.dx_dqy = -sx * sy / s2;
  j.dy_dqx = j.dx_dqy;
  j.dy_dqy = j.dx_dqx;
  j.det = 1.0 / s2;  // algebraic identity: (1+cx*cy)^2 - (sx*sy)^2 = (cx+cy)^2
  return j;
}

Vec2 invert_saddle(Vec2 u, double tol) {
  if (u.l1() >= 1.0)
    throw DomainError("invert_saddle: |u_x| + |u_y| must be < 1");
  Vec2 q{2.0 * u.x, 2.0 * u.y};  // diffusive-limit initialization
  for (int iter = 0; iter < 100; ++iter) {
    const Vec2 r = structure_map_F(q) - u;
    if (r.linf() < tol) return q;
    const Jacobian2 j = jacobian_F(q);
    // Solve J dq = r; J is symmetric with det = 1/(cosh qx + cosh qy)^2 > 0.
    const double inv_det = 1.0 / j.det;
    const double dqx = (j.dy_dqy * r.x - j.dx_dqy * r.y) * inv_det;
    const double dqy = (-j.dy_dqx * r.x + j.dx_dqx * r.y) * inv_det;
    q.x -= dqx;
    q.y -= dqy;
  }
  throw NumericalError("invert_saddle: Newton did not converge in 100 iterations");
}

double gaussian_log_count(int n, Offset r) {
  if (n < 1) throw ArgumentError("gaussian_log_count: n must be >= 1");
  const double r2 = static_cast<double>(r.x) * r.x + static_cast<double>(r.y) * r.y;
  return n * std::log(4.0) - std::log(kPi * n) - r2 / n;
}

std::array<double, 4> belief_to_predictive(const GreensTable& table, const WalkerSpec& spec,
                                           Offset position, int t) {
  const std::pair<Offset, double> point{position, 1.0};
  return belief_to_predictive(table, spec, std::span(&point, 1), t);
}

std::array<double, 4> belief_to_predictive(const GreensTable& table, const WalkerSpec& spec,
                                           std::span<const std::pair<Offset, double>> belief,
                                           int t) {
  std::array<double, 4> out{0.0, 0.0, 0.0, 0.0};
  for (const auto& [x, w] : belief) {
    if (w < 0.0) throw ArgumentError("belief_to_predictive: negative belief weight");
    if (w == 0.0) continue;
    // Each belief component selects one row of the linear map Phi, whose
    // entries are the exact next-step probabilities at (x, t).
    if (prefix_log_prob(table, spec, x, t) == kNegInf)
      throw DomainError("belief_to_predictive: position has no valid completion");
    const LogProbs4 row = next_step_log_probs(table, spec, x, t);
    for (int c = 0; c < kNumSymbols; ++c) {
      out[c] += w * (row[c] == kNegInf ? 0.0 : std::exp(row[c]));
    }
  }
  return out;
}

}  // namespace gridwalk

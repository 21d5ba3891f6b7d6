#pragma once

#include <span>
#include <utility>
#include <vector>

#include "gridwalk/geom.hpp"
#include "gridwalk/lattice.hpp"

namespace gridwalk {

/// 2x2 Jacobian of the saddle map F, plus its determinant.
struct Jacobian2 {
  double dx_dqx = 0.0;
  double dx_dqy = 0.0;
  double dy_dqx = 0.0;
  double dy_dqy = 0.0;
  double det = 0.0;
};

/// Scaled displacement u = (x_t - p) / (T - t - 1) for a class (x_t, t).
Vec2 scaled_displacement(const WalkerSpec& spec, Offset x_t, int t);

/// Sufficient vector from a length-4 log-prob vector:
/// v = 1/2 (log p_L - log p_R, log p_D - log p_U).
/// Invariant under adding a constant to all entries. Throws
/// DegenerateDistributionError on any -inf entry.
Vec2 suff_vec_from_logprobs(const LogProbs4& logp);

/// Mean-centered log probabilities (entries sum to zero). Throws
/// DegenerateDistributionError on any -inf entry.
LogProbs4 centered_logprobs(const LogProbs4& logp);

/// Softmax over the four step logits -v . Delta_c, order (L,R,D,U).
std::array<double, 4> softmax_from_v(Vec2 v);

/// Log-domain version of softmax_from_v.
LogProbs4 log_softmax_from_v(Vec2 v);

/// The saddle map F(q)_c = sinh q_c / (cosh q_x + cosh q_y). Its image is
/// the open diamond |u_x| + |u_y| < 1.
Vec2 structure_map_F(Vec2 q);

/// Closed-form Jacobian of F; det equals (cosh q_x + cosh q_y)^-2.
Jacobian2 jacobian_F(Vec2 q);

/// Newton inversion of F with the analytic Jacobian, initialized at q0 = 2u
/// (the diffusive limit). Terminates when |F(q) - u|_inf < tol.
/// Throws DomainError when |u_x|+|u_y| >= 1; NumericalError when 100
/// iterations do not converge.
Vec2 invert_saddle(Vec2 u, double tol = 1e-12);

/// Gaussian (diffusive) approximation: n*log 4 - log(pi n) - |r|^2 / n.
/// Absolute counts carry a parity factor of ~2 (the second saddle at
/// k = (pi,pi) is dropped); probability RATIOS are accurate, absolute
/// counts are not. Tests and callers must only rely on ratios.
double gaussian_log_count(int n, Offset r);

/// Point-mass belief at (position, t) pushed through the linear
/// belief-to-predictive map: returns the exact next-step probabilities.
/// Throws DomainError for positions without a valid completion.
std::array<double, 4> belief_to_predictive(const GreensTable& table, const WalkerSpec& spec,
                                           Offset position, int t);

/// General belief (weights over positions at step t) through the same linear
/// map. Weights must be nonnegative and sum to 1.
std::array<double, 4> belief_to_predictive(const GreensTable& table, const WalkerSpec& spec,
                                           std::span<const std::pair<Offset, double>> belief,
                                           int t);

}  // namespace gridwalk

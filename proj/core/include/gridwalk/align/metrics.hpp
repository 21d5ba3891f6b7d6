#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gridwalk/errors.hpp"

namespace gridwalk::align {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// The one place that fixes the "weighted-centered and scaled" convention:
/// weights are normalized to sum 1, the weighted mean is subtracted, then
/// each row is scaled by sqrt(w) so inner products realize the weighted
/// covariance. Centering happens before scaling.
MatrixXd weighted_center_scale(const MatrixXd& x, const VectorXd& weights);

/// Ridge jitter applied to all normal-equation solves.
inline constexpr double kRidgeJitter = 1e-10;

struct AffineProbe {
  MatrixXd W;  // target_dim x act_dim
  VectorXd b;  // target_dim
};

/// Weighted least-squares affine map acts -> targets. Weight normalization
/// makes the fit exactly invariant to rescaling all weights.
AffineProbe fit_affine_probe(const MatrixXd& acts, const MatrixXd& targets,
                             const VectorXd& weights);

/// Leave-one-group-out cross-validated weighted R^2: refit per held-out
/// group, pool weighted residuals, compare against the weighted global
/// target mean. Requires at least two distinct groups.
double logo_cv_r2(const MatrixXd& acts, const MatrixXd& targets, const VectorXd& weights,
                  const std::vector<int>& groups);

/// Linear centered kernel alignment between weighted-centered/scaled
/// representations: |A^T L|_F^2 / (|L^T L|_F |A^T A|_F).
double lcka(const MatrixXd& acts, const MatrixXd& targets, const VectorXd& weights);

struct PcaResult {
  VectorXd spectrum;    // explained-variance ratios, descending, sums to 1
  MatrixXd components;  // columns are principal directions
  int dims_99 = 1;      // smallest k with cumulative ratio >= 0.99
};

/// Eigendecomposition of the weighted covariance.
PcaResult weighted_pca(const MatrixXd& acts, const VectorXd& weights);

struct ProcrustesResult {
  MatrixXd rotation;      // orthogonal, det +-1
  double scale = 1.0;     // uniform scale (1 unless requested)
  double det_sign = 1.0;  // sign of det(rotation); reflections are permitted
  double residual = 0.0;  // weighted Frobenius distance after alignment
};

/// Orthogonal matrix minimizing the weighted Frobenius distance
/// |source * R - target|, via SVD of the weighted cross-covariance.
ProcrustesResult procrustes_align(const MatrixXd& source, const MatrixXd& target,
                                  const VectorXd& weights, bool with_scale = false);

}  // namespace gridwalk::align

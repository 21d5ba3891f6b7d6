#include "gridwalk/align/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace gridwalk::align {

namespace {

VectorXd normalized_weights(const VectorXd& weights, Eigen::Index rows) {
  if (weights.size() != rows)
    throw ArgumentError("alignment: weight count does not match row count");
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw ArgumentError("alignment: negative weight");
    total += weights[i];
  }
  if (total <= 0.0) throw ArgumentError("alignment: weights must not all be zero");
  return weights / total;
}

}  // namespace

MatrixXd weighted_center_scale(const MatrixXd& x, const VectorXd& weights) {
  const VectorXd w = normalized_weights(weights, x.rows());
  const Eigen::RowVectorXd mean = w.transpose() * x;
  MatrixXd out = x.rowwise() - mean;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) *= std::sqrt(w[i]);
  return out;
}

AffineProbe fit_affine_probe(const MatrixXd& acts, const MatrixXd& targets,
                             const VectorXd& weights) {
  if (acts.rows() != targets.rows())
    throw ArgumentError("fit_affine_probe: acts/targets row mismatch");
  const VectorXd w = normalized_weights(weights, acts.rows());
  const Eigen::Index d = acts.cols();

  MatrixXd xa(acts.rows(), d + 1);
  xa.leftCols(d) = acts;
  xa.col(d).setOnes();
  for (Eigen::Index i = 0; i < xa.rows(); ++i) xa.row(i) *= std::sqrt(w[i]);
  MatrixXd ys = targets;
  for (Eigen::Index i = 0; i < ys.rows(); ++i) ys.row(i) *= std::sqrt(w[i]);

  MatrixXd gram = xa.transpose() * xa;
  gram.diagonal().array() += kRidgeJitter;
  const MatrixXd rhs = xa.transpose() * ys;
  const MatrixXd theta = gram.ldlt().solve(rhs);  // (d+1) x target_dim

  AffineProbe probe;
  probe.W = theta.topRows(d).transpose();
  probe.b = theta.row(d).transpose();
  return probe;
}

double logo_cv_r2(const MatrixXd& acts, const MatrixXd& targets, const VectorXd& weights,
                  const std::vector<int>& groups) {
  if (acts.rows() != targets.rows() ||
      static_cast<Eigen::Index>(groups.size()) != acts.rows())
    throw ArgumentError("logo_cv_r2: shape mismatch");
  const VectorXd w = normalized_weights(weights, acts.rows());

  std::map<int, std::vector<Eigen::Index>> by_group;
  for (Eigen::Index i = 0; i < acts.rows(); ++i) by_group[groups[i]].push_back(i);
  if (by_group.size() < 2) throw ArgumentError("logo_cv_r2: needs at least two groups");

  const Eigen::Index d = acts.cols();
  MatrixXd xa(acts.rows(), d + 1);
  xa.leftCols(d) = acts;
  xa.col(d).setOnes();
  for (Eigen::Index i = 0; i < xa.rows(); ++i) xa.row(i) *= std::sqrt(w[i]);
  MatrixXd ys = targets;
  for (Eigen::Index i = 0; i < ys.rows(); ++i) ys.row(i) *= std::sqrt(w[i]);

  const MatrixXd gram_total = xa.transpose() * xa;
  const MatrixXd rhs_total = xa.transpose() * ys;

  double ss_res = 0.0;
  for (const auto& [gid, rows] : by_group) {
    MatrixXd xg(rows.size(), d + 1), yg(rows.size(), targets.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      xg.row(static_cast<Eigen::Index>(k)) = xa.row(rows[k]);
      yg.row(static_cast<Eigen::Index>(k)) = ys.row(rows[k]);
    }
    MatrixXd gram = gram_total - xg.transpose() * xg;
    gram.diagonal().array() += kRidgeJitter;
    const MatrixXd rhs = rhs_total - xg.transpose() * yg;
    const MatrixXd theta = gram.ldlt().solve(rhs);
    // Held-out weighted residuals; xg/yg already carry sqrt(w).
    ss_res += (xg * theta - yg).squaredNorm();
  }

  const Eigen::RowVectorXd mean = w.transpose() * targets;
  double ss_tot = 0.0;
  for (Eigen::Index i = 0; i < targets.rows(); ++i)
    ss_tot += w[i] * (targets.row(i) - mean).squaredNorm();
  if (ss_tot <= 0.0) throw StateError("logo_cv_r2: degenerate targets (zero variance)");
  return 1.0 - ss_res / ss_tot;
}

double lcka(const MatrixXd& acts, const MatrixXd& targets, const VectorXd& weights) {
  if (acts.rows() != targets.rows()) throw ArgumentError("lcka: row mismatch");
  const MatrixXd a = weighted_center_scale(acts, weights);
  const MatrixXd l = weighted_center_scale(targets, weights);
  const double cross = (a.transpose() * l).squaredNorm();
  const double na = (a.transpose() * a).norm();
  const double nl = (l.transpose() * l).norm();
  if (na == 0.0 || nl == 0.0)
    throw StateError("lcka: undefined for an all-zero representation");
  return cross / (na * nl);
}

PcaResult weighted_pca(const MatrixXd& acts, const VectorXd& weights) {
  if (acts.rows() < 2) throw ArgumentError("weighted_pca: needs at least two rows");
  const MatrixXd a = weighted_center_scale(acts, weights);
  const MatrixXd cov = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);

  const Eigen::Index d = cov.rows();
  PcaResult res;
  res.spectrum.resize(d);
  res.components.resize(d, d);
  // SelfAdjointEigenSolver sorts ascending; flip to descending.
  for (Eigen::Index k = 0; k < d; ++k) {
    res.spectrum[k] = std::max(0.0, eig.eigenvalues()[d - 1 - k]);
    res.components.col(k) = eig.eigenvectors().col(d - 1 - k);
  }
  const double total = res.spectrum.sum();
  if (total > 0.0) {
    res.spectrum /= total;
    double cum = 0.0;
    res.dims_99 = static_cast<int>(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      cum += res.spectrum[k];
      if (cum >= 0.99) {
        res.dims_99 = static_cast<int>(k + 1);
        break;
      }
    }
  } else {
    res.spectrum.setZero();
    res.dims_99 = 1;
  }
  return res;
}

ProcrustesResult procrustes_align(const MatrixXd& source, const MatrixXd& target,
                                  const VectorXd& weights, bool with_scale) {
  if (source.rows() != target.rows() || source.cols() != target.cols())
    throw ArgumentError("procrustes_align: shape mismatch");
  const MatrixXd a = weighted_center_scale(source, weights);
  const MatrixXd b = weighted_center_scale(target, weights);
  if (a.norm() == 0.0 || b.norm() == 0.0)
    throw StateError("procrustes_align: undefined for degenerate (zero) inputs");

  const MatrixXd cross = a.transpose() * b;
  Eigen::JacobiSVD<MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);

  ProcrustesResult res;
  res.rotation = svd.matrixU() * svd.matrixV().transpose();
  res.det_sign = res.rotation.determinant() < 0.0 ? -1.0 : 1.0;
  if (with_scale) res.scale = svd.singularValues().sum() / a.squaredNorm();
  res.residual = (res.scale * a * res.rotation - b).norm();
  return res;
}

}  // namespace gridwalk::align

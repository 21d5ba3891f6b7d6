#pragma once

#include <map>
#include <string>

#include "gridwalk/align/metrics.hpp"
#include "gridwalk/dataset.hpp"
#include "gridwalk/nn/model.hpp"
#include "gridwalk/predictive.hpp"

namespace gridwalk::align {

/// All valid prefixes s_t with t in [min_t, tau] whose class has a strictly
/// positive next-step distribution (deterministic late-time classes carry no
/// finite centered-log-prob target and are excluded). Rows are ordered
/// class-major so group rows stay contiguous; every member of a class shares
/// the class target and the weight 1/degeneracy.
struct PrefixSet {
  std::vector<TokenSequence> prefixes;  // row order
  std::vector<int> group;               // row -> class index
  std::vector<int> length;              // row -> t
  VectorXd weights;                     // row -> 1/n(s_t, t)
  MatrixXd targets;                     // row -> centered log-prob vector
  std::vector<PrefixClass> classes;     // class index -> (x_t, t) data
  MatrixXd class_targets;               // class index -> centered log-probs

  std::size_t rows() const { return prefixes.size(); }
};

PrefixSet build_prefix_set(const PrefixDistribution& dist, int min_t = 1);

/// Activation rows for every prefix in `ps` at its final position, per
/// capture point. Forward passes run per prefix length in fixed-size chunks;
/// capture does not perturb the forward computation.
template <typename T>
std::map<std::string, MatrixXd> capture_representations(nn::Transformer<T>& model,
                                                        const PrefixSet& ps,
                                                        std::size_t chunk = 2048);

/// Per-class weighted mean of activation rows (class-major contiguity makes
/// this a per-block column mean). Used for activation dumps and PC scatter.
MatrixXd class_mean_activations(const MatrixXd& acts, const PrefixSet& ps);

struct PointReport {
  std::string point;
  double cv_r2 = 0.0;
  double lcka = 0.0;
  int dims_99 = 0;
  std::vector<double> spectrum;  // explained-variance ratios, descending
};

/// The per-checkpoint experiment output: one record per capture point.
struct AlignmentReport {
  std::uint64_t step = 0;
  std::vector<PointReport> points;
};

AlignmentReport analyze_representations(const std::map<std::string, MatrixXd>& acts,
                                        const PrefixSet& ps, std::uint64_t step);

extern template std::map<std::string, MatrixXd> capture_representations<double>(
    nn::Transformer<double>&, const PrefixSet&, std::size_t);
extern template std::map<std::string, MatrixXd> capture_representations<float>(
    nn::Transformer<float>&, const PrefixSet&, std::size_t);

}  // namespace gridwalk::align

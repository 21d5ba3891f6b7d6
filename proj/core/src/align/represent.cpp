#include "gridwalk/align/represent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridwalk::align {

PrefixSet build_prefix_set(const PrefixDistribution& dist, int min_t) {
  const auto& spec = dist.spec();
  const auto& table = dist.table();
  if (min_t < 1 || min_t > spec.prefix_len)
    throw ArgumentError("build_prefix_set: min_t outside 1..tau");

  PrefixSet ps;
  std::map<std::pair<int, std::pair<int, int>>, int> class_index;  // (t,(x,y)) -> idx
  for (int t = min_t; t <= spec.prefix_len; ++t) {
    for (const auto& cls : enumerate_classes_at(table, spec, t)) {
      const bool finite = std::all_of(cls.next_step_logp.begin(), cls.next_step_logp.end(),
                                      [](double lp) { return lp != kNegInf; });
      if (!finite) continue;  // deterministic late-time class: no finite target
      class_index[{t, {cls.position.x, cls.position.y}}] =
          static_cast<int>(ps.classes.size());
      ps.classes.push_back(cls);
    }
  }

  ps.class_targets.resize(static_cast<Eigen::Index>(ps.classes.size()), 4);
  for (std::size_t k = 0; k < ps.classes.size(); ++k) {
    const LogProbs4 lbar = centered_logprobs(ps.classes[k].next_step_logp);
    for (int c = 0; c < 4; ++c) ps.class_targets(static_cast<Eigen::Index>(k), c) = lbar[c];
  }

  // Enumerate member prefixes per class via DFS over nonzero next-step
  // branches, bucketed by class to keep groups contiguous.
  std::vector<std::vector<TokenSequence>> buckets(ps.classes.size());
  std::vector<std::uint8_t> tokens;
  struct Frame {
    LogProbs4 logp;
    int symbol;
    Offset pos;
  };
  std::vector<Frame> stack;
  stack.push_back({next_step_log_probs(table, spec, {0, 0}, 0), 0, {0, 0}});
  tokens.clear();
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.symbol >= kNumSymbols) {
      stack.pop_back();
      if (!tokens.empty()) tokens.pop_back();
      if (!stack.empty()) ++stack.back().symbol;
      continue;
    }
    if (f.logp[f.symbol] == kNegInf) {
      ++f.symbol;
      continue;
    }
    const Offset next = f.pos + displacement(f.symbol);
    tokens.push_back(static_cast<std::uint8_t>(f.symbol));
    const int t = static_cast<int>(tokens.size());
    if (t >= min_t) {
      const auto it = class_index.find({t, {next.x, next.y}});
      if (it != class_index.end()) buckets[it->second].push_back(TokenSequence{tokens});
    }
    if (t < spec.prefix_len) {
      stack.push_back({next_step_log_probs(table, spec, next, t), 0, next});
    } else {
      tokens.pop_back();
      ++f.symbol;
    }
  }

  std::size_t total = 0;
  for (const auto& b : buckets) total += b.size();
  ps.prefixes.reserve(total);
  ps.group.reserve(total);
  ps.length.reserve(total);
  ps.weights.resize(static_cast<Eigen::Index>(total));
  ps.targets.resize(static_cast<Eigen::Index>(total), 4);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    const double w = 1.0 / static_cast<double>(ps.classes[k].degeneracy);
    for (auto& seq : buckets[k]) {
      ps.prefixes.push_back(std::move(seq));
      ps.group.push_back(static_cast<int>(k));
      ps.length.push_back(ps.classes[k].step);
      ps.weights[row] = w;
      ps.targets.row(row) = ps.class_targets.row(static_cast<Eigen::Index>(k));
      ++row;
    }
  }
  return ps;
}

template <typename T>
std::map<std::string, MatrixXd> capture_representations(nn::Transformer<T>& model,
                                                        const PrefixSet& ps,
                                                        std::size_t chunk) {
  std::map<std::string, MatrixXd> out;
  const auto n = static_cast<Eigen::Index>(ps.rows());

  // Process rows with equal prefix length together (row order is preserved
  // in the output; only the forward batching is length-grouped).
  std::vector<std::size_t> order(ps.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ps.length[a] < ps.length[b];
  });

  std::size_t at = 0;
  while (at < order.size()) {
    const int t = ps.length[order[at]];
    std::size_t end = at;
    while (end < order.size() && ps.length[order[end]] == t) ++end;
    for (std::size_t begin = at; begin < end; begin += chunk) {
      const std::size_t stop = std::min(begin + chunk, end);
      std::vector<TokenSequence> seqs;
      seqs.reserve(stop - begin);
      for (std::size_t k = begin; k < stop; ++k) seqs.push_back(ps.prefixes[order[k]]);
      nn::ActivationSet acts;
      model.forward(nn::TokenBatch::from(seqs), &acts);
      for (const auto& [name, mat] : acts) {
        auto [it, inserted] = out.try_emplace(name);
        if (inserted) it->second.resize(n, mat.cols());
        for (std::size_t k = begin; k < stop; ++k) {
          // activation at the prefix's final position
          it->second.row(static_cast<Eigen::Index>(order[k])) =
              mat.row(static_cast<Eigen::Index>((k - begin) * t + t - 1));
        }
      }
    }
    at = end;
  }
  return out;
}

MatrixXd class_mean_activations(const MatrixXd& acts, const PrefixSet& ps) {
  MatrixXd means = MatrixXd::Zero(static_cast<Eigen::Index>(ps.classes.size()), acts.cols());
  VectorXd mass = VectorXd::Zero(static_cast<Eigen::Index>(ps.classes.size()));
  for (Eigen::Index r = 0; r < acts.rows(); ++r) {
    means.row(ps.group[r]) += ps.weights[r] * acts.row(r);
    mass[ps.group[r]] += ps.weights[r];
  }
  for (Eigen::Index k = 0; k < means.rows(); ++k) {
    if (mass[k] > 0.0) means.row(k) /= mass[k];
  }
  return means;
}

AlignmentReport analyze_representations(const std::map<std::string, MatrixXd>& acts,
                                        const PrefixSet& ps, std::uint64_t step) {
  AlignmentReport rep;
  rep.step = step;
  for (const auto& [name, mat] : acts) {
    PointReport pr;
    pr.point = name;
    pr.cv_r2 = logo_cv_r2(mat, ps.targets, ps.weights, ps.group);
    pr.lcka = lcka(mat, ps.targets, ps.weights);
    const PcaResult pca = weighted_pca(mat, ps.weights);
    pr.dims_99 = pca.dims_99;
    pr.spectrum.assign(pca.spectrum.data(), pca.spectrum.data() + pca.spectrum.size());
    rep.points.push_back(std::move(pr));
  }
  return rep;
}

template std::map<std::string, MatrixXd> capture_representations<double>(
    nn::Transformer<double>&, const PrefixSet&, std::size_t);
template std::map<std::string, MatrixXd> capture_representations<float>(
    nn::Transformer<float>&, const PrefixSet&, std::size_t);

}  // namespace gridwalk::align

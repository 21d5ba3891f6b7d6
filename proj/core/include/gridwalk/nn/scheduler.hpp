#pragma once

#include <cmath>
#include <limits>

#include "gridwalk/errors.hpp"

namespace gridwalk::nn {

struct SchedulerSettings {
  double factor = 0.5;
  int patience = 1000;    // monitored rounds without relative improvement
  int cooldown = 200;     // rounds after a reduction during which no further cut happens
  double threshold = 1e-6;  // relative improvement threshold, min mode
};

/// Reduce-on-plateau learning-rate state machine (min mode, relative
/// threshold). A metric improves when it drops below best*(1 - threshold);
/// `patience` non-improving rounds halve the LR, then `cooldown` rounds
/// suppress further reductions.
class PlateauScheduler {
 public:
  PlateauScheduler() = default;
  PlateauScheduler(double initial_lr, SchedulerSettings s) : settings_(s), lr_(initial_lr) {}

  double lr() const { return lr_; }
  double best() const { return best_; }
  int bad_rounds() const { return bad_; }
  int cooldown_left() const { return cooldown_; }
  const SchedulerSettings& settings() const { return settings_; }

  void step(double metric) {
    if (!std::isfinite(metric)) throw ArgumentError("PlateauScheduler: metric must be finite");
    const bool improved = metric < best_ * (1.0 - settings_.threshold);
    if (improved) best_ = metric;
    if (cooldown_ > 0) {
      --cooldown_;
      bad_ = 0;
    } else if (improved) {
      bad_ = 0;
    } else {
      ++bad_;
    }
    if (bad_ >= settings_.patience) {
      lr_ *= settings_.factor;
      cooldown_ = settings_.cooldown;
      bad_ = 0;
    }
  }

  // Checkpoint plumbing.
  void restore(double lr, double best, int bad, int cooldown) {
    lr_ = lr;
    best_ = best;
    bad_ = bad;
    cooldown_ = cooldown;
  }

 private:
  SchedulerSettings settings_;
  double lr_ = 5e-5;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
  int cooldown_ = 0;
};

}  // namespace gridwalk::nn

#pragma once

#include <functional>
#include <optional>

#include "gridwalk/dataset.hpp"
#include "gridwalk/nn/checkpoint.hpp"

namespace gridwalk::nn {

struct TrainSettings {
  int epochs = 2000;
  int minibatches_per_epoch = 50;
  int batch_size = 256;
  std::uint64_t seed = 0;
  double initial_lr = 1e-3;
  AdamHyper adam;
  SchedulerSettings scheduler;
  int validate_every_epochs = 50;
  int checkpoint_every_epochs = 100;
  double stop_excess = 0.0;  // > 0: stop once mean validation excess drops below
  std::size_t eval_batch = 4096;
};

/// One metric-log row, emitted at every validation round.
struct MetricRow {
  std::uint64_t step = 0;
  int epoch = 0;
  double train_loss = 0.0;  // mean over minibatches since the previous row
  double val_loss = 0.0;
  double val_excess_mean = 0.0;
  std::vector<double> excess_per_pos;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<MetricRow> rows;
  double final_excess = 0.0;
  std::uint64_t final_step = 0;
  bool stopped_early = false;
};

/// Seeded, deterministic training loop: epochs of fixed-size minibatches
/// drawn with per-step seed streams, Adam updates, exact validation on a
/// cadence, plateau scheduling on the validation loss, and a divergence
/// guard at 10*log(4).
template <typename T>
class Trainer {
 public:
  /// Fresh model (validation round 0 is emitted before any update).
  Trainer(ModelConfig cfg, TrainSettings settings, const PrefixDistribution& dist);

  /// Resume from checkpointed state (no round-0 validation; the seed stream
  /// continues from the stored global step).
  Trainer(ModelState<T> state, TrainSettings settings, const PrefixDistribution& dist);

  Transformer<T>& model() { return model_; }
  const TrainSettings& settings() const { return settings_; }
  std::uint64_t global_step() const { return state_step_; }

  ModelState<T> snapshot_state() const;
  ValidationReport validate();

  /// Callbacks fire after the row/checkpoint event is fully formed.
  std::function<void(const MetricRow&)> on_validation;
  std::function<void(std::uint64_t step)> on_checkpoint;

  TrainResult run();

 private:
  MetricRow make_row(int epoch, double train_loss, const ValidationReport& rep) const;

  TrainSettings settings_;
  const PrefixDistribution& dist_;
  Transformer<T> model_;
  AdamState<T> adam_;
  AdamHyper hyper_;
  PlateauScheduler scheduler_;
  std::uint64_t state_step_ = 0;
  bool resumed_ = false;
};

extern template class Trainer<double>;
extern template class Trainer<float>;

}  // namespace gridwalk::nn

#include "gridwalk/nn/train.hpp"

#include <cmath>

namespace gridwalk::nn {

namespace {
constexpr double kDivergenceLoss = 13.862943611198906;  // 10 * log 4

void check_settings(const TrainSettings& s) {
  if (s.epochs < 0 || s.minibatches_per_epoch < 1 || s.batch_size < 1)
    throw ArgumentError("TrainSettings: bad epoch/minibatch/batch sizes");
  if (s.validate_every_epochs < 1 || s.checkpoint_every_epochs < 1)
    throw ArgumentError("TrainSettings: cadences must be >= 1");
  if (s.checkpoint_every_epochs % s.validate_every_epochs != 0)
    throw ArgumentError(
        "TrainSettings: checkpoint cadence must be a multiple of the validation cadence "
        "(keeps resumed metric logs identical)");
}
}  // namespace

template <typename T>
Trainer<T>::Trainer(ModelConfig cfg, TrainSettings settings, const PrefixDistribution& dist)
    : settings_(settings),
      dist_(dist),
      model_(cfg, settings.seed),
      adam_(model_.params().size()),
      hyper_(settings.adam),
      scheduler_(settings.initial_lr, settings.scheduler) {
  check_settings(settings_);
  if (cfg.context != dist.prefix_len())
    throw ArgumentError("Trainer: model context must equal the dataset prefix length");
}

template <typename T>
Trainer<T>::Trainer(ModelState<T> state, TrainSettings settings, const PrefixDistribution& dist)
    : settings_(settings),
      dist_(dist),
      model_(state.config, /*init_seed=*/0),
      adam_(model_.params().size()),
      hyper_(state.hyper),
      scheduler_(state.scheduler),
      state_step_(state.global_step),
      resumed_(true) {
  check_settings(settings_);
  if (state.config.context != dist.prefix_len())
    throw ArgumentError("Trainer: model context must equal the dataset prefix length");
  model_.params().data() = std::move(state.params.data());
  adam_ = std::move(state.adam);
}

template <typename T>
ModelState<T> Trainer<T>::snapshot_state() const {
  ModelState<T> st;
  st.config = model_.config();
  st.params = ParamArena<T>(model_.layout());
  st.params.data() = model_.params().data();
  st.adam = adam_;
  st.hyper = hyper_;
  st.scheduler = scheduler_;
  st.global_step = state_step_;
  return st;
}

template <typename T>
ValidationReport Trainer<T>::validate() {
  return expected_cross_entropy(
      dist_,
      [this](std::span<const TokenSequence> seqs) { return model_.batch_log_probs(seqs); },
      settings_.eval_batch);
}

template <typename T>
MetricRow Trainer<T>::make_row(int epoch, double train_loss,
                               const ValidationReport& rep) const {
  MetricRow row;
  row.step = state_step_;
  row.epoch = epoch;
  row.train_loss = train_loss;
  row.val_loss = rep.mean_loss;
  row.val_excess_mean = rep.mean_excess;
  row.excess_per_pos = rep.excess_per_pos;
  row.lr = scheduler_.lr();
  return row;
}

template <typename T>
TrainResult Trainer<T>::run() {
  TrainResult result;
  const int M = settings_.minibatches_per_epoch;

  auto emit = [&](int epoch, double train_loss) {
    const ValidationReport rep = validate();
    scheduler_.step(rep.mean_loss);
    const MetricRow row = make_row(epoch, train_loss, rep);
    result.rows.push_back(row);
    if (on_validation) on_validation(row);
    result.final_excess = rep.mean_excess;
    return rep.mean_excess;
  };

  int start_epoch = static_cast<int>(state_step_ / static_cast<std::uint64_t>(M));
  if (!resumed_) {
    const double excess0 = emit(0, 0.0);
    if (settings_.stop_excess > 0.0 && excess0 < settings_.stop_excess) {
      result.stopped_early = true;
      result.final_step = state_step_;
      return result;
    }
  }

  double interval_loss = 0.0;
  int interval_count = 0;
  for (int epoch = start_epoch + 1; epoch <= settings_.epochs; ++epoch) {
    for (int mb = 0; mb < M; ++mb) {
      const auto batch_seqs =
          sample_batch(dist_, static_cast<std::size_t>(settings_.batch_size),
                       SeedStream{settings_.seed, state_step_});
      const TokenBatch batch = TokenBatch::from(batch_seqs);
      const double loss = model_.loss_and_grads(batch);
      if (!std::isfinite(loss) || loss > kDivergenceLoss)
        throw NumericalError("train: divergence at step " + std::to_string(state_step_) +
                             " (loss " + std::to_string(loss) + ")");
      adam_step(model_.params().data(), model_.grads().data(), adam_, scheduler_.lr(), hyper_);
      ++state_step_;
      interval_loss += loss;
      ++interval_count;
    }

    const bool last_epoch = (epoch == settings_.epochs);
    if (epoch % settings_.validate_every_epochs == 0 || last_epoch) {
      const double mean_train = interval_count ? interval_loss / interval_count : 0.0;
      interval_loss = 0.0;
      interval_count = 0;
      const double excess = emit(epoch, mean_train);
      const bool stop = settings_.stop_excess > 0.0 && excess < settings_.stop_excess;
      if (epoch % settings_.checkpoint_every_epochs == 0 || last_epoch || stop) {
        if (on_checkpoint) on_checkpoint(state_step_);
      }
      if (stop) {
        result.stopped_early = true;
        break;
      }
    }
  }

  result.final_step = state_step_;
  return result;
}

template class Trainer<double>;
template class Trainer<float>;

}  // namespace gridwalk::nn

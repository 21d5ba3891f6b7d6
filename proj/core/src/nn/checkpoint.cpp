#include "gridwalk/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <type_traits>

#include "gridwalk/io.hpp"

namespace gridwalk::nn {

namespace {

constexpr char kMagic[4] = {'G', 'W', 'C', 'K'};

template <typename T>
constexpr std::uint32_t precision_flag() {
  return std::is_same_v<T, double> ? 0u : 1u;
}

template <typename T>
void write_blob(std::ostream& out, const std::vector<T>& v) {
  if constexpr (std::is_same_v<T, double>) {
    io::write_f64_block(out, v.data(), v.size());
  } else {
    for (T x : v) io::write_f64(out, static_cast<double>(x));
  }
}

template <typename T>
void read_blob(std::istream& in, std::vector<T>& v) {
  if constexpr (std::is_same_v<T, double>) {
    io::read_f64_block(in, v.data(), v.size());
  } else {
    for (auto& x : v) x = static_cast<T>(io::read_f64(in));
  }
}

}  // namespace

template <typename T>
void checkpoint_save(const ModelState<T>& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("checkpoint_save: cannot open " + path.string());
  out.write(kMagic, 4);
  io::write_u32(out, kCheckpointVersion);
  io::write_u32(out, static_cast<std::uint32_t>(state.config.layers));
  io::write_u32(out, static_cast<std::uint32_t>(state.config.heads));
  io::write_u32(out, static_cast<std::uint32_t>(state.config.d_model));
  io::write_u32(out, static_cast<std::uint32_t>(state.config.d_head));
  io::write_u32(out, static_cast<std::uint32_t>(state.config.d_mlp));
  io::write_u32(out, static_cast<std::uint32_t>(state.config.context));
  io::write_u32(out, precision_flag<T>());
  io::write_u64(out, state.params.size());
  io::write_u64(out, state.global_step);
  io::write_u64(out, state.adam.step);
  io::write_f64(out, state.hyper.beta1);
  io::write_f64(out, state.hyper.beta2);
  io::write_f64(out, state.hyper.eps);
  io::write_f64(out, state.hyper.weight_decay);
  const auto& sch = state.scheduler;
  io::write_f64(out, sch.settings().factor);
  io::write_f64(out, sch.settings().threshold);
  io::write_u32(out, static_cast<std::uint32_t>(sch.settings().patience));
  io::write_u32(out, static_cast<std::uint32_t>(sch.settings().cooldown));
  io::write_f64(out, sch.lr());
  io::write_f64(out, sch.best());
  io::write_u32(out, static_cast<std::uint32_t>(sch.bad_rounds()));
  io::write_u32(out, static_cast<std::uint32_t>(sch.cooldown_left()));
  io::write_u64(out, state.config_hash);
  write_blob(out, state.params.data());
  write_blob(out, state.adam.m);
  write_blob(out, state.adam.v);
  if (!out) throw CorruptionError("checkpoint_save: short write to " + path.string());
}

template <typename T>
ModelState<T> checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("checkpoint_load: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("checkpoint_load: bad magic in " + path.string());
  const auto version = io::read_u32(in);
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint_load: unsupported version " + std::to_string(version));

  ModelState<T> state;
  state.config.layers = static_cast<int>(io::read_u32(in));
  state.config.heads = static_cast<int>(io::read_u32(in));
  state.config.d_model = static_cast<int>(io::read_u32(in));
  state.config.d_head = static_cast<int>(io::read_u32(in));
  state.config.d_mlp = static_cast<int>(io::read_u32(in));
  state.config.context = static_cast<int>(io::read_u32(in));
  const auto precision = io::read_u32(in);
  if (!in) throw CorruptionError("checkpoint_load: truncated header in " + path.string());
  if (precision != precision_flag<T>())
    throw FormatError("checkpoint_load: precision flag does not match the requested scalar");
  state.config.validate();

  const auto param_count = io::read_u64(in);
  const ParamLayout layout(state.config);
  if (param_count != layout.total())
    throw FormatError("checkpoint_load: parameter count does not match the config");

  state.global_step = io::read_u64(in);
  state.adam.step = io::read_u64(in);
  state.hyper.beta1 = io::read_f64(in);
  state.hyper.beta2 = io::read_f64(in);
  state.hyper.eps = io::read_f64(in);
  state.hyper.weight_decay = io::read_f64(in);
  SchedulerSettings sch_settings;
  sch_settings.factor = io::read_f64(in);
  sch_settings.threshold = io::read_f64(in);
  sch_settings.patience = static_cast<int>(io::read_u32(in));
  sch_settings.cooldown = static_cast<int>(io::read_u32(in));
  const double lr = io::read_f64(in);
  const double best = io::read_f64(in);
  const int bad = static_cast<int>(io::read_u32(in));
  const int cooldown_left = static_cast<int>(io::read_u32(in));
  state.scheduler = PlateauScheduler(lr, sch_settings);
  state.scheduler.restore(lr, best, bad, cooldown_left);
  state.config_hash = io::read_u64(in);

  state.params = ParamArena<T>(layout);
  state.adam.m.assign(param_count, T(0));
  state.adam.v.assign(param_count, T(0));
  read_blob(in, state.params.data());
  read_blob(in, state.adam.m);
  read_blob(in, state.adam.v);
  if (!in) throw CorruptionError("checkpoint_load: truncated blobs in " + path.string());
  return state;
}

template void checkpoint_save<double>(const ModelState<double>&, const std::filesystem::path&);
template void checkpoint_save<float>(const ModelState<float>&, const std::filesystem::path&);
template ModelState<double> checkpoint_load<double>(const std::filesystem::path&);
template ModelState<float> checkpoint_load<float>(const std::filesystem::path&);

}  // namespace gridwalk::nn

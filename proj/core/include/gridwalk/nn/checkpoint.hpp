#pragma once

#include <cstdint>
#include <filesystem>

#include "gridwalk/nn/adam.hpp"
#include "gridwalk/nn/model.hpp"
#include "gridwalk/nn/scheduler.hpp"

namespace gridwalk::nn {

/// Everything needed to resume training bit-exactly: parameters, optimizer
/// moments, counters, scheduler state. Blobs are always stored as little-
/// endian float64 regardless of the in-memory precision.
template <typename T>
struct ModelState {
  ModelConfig config;
  ParamArena<T> params;
  AdamState<T> adam;
  AdamHyper hyper;
  PlateauScheduler scheduler;
  std::uint64_t global_step = 0;
  std::uint64_t config_hash = 0;  // harness stamp; 0 when standalone
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void checkpoint_save(const ModelState<T>& state, const std::filesystem::path& path);

/// Throws FormatError on magic/version mismatch, CorruptionError on
/// truncation. The stored precision flag must match T.
template <typename T>
ModelState<T> checkpoint_load(const std::filesystem::path& path);

extern template void checkpoint_save<double>(const ModelState<double>&,
                                             const std::filesystem::path&);
extern template void checkpoint_save<float>(const ModelState<float>&,
                                            const std::filesystem::path&);
extern template ModelState<double> checkpoint_load<double>(const std::filesystem::path&);
extern template ModelState<float> checkpoint_load<float>(const std::filesystem::path&);

}  // namespace gridwalk::nn

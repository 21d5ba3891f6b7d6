#pragma once

#include <cstdint>
#include <random>

namespace gridwalk {

/// splitmix64 mixing step; used to derive stream seeds from (master, stream).
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Identifies one independent pseudo-random stream: a master seed plus a
/// stream index (e.g. the global optimizer step). Two identical SeedStreams
/// always produce identical draws, and distinct stream indices never share
/// generator state, so checkpoint resume replays the exact same batches.
struct SeedStream {
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  std::mt19937_64 make_rng() const {
    return std::mt19937_64(splitmix64(splitmix64(master) ^ splitmix64(stream + 0x51ed2701allu)));
  }
};

/// Uniform double in [0,1) with exactly 53 random bits. Hand-rolled so the
/// draw sequence is identical across standard-library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on uniform01 (no library distribution,
/// same cross-platform reproducibility contract as uniform01).
class NormalSampler {
 public:
  double operator()(std::mt19937_64& rng) {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform01(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gridwalk

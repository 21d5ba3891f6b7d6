#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace gridwalk {

/// A lattice offset (integer pair).
struct Offset {
  int x = 0;
  int y = 0;

  friend constexpr Offset operator+(Offset a, Offset b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Offset operator-(Offset a, Offset b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr bool operator==(Offset a, Offset b) { return a.x == b.x && a.y == b.y; }
  constexpr int l1() const { return (x < 0 ? -x : x) + (y < 0 ? -y : y); }
};

/// A real 2-vector (sufficient vectors, saddle coordinates).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double linf() const { return std::max(std::fabs(x), std::fabs(y)); }
  double l1() const { return std::fabs(x) + std::fabs(y); }
  double norm() const { return std::hypot(x, y); }
};

/// Step symbols in the fixed ordering used everywhere: (L, R, D, U).
enum class Symbol : std::uint8_t { L = 0, R = 1, D = 2, U = 3 };

inline constexpr int kNumSymbols = 4;

/// Unit displacements, indexed by Symbol: L=(-1,0), R=(1,0), D=(0,-1), U=(0,1).
/// The four vectors sum to zero.
inline constexpr std::array<Offset, kNumSymbols> kDisplacements = {
    Offset{-1, 0}, Offset{1, 0}, Offset{0, -1}, Offset{0, 1}};

inline constexpr char kSymbolChars[kNumSymbols + 1] = "LRDU";

constexpr Offset displacement(Symbol c) { return kDisplacements[static_cast<int>(c)]; }
constexpr Offset displacement(int c) { return kDisplacements[c]; }

/// Real-valued rows of the 4x2 displacement matrix D (rows Delta_L..Delta_U).
constexpr Vec2 displacement_vec(int c) {
  return Vec2{static_cast<double>(kDisplacements[c].x), static_cast<double>(kDisplacements[c].y)};
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using LogProbs4 = std::array<double, 4>;

}  // namespace gridwalk

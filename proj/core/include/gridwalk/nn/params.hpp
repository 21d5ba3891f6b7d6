#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "gridwalk/nn/config.hpp"
#include "gridwalk/rng.hpp"

namespace gridwalk::nn {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatX<T>>;
template <typename T>
using ConstMapM = Eigen::Map<const MatX<T>>;

/// Location of one named parameter tensor inside the flat arena.
struct TensorSlot {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

/// Fixed arena layout for a model configuration. The slot order defines the
/// checkpoint blob order and the finite-difference parameter indexing.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelConfig& cfg);

  const std::vector<TensorSlot>& slots() const { return slots_; }
  std::size_t total() const { return total_; }
  const TensorSlot& slot(std::size_t idx) const { return slots_[idx]; }

  // Handles into slots_, resolved once at construction.
  std::size_t tok_embed, pos_embed, lnf_g, lnf_b, w_u, b_u;
  struct LayerSlots {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln2_g, ln2_b, w_in, b_in, w_out, b_out;
  };
  const LayerSlots& layer(int l) const { return layers_[l]; }

 private:
  std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);
  std::vector<TensorSlot> slots_;
  std::vector<LayerSlots> layers_;
  std::size_t total_ = 0;
};

/// Flat parameter (or gradient / moment) arena with named Eigen views.
template <typename T>
class ParamArena {
 public:
  ParamArena() = default;
  explicit ParamArena(const ParamLayout& layout) : data_(layout.total(), T(0)) {}

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }
  std::size_t size() const { return data_.size(); }
  void zero() { std::fill(data_.begin(), data_.end(), T(0)); }

  MapM<T> map(const TensorSlot& s) {
    return MapM<T>(data_.data() + s.offset, s.rows, s.cols);
  }
  ConstMapM<T> map(const TensorSlot& s) const {
    return ConstMapM<T>(data_.data() + s.offset, s.rows, s.cols);
  }

 private:
  std::vector<T> data_;
};

/// Seeded parameter initialization: N(0, d_model^-1/2) for attention/MLP
/// projection weights, N(0, 0.02) for token/position embeddings, gains 1,
/// all biases and the unembedding 0 (a fresh model therefore emits the
/// uniform distribution at every position).
template <typename T>
void init_parameters(const ModelConfig& cfg, const ParamLayout& layout, ParamArena<T>& params,
                     std::uint64_t seed);

}  // namespace gridwalk::nn

#include "gridwalk/nn/params.hpp"

#include <cmath>

namespace gridwalk::nn {

std::size_t ParamLayout::add(const std::string& name, std::size_t rows, std::size_t cols) {
  slots_.push_back(TensorSlot{name, total_, rows, cols});
  total_ += rows * cols;
  return slots_.size() - 1;
}

ParamLayout::ParamLayout(const ModelConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const auto m = static_cast<std::size_t>(cfg.d_mlp);
  const auto v = static_cast<std::size_t>(ModelConfig::vocab);

  tok_embed = add("tok_embed", v, d);
  pos_embed = add("pos_embed", static_cast<std::size_t>(cfg.context), d);
  layers_.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    auto& ls = layers_[l];
    ls.ln1_g = add(p + "ln1.g", 1, d);
    ls.ln1_b = add(p + "ln1.b", 1, d);
    ls.wq = add(p + "attn.wq", d, d);
    ls.bq = add(p + "attn.bq", 1, d);
    ls.wk = add(p + "attn.wk", d, d);
    ls.bk = add(p + "attn.bk", 1, d);
    ls.wv = add(p + "attn.wv", d, d);
    ls.bv = add(p + "attn.bv", 1, d);
    ls.wo = add(p + "attn.wo", d, d);
    ls.bo = add(p + "attn.bo", 1, d);
    ls.ln2_g = add(p + "ln2.g", 1, d);
    ls.ln2_b = add(p + "ln2.b", 1, d);
    ls.w_in = add(p + "mlp.w_in", d, m);
    ls.b_in = add(p + "mlp.b_in", 1, m);
    ls.w_out = add(p + "mlp.w_out", m, d);
    ls.b_out = add(p + "mlp.b_out", 1, d);
  }
  lnf_g = add("ln_final.g", 1, d);
  lnf_b = add("ln_final.b", 1, d);
  w_u = add("unembed.w", d, v);
  b_u = add("unembed.b", 1, v);
}

template <typename T>
void init_parameters(const ModelConfig& cfg, const ParamLayout& layout, ParamArena<T>& params,
                     std::uint64_t seed) {
  params.zero();
  auto rng = SeedStream{seed, 0}.make_rng();
  NormalSampler normal;

  const double proj_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  const double embed_std = 0.02;

  auto fill_normal = [&](const TensorSlot& s, double std) {
    auto m = params.map(s);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        m(i, j) = static_cast<T>(std * normal(rng));
  };
  auto fill_ones = [&](const TensorSlot& s) { params.map(s).setConstant(T(1)); };

  fill_normal(layout.slot(layout.tok_embed), embed_std);
  fill_normal(layout.slot(layout.pos_embed), embed_std);
  for (int l = 0; l < cfg.layers; ++l) {
    const auto& ls = layout.layer(l);
    fill_ones(layout.slot(ls.ln1_g));
    fill_normal(layout.slot(ls.wq), proj_std);
    fill_normal(layout.slot(ls.wk), proj_std);
    fill_normal(layout.slot(ls.wv), proj_std);
    fill_normal(layout.slot(ls.wo), proj_std);
    fill_ones(layout.slot(ls.ln2_g));
    fill_normal(layout.slot(ls.w_in), proj_std);
    fill_normal(layout.slot(ls.w_out), proj_std);
  }
  fill_ones(layout.slot(layout.lnf_g));
  // unembed.w / unembed.b stay zero: the fresh model is exactly uniform.
}

template void init_parameters<double>(const ModelConfig&, const ParamLayout&,
                                      ParamArena<double>&, std::uint64_t);
template void init_parameters<float>(const ModelConfig&, const ParamLayout&, ParamArena<float>&,
                                     std::uint64_t);

}  // namespace gridwalk::nn

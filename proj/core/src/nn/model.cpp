#include "gridwalk/nn/model.hpp"

#include <cmath>
#include <limits>

namespace gridwalk::nn {

namespace {

constexpr double kLnEps = 1e-5;

/// Row-wise LayerNorm statistics: writes the normalized matrix and the
/// per-row 1/sqrt(var + eps).
template <typename T>
void layernorm_rows(const MatX<T>& x, MatX<T>& normed, std::vector<T>& inv_std) {
  const auto rows = x.rows(), cols = x.cols();
  normed.resize(rows, cols);
  inv_std.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const T mu = x.row(r).mean();
    T var = T(0);
    for (Eigen::Index c = 0; c < cols; ++c) {
      const T d = x(r, c) - mu;
      var += d * d;
    }
    var /= static_cast<T>(cols);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(kLnEps));
    inv_std[r] = inv;
    normed.row(r) = (x.row(r).array() - mu) * inv;
  }
}

/// Backward through row-wise LayerNorm (normalization only, no affine):
/// dx = inv * (dn - mean(dn) - n * mean(dn .* n)).
template <typename T>
void layernorm_backward_rows(const MatX<T>& normed, const std::vector<T>& inv_std,
                             const MatX<T>& dnormed, MatX<T>& dx_accum) {
  const auto rows = normed.rows(), cols = normed.cols();
  for (Eigen::Index r = 0; r < rows; ++r) {
    const T mean_dn = dnormed.row(r).mean();
    const T mean_dn_n = (dnormed.row(r).array() * normed.row(r).array()).mean();
    dx_accum.row(r).array() +=
        inv_std[r] * (dnormed.row(r).array() - mean_dn - normed.row(r).array() * mean_dn_n);
  }
}

}  // namespace

TokenBatch TokenBatch::from(std::span<const TokenSequence> seqs) {
  TokenBatch b;
  if (seqs.empty()) return b;
  b.batch = static_cast<int>(seqs.size());
  b.seqlen = static_cast<int>(seqs[0].tokens.size());
  b.tokens.reserve(static_cast<std::size_t>(b.batch) * b.seqlen);
  for (const auto& s : seqs) {
    if (static_cast<int>(s.tokens.size()) != b.seqlen)
      throw ArgumentError("TokenBatch: ragged sequence lengths");
    b.tokens.insert(b.tokens.end(), s.tokens.begin(), s.tokens.end());
  }
  return b;
}

template <typename T>
Transformer<T>::Transformer(ModelConfig cfg, std::uint64_t init_seed)
    : cfg_(cfg), layout_(cfg), params_(layout_), grads_(layout_) {
  init_parameters(cfg_, layout_, params_, init_seed);
}

template <typename T>
void Transformer<T>::run_forward(const TokenBatch& batch, ActivationSet* capture) {
  const int B = batch.batch, S = batch.seqlen;
  if (B <= 0 || S <= 0) throw ArgumentError("Transformer: empty batch");
  if (S > cfg_.context) throw ArgumentError("Transformer: sequence longer than the context");
  for (auto t : batch.tokens) {
    if (t >= ModelConfig::vocab) throw ArgumentError("Transformer: token id >= vocab");
  }
  cur_batch_ = B;
  cur_seqlen_ = S;
  const int N = B * S;
  const int d = cfg_.d_model, H = cfg_.heads, dh = cfg_.d_head, M = cfg_.d_mlp;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  const auto tok_e = params_.map(layout_.slot(layout_.tok_embed));
  const auto pos_e = params_.map(layout_.slot(layout_.pos_embed));

  embed_.resize(N, d);
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < S; ++i)
      embed_.row(b * S + i) = tok_e.row(batch.at(b, i)) + pos_e.row(i);

  if (capture) (*capture)["embed"] = embed_.template cast<double>();

  cache_.resize(cfg_.layers);
  MatX<T> x = embed_;
  for (int l = 0; l < cfg_.layers; ++l) {
    auto& c = cache_[l];
    const auto& ls = layout_.layer(l);
    c.resid_pre = x;

    layernorm_rows(x, c.n1, c.inv1);
    if (capture) (*capture)["ln1." + std::to_string(l)] = c.n1.template cast<double>();
    c.a_in = c.n1;
    c.a_in.array().rowwise() *= params_.map(layout_.slot(ls.ln1_g)).row(0).array();
    c.a_in.rowwise() += params_.map(layout_.slot(ls.ln1_b)).row(0);

    c.q.resize(N, d);
    c.k.resize(N, d);
    c.v.resize(N, d);
    c.q.noalias() = c.a_in * params_.map(layout_.slot(ls.wq));
    c.q.rowwise() += params_.map(layout_.slot(ls.bq)).row(0);
    c.k.noalias() = c.a_in * params_.map(layout_.slot(ls.wk));
    c.k.rowwise() += params_.map(layout_.slot(ls.bk)).row(0);
    c.v.noalias() = c.a_in * params_.map(layout_.slot(ls.wv));
    c.v.rowwise() += params_.map(layout_.slot(ls.bv)).row(0);

    // Causal attention, head by head; probs rows are softmax over keys <= query.
    c.probs.setZero(static_cast<Eigen::Index>(B) * H * S, S);
    c.ctx.resize(N, d);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const auto qb = c.q.block(b * S, h * dh, S, dh);
        const auto kb = c.k.block(b * S, h * dh, S, dh);
        const auto vb = c.v.block(b * S, h * dh, S, dh);
        auto pb = c.probs.block((static_cast<Eigen::Index>(b) * H + h) * S, 0, S, S);
        for (int i = 0; i < S; ++i) {
          // scores over keys 0..i only (causal mask), max-subtracted softmax
          T mx = -std::numeric_limits<T>::infinity();
          for (int j = 0; j <= i; ++j) {
            const T s = qb.row(i).dot(kb.row(j)) * scale;
            pb(i, j) = s;
            mx = std::max(mx, s);
          }
          T z = T(0);
          for (int j = 0; j <= i; ++j) {
            pb(i, j) = std::exp(pb(i, j) - mx);
            z += pb(i, j);
          }
          const T invz = T(1) / z;
          for (int j = 0; j <= i; ++j) pb(i, j) *= invz;
        }
        c.ctx.block(b * S, h * dh, S, dh).noalias() = pb * vb;
      }
    }

    c.resid_mid.resize(N, d);
    c.resid_mid.noalias() = c.ctx * params_.map(layout_.slot(ls.wo));
    c.resid_mid.rowwise() += params_.map(layout_.slot(ls.bo)).row(0);
    c.resid_mid += x;

    layernorm_rows(c.resid_mid, c.n2, c.inv2);
    c.m_in = c.n2;
    c.m_in.array().rowwise() *= params_.map(layout_.slot(ls.ln2_g)).row(0).array();
    c.m_in.rowwise() += params_.map(layout_.slot(ls.ln2_b)).row(0);

    c.pre.resize(N, M);
    c.pre.noalias() = c.m_in * params_.map(layout_.slot(ls.w_in));
    c.pre.rowwise() += params_.map(layout_.slot(ls.b_in)).row(0);
    c.h1 = c.pre.cwiseMax(T(0));

    x.resize(N, d);
    x.noalias() = c.h1 * params_.map(layout_.slot(ls.w_out));
    x.rowwise() += params_.map(layout_.slot(ls.b_out)).row(0);
    x += c.resid_mid;

    if (capture) (*capture)["resid_post." + std::to_string(l)] = x.template cast<double>();
  }

  resid_final_ = x;
  layernorm_rows(resid_final_, nf_, invf_);
  if (capture) (*capture)["ln_final"] = nf_.template cast<double>();
  f_ = nf_;
  f_.array().rowwise() *= params_.map(layout_.slot(layout_.lnf_g)).row(0).array();
  f_.rowwise() += params_.map(layout_.slot(layout_.lnf_b)).row(0);

  logprobs_.resize(N, ModelConfig::vocab);
  logprobs_.noalias() = f_ * params_.map(layout_.slot(layout_.w_u));
  logprobs_.rowwise() += params_.map(layout_.slot(layout_.b_u)).row(0);
  // log-softmax, max-subtracted
  for (Eigen::Index r = 0; r < logprobs_.rows(); ++r) {
    const T mx = logprobs_.row(r).maxCoeff();
    T z = T(0);
    for (int c = 0; c < ModelConfig::vocab; ++c) z += std::exp(logprobs_(r, c) - mx);
    const T lz = mx + std::log(z);
    logprobs_.row(r).array() -= lz;
  }
}

template <typename T>
MatX<T> Transformer<T>::forward(const TokenBatch& batch, ActivationSet* capture) {
  run_forward(batch, capture);
  return logprobs_;
}

template <typename T>
double Transformer<T>::loss_and_grads(const TokenBatch& batch) {
  if (batch.batch <= 0) throw ArgumentError("loss_and_grads: empty batch");
  if (batch.seqlen < 2) throw ArgumentError("loss_and_grads: needs at least 2 tokens");
  run_forward(batch, nullptr);

  const int B = batch.batch, S = batch.seqlen, N = B * S;
  const int d = cfg_.d_model, H = cfg_.heads, dh = cfg_.d_head;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const double denom = static_cast<double>(B) * (S - 1);

  double loss = 0.0;
  for (int b = 0; b < B; ++b)
    for (int i = 0; i + 1 < S; ++i)
      loss -= static_cast<double>(logprobs_(b * S + i, batch.at(b, i + 1)));
  loss /= denom;
  if (!std::isfinite(loss))
    throw NumericalError("loss_and_grads: non-finite loss (batch " + std::to_string(B) + "x" +
                         std::to_string(S) + ")");

  grads_.zero();

  // d logits: softmax - onehot on predicting positions, 0 on the last one.
  MatX<T> dlogits(N, ModelConfig::vocab);
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < S; ++i) {
      const int r = b * S + i;
      if (i + 1 < S) {
        for (int c = 0; c < ModelConfig::vocab; ++c)
          dlogits(r, c) = std::exp(logprobs_(r, c)) / static_cast<T>(denom);
        dlogits(r, batch.at(b, i + 1)) -= T(1) / static_cast<T>(denom);
      } else {
        dlogits.row(r).setZero();
      }
    }
  }

  // Unembedding.
  grads_.map(layout_.slot(layout_.w_u)).noalias() += f_.transpose() * dlogits;
  grads_.map(layout_.slot(layout_.b_u)).row(0) += dlogits.colwise().sum();
  MatX<T> df(N, d);
  df.noalias() = dlogits * params_.map(layout_.slot(layout_.w_u)).transpose();

  // Final LayerNorm affine + normalization.
  grads_.map(layout_.slot(layout_.lnf_g)).row(0) +=
      (df.array() * nf_.array()).colwise().sum().matrix();
  grads_.map(layout_.slot(layout_.lnf_b)).row(0) += df.colwise().sum();
  MatX<T> dnf =
      (df.array().rowwise() * params_.map(layout_.slot(layout_.lnf_g)).row(0).array()).matrix();
  MatX<T> dx = MatX<T>::Zero(N, d);
  layernorm_backward_rows(nf_, invf_, dnf, dx);

  for (int l = cfg_.layers - 1; l >= 0; --l) {
    auto& c = cache_[l];
    const auto& ls = layout_.layer(l);

    // MLP branch.
    grads_.map(layout_.slot(ls.w_out)).noalias() += c.h1.transpose() * dx;
    grads_.map(layout_.slot(ls.b_out)).row(0) += dx.colwise().sum();
    MatX<T> dh1(c.h1.rows(), c.h1.cols());
    dh1.noalias() = dx * params_.map(layout_.slot(ls.w_out)).transpose();
    dh1 = (c.pre.array() > T(0)).select(dh1, T(0));
    grads_.map(layout_.slot(ls.w_in)).noalias() += c.m_in.transpose() * dh1;
    grads_.map(layout_.slot(ls.b_in)).row(0) += dh1.colwise().sum();
    MatX<T> dm_in(N, d);
    dm_in.noalias() = dh1 * params_.map(layout_.slot(ls.w_in)).transpose();

    grads_.map(layout_.slot(ls.ln2_g)).row(0) +=
        (dm_in.array() * c.n2.array()).colwise().sum().matrix();
    grads_.map(layout_.slot(ls.ln2_b)).row(0) += dm_in.colwise().sum();
    MatX<T> dn2 =
        (dm_in.array().rowwise() * params_.map(layout_.slot(ls.ln2_g)).row(0).array()).matrix();
    // dx currently holds d(resid_post); the residual path passes it through.
    layernorm_backward_rows(c.n2, c.inv2, dn2, dx);

    // Attention output projection.
    MatX<T> dctx(N, d);
    grads_.map(layout_.slot(ls.wo)).noalias() += c.ctx.transpose() * dx;
    grads_.map(layout_.slot(ls.bo)).row(0) += dx.colwise().sum();
    dctx.noalias() = dx * params_.map(layout_.slot(ls.wo)).transpose();

    MatX<T> dq = MatX<T>::Zero(N, d), dk = MatX<T>::Zero(N, d), dv = MatX<T>::Zero(N, d);
    for (int b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        const auto pb = c.probs.block((static_cast<Eigen::Index>(b) * H + h) * S, 0, S, S);
        const auto qb = c.q.block(b * S, h * dh, S, dh);
        const auto kb = c.k.block(b * S, h * dh, S, dh);
        const auto vb = c.v.block(b * S, h * dh, S, dh);
        const auto dctxb = dctx.block(b * S, h * dh, S, dh);

        MatX<T> dp(S, S);
        dp.noalias() = dctxb * vb.transpose();
        dv.block(b * S, h * dh, S, dh).noalias() += pb.transpose() * dctxb;

        // Softmax backward row-wise over the causal support.
        MatX<T> ds = MatX<T>::Zero(S, S);
        for (int i = 0; i < S; ++i) {
          T dot = T(0);
          for (int j = 0; j <= i; ++j) dot += dp(i, j) * pb(i, j);
          for (int j = 0; j <= i; ++j) ds(i, j) = pb(i, j) * (dp(i, j) - dot);
        }
        dq.block(b * S, h * dh, S, dh).noalias() += ds * kb * scale;
        dk.block(b * S, h * dh, S, dh).noalias() += ds.transpose() * qb * scale;
      }
    }

    MatX<T> da_in(N, d);
    grads_.map(layout_.slot(ls.wq)).noalias() += c.a_in.transpose() * dq;
    grads_.map(layout_.slot(ls.bq)).row(0) += dq.colwise().sum();
    grads_.map(layout_.slot(ls.wk)).noalias() += c.a_in.transpose() * dk;
    grads_.map(layout_.slot(ls.bk)).row(0) += dk.colwise().sum();
    grads_.map(layout_.slot(ls.wv)).noalias() += c.a_in.transpose() * dv;
    grads_.map(layout_.slot(ls.bv)).row(0) += dv.colwise().sum();
    da_in.noalias() = dq * params_.map(layout_.slot(ls.wq)).transpose();
    da_in.noalias() += dk * params_.map(layout_.slot(ls.wk)).transpose();
    da_in.noalias() += dv * params_.map(layout_.slot(ls.wv)).transpose();

    grads_.map(layout_.slot(ls.ln1_g)).row(0) +=
        (da_in.array() * c.n1.array()).colwise().sum().matrix();
    grads_.map(layout_.slot(ls.ln1_b)).row(0) += da_in.colwise().sum();
    MatX<T> dn1 =
        (da_in.array().rowwise() * params_.map(layout_.slot(ls.ln1_g)).row(0).array()).matrix();
    layernorm_backward_rows(c.n1, c.inv1, dn1, dx);
  }

  // Embedding scatter.
  auto d_tok = grads_.map(layout_.slot(layout_.tok_embed));
  auto d_pos = grads_.map(layout_.slot(layout_.pos_embed));
  for (int b = 0; b < B; ++b) {
    for (int i = 0; i < S; ++i) {
      d_tok.row(batch.at(b, i)) += dx.row(b * S + i);
      d_pos.row(i) += dx.row(b * S + i);
    }
  }
  return loss;
}

template <typename T>
std::vector<std::vector<LogProbs4>> Transformer<T>::batch_log_probs(
    std::span<const TokenSequence> seqs) {
  const TokenBatch batch = TokenBatch::from(seqs);
  const MatX<T> lp = forward(batch);
  std::vector<std::vector<LogProbs4>> out(seqs.size());
  for (int b = 0; b < batch.batch; ++b) {
    out[b].resize(batch.seqlen - 1);
    for (int i = 0; i + 1 < batch.seqlen; ++i) {
      for (int c = 0; c < ModelConfig::vocab; ++c)
        out[b][i][c] = static_cast<double>(lp(b * batch.seqlen + i, c));
    }
  }
  return out;
}

template class Transformer<double>;
template class Transformer<float>;

}  // namespace gridwalk::nn

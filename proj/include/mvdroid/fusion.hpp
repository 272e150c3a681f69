#pragma once

// Pairwise factorized bilinear pooling of view embeddings followed by
// multi-head self-attention over the pooled tokens.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "mvdroid/model_config.hpp"
#include "mvdroid/nn.hpp"

namespace mvd {

/// Low-rank bilinear pooling of x [d] and y [e] into an o-dim vector:
/// sum-pool (over windows of k) of (x W) * (y Q), then signed square root
/// and unit L2 norm.
template <typename S>
class MfbPool {
 public:
  MfbPool() = default;
  MfbPool(ad::ParameterStore<S>& store, const std::string& name, ad::Index d, ad::Index e, ad::Index k, ad::Index o,
          double dropout, std::mt19937_64& rng)
      : k_(k), o_(o), dropout_(dropout) {
    if (k < 1 || o < 1) throw Error(ErrorCode::BadConfig, "mfb needs k >= 1 and o >= 1");
    w_ = store.add_glorot(name + ".w", {d, k * o}, d, k * o, rng);
    q_ = store.add_glorot(name + ".q", {e, k * o}, e, k * o, rng);
  }

  ad::Tensor<S> pooled(const ad::Tensor<S>& x, const ad::Tensor<S>& y, bool training, std::mt19937_64& rng) const {
    const ad::Tensor<S> joint = ad::mul(ad::matmul(x, w_), ad::matmul(y, q_));
    return ad::sum_pool_1d(ad::dropout(joint, dropout_, training, rng), k_);
  }

  ad::Tensor<S> operator()(const ad::Tensor<S>& x, const ad::Tensor<S>& y, bool training,
                           std::mt19937_64& rng) const {
    return ad::l2_normalize(ad::sqrt_signed(pooled(x, y, training, rng)));
  }

  const ad::Tensor<S>& w() const { return w_; }
  const ad::Tensor<S>& q() const { return q_; }
  ad::Index k() const { return k_; }
  ad::Index o() const { return o_; }

 private:
  ad::Index k_ = 1, o_ = 1;
  double dropout_ = 0.0;
  ad::Tensor<S> w_, q_;
};

/// Self-attention over the rows of M [t, o]. Queries, keys and values are
/// projected twice: first by shared [o, u] matrices, then per head into p
/// dims. Heads are concatenated, mapped by Wo to p_o and averaged over the
/// t tokens.
template <typename S>
class SelfAttention {
 public:
  struct Detail {
    ad::Tensor<S> tokens;                // [t, p_o] before mean pooling
    std::vector<ad::Mat<S>> weights;     // per head, [t, t]
  };

  SelfAttention() = default;
  SelfAttention(ad::ParameterStore<S>& store, const std::string& name, ad::Index o, ad::Index u, ad::Index heads,
                ad::Index p, ad::Index p_out, std::mt19937_64& rng)
      : heads_(heads), p_(p) {
    if (heads < 1 || p < 1 || u < 1 || p_out < 1) throw Error(ErrorCode::BadConfig, "attention dims must be positive");
    wq_ = store.add_glorot(name + ".wq", {o, u}, o, u, rng);
    wk_ = store.add_glorot(name + ".wk", {o, u}, o, u, rng);
    wv_ = store.add_glorot(name + ".wv", {o, u}, o, u, rng);
    hq_ = store.add_glorot(name + ".hq", {u, heads * p}, u, p, rng);
    hk_ = store.add_glorot(name + ".hk", {u, heads * p}, u, p, rng);
    hv_ = store.add_glorot(name + ".hv", {u, heads * p}, u, p, rng);
    wo_ = store.add_glorot(name + ".wo", {heads * p, p_out}, heads * p, p_out, rng);
  }

  Detail detail(const ad::Tensor<S>& m) const {
    const ad::Tensor<S> q = ad::matmul(ad::matmul(m, wq_), hq_);
    const ad::Tensor<S> k = ad::matmul(ad::matmul(m, wk_), hk_);
    const ad::Tensor<S> v = ad::matmul(ad::matmul(m, wv_), hv_);
    const S scale = S(1) / std::sqrt(S(p_));
    Detail out;
    std::vector<ad::Tensor<S>> heads;
    for (ad::Index h = 0; h < heads_; ++h) {
      const auto qh = ad::slice_cols(q, h * p_, p_);
      const auto kh = ad::slice_cols(k, h * p_, p_);
      const auto vh = ad::slice_cols(v, h * p_, p_);
      const auto scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), scale);
      if (!scores.value().allFinite()) throw Error(ErrorCode::NonFiniteAttention, "attention scores overflowed");
      const auto weights = ad::softmax(scores);
      if (!weights.value().allFinite()) throw Error(ErrorCode::NonFiniteAttention, "attention weights not finite");
      out.weights.emplace_back(weights.mat());
      heads.push_back(ad::matmul(weights, vh));
    }
    out.tokens = ad::matmul(ad::concat_cols(heads), wo_);
    return out;
  }

  ad::Tensor<S> operator()(const ad::Tensor<S>& m) const { return ad::mean_over_axis(detail(m).tokens, 0); }

  const ad::Tensor<S>& wq() const { return wq_; }
  const ad::Tensor<S>& wk() const { return wk_; }
  const ad::Tensor<S>& wv() const { return wv_; }
  const ad::Tensor<S>& hq() const { return hq_; }
  const ad::Tensor<S>& hk() const { return hk_; }
  const ad::Tensor<S>& hv() const { return hv_; }
  const ad::Tensor<S>& wo() const { return wo_; }
  ad::Index heads() const { return heads_; }
  ad::Index head_dim() const { return p_; }

 private:
  ad::Index heads_ = 1, p_ = 1;
  ad::Tensor<S> wq_, wk_, wv_, hq_, hk_, hv_, wo_;
};

/// View pairs fused by the model, in token order. Three views give
/// (1,2), (1,3), (2,3); two views give their single pair; one view is
/// paired with itself.
std::vector<std::pair<View, View>> fusion_pairs(const std::array<bool, kViewCount>& views);
std::string pair_name(std::pair<View, View> p);

/// Bilinear pooling of every enabled pair, stacked into M [pairs, o], then
/// attention pooling into the fused vector.
template <typename S>
class FusionBlock {
 public:
  FusionBlock() = default;
  FusionBlock(ad::ParameterStore<S>& store, const ModelConfig& cfg, std::mt19937_64& rng)
      : pairs_(fusion_pairs(cfg.views)) {
    for (const auto& p : pairs_)
      mfb_.emplace_back(store, "mfb." + pair_name(p), cfg.embedding_dim, cfg.embedding_dim, cfg.mfb_k, cfg.mfb_o,
                        cfg.mfb_dropout, rng);
    attn_ = SelfAttention<S>(store, "attn", cfg.mfb_o, cfg.attn_proj_dim, cfg.attn_heads, cfg.attn_head_dim,
                             cfg.attn_out_dim, rng);
  }

  /// `embeddings` is indexed by View; disabled views may be undefined.
  ad::Tensor<S> local(const std::array<ad::Tensor<S>, kViewCount>& embeddings, bool training,
                      std::mt19937_64& rng) const {
    std::vector<ad::Tensor<S>> rows;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto& a = embeddings[static_cast<std::size_t>(pairs_[i].first)];
      const auto& b = embeddings[static_cast<std::size_t>(pairs_[i].second)];
      if (!a.defined() || !b.defined())
        throw Error(ErrorCode::MissingView, "fusion pair " + pair_name(pairs_[i]) + " lacks an embedding");
      rows.push_back(mfb_[i](a, b, training, rng));
    }
    return ad::stack_rows(rows);
  }

  ad::Tensor<S> operator()(const std::array<ad::Tensor<S>, kViewCount>& embeddings, bool training,
                           std::mt19937_64& rng) const {
    return attn_(local(embeddings, training, rng));
  }

  const std::vector<std::pair<View, View>>& pairs() const { return pairs_; }
  const MfbPool<S>& mfb(std::size_t i) const { return mfb_.at(i); }
  const SelfAttention<S>& attention() const { return attn_; }

 private:
  std::vector<std::pair<View, View>> pairs_;
  std::vector<MfbPool<S>> mfb_;
  SelfAttention<S> attn_;
};

}  // namespace mvd

#pragma once

#include <random>

#include "mvdroid/model.hpp"
#include "mvdroid/opcode_view.hpp"
#include "mvdroid/train.hpp"

namespace fx {

/// A model small enough for finite-difference checks.
inline mvd::ModelConfig tiny_config() {
  mvd::ModelConfig c;
  c.embedding_dim = 6;
  c.gcn_layers = 2;
  c.gcn_hidden = 5;
  c.window_length = 2;
  c.seq_kernel_heights = {1, 2};
  c.seq_filters = 3;
  c.image_size = 8;
  c.image_channels = {2, 3};
  c.mfb_k = 2;
  c.mfb_o = 4;
  c.mfb_dropout = 0.0;
  c.attn_heads = 2;
  c.attn_proj_dim = 5;
  c.attn_head_dim = 3;
  c.attn_out_dim = 7;
  c.clf_hidden = {6, 4};
  c.clf_dropout = 0.0;
  return c;
}

/// Weighted sum with fixed pseudo-random weights, so every output entry
/// reaches the scalar through a distinct coefficient.
template <typename S>
mvd::ad::Tensor<S> probe(const mvd::ad::Tensor<S>& t, std::uint64_t seed = 77) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  mvd::ad::Vec<S> w(t.size());
  for (auto& e : w) e = S(u(rng));
  return mvd::ad::sum(mvd::ad::mul(mvd::ad::reshape(t, {t.size()}), mvd::ad::Tensor<S>::from({t.size()}, w)));
}

template <typename S>
mvd::ad::Tensor<S> random_tensor(std::mt19937_64& rng, mvd::ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  mvd::ad::Vec<S> v(mvd::ad::numel(shape));
  for (auto& e : v) e = S(u(rng));
  return mvd::ad::Tensor<S>::from(std::move(shape), std::move(v));
}

/// Random sparse-ish callgraph with n nodes and random sensitivity bits.
inline mvd::AbstractCallgraph random_graph(std::mt19937_64& rng, std::size_t n, std::size_t edges) {
  mvd::AbstractCallgraph g;
  std::bernoulli_distribution bit(0.3);
  std::uniform_int_distribution<std::uint32_t> node(0, static_cast<std::uint32_t>(n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    g.node_names.push_back("n" + std::to_string(1000 + i));
    mvd::SensitivityVector v{};
    for (auto& b : v) b = bit(rng) ? 1 : 0;
    g.sensitivity.push_back(v);
  }
  for (std::size_t e = 0; e < edges; ++e) g.edges.emplace_back(node(rng), node(rng));
  return g;
}

/// Views whose statistics depend on the label in all three views: the
/// second sensitivity bit on every node, branch-heavy vs array-heavy
/// opcode runs, and bright vs dark images.
inline mvd::SampleViews separable_views(std::mt19937_64& rng, int label, const mvd::ModelConfig& cfg) {
  using mvd::OpcodeCategory;
  mvd::SampleViews v;
  auto g = random_graph(rng, 6, 7);
  for (auto& s : g.sensitivity) s[1] = label == 1 ? 1 : 0;
  v.graph = g;

  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<OpcodeCategory> seq;
  for (int i = 0; i < 24; ++i) {
    if (label == 1)
      seq.push_back(coin(rng) ? OpcodeCategory::If : OpcodeCategory::Goto);
    else
      seq.push_back(coin(rng) ? OpcodeCategory::Get : OpcodeCategory::Put);
    if (i % 6 == 5) seq.push_back(OpcodeCategory::Separator);
  }
  v.opcodes = mvd::build_gram_matrix(seq, cfg.window_length);

  const auto side = static_cast<std::size_t>(cfg.image_size);
  std::uniform_int_distribution<int> px(label == 1 ? 150 : 0, label == 1 ? 255 : 105);
  mvd::ViewImage img;
  img.height = img.width = side;
  for (auto& c : img.channels) {
    c = mvd::Plane(static_cast<Eigen::Index>(side), static_cast<Eigen::Index>(side));
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = static_cast<std::uint8_t>(px(rng));
  }
  v.image = img;
  return v;
}

template <typename S>
std::vector<mvd::Example<S>> separable_examples(std::size_t per_class, const mvd::ModelConfig& cfg,
                                                std::uint64_t seed = 5) {
  std::mt19937_64 rng(seed);
  std::vector<mvd::Example<S>> out;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int label = static_cast<int>(i % 2);
    out.push_back({mvd::make_input<S>(separable_views(rng, label, cfg), cfg), label});
  }
  return out;
}

}  // namespace fx

#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mvdroid/encoders.hpp"
#include "mvdroid/fusion.hpp"

namespace mvd {

/// Fully connected head: hidden layers with relu and dropout, softmax over
/// two classes. Class 1 is malicious.
template <typename S>
class Classifier {
 public:
  Classifier() = default;
  Classifier(ad::ParameterStore<S>& store, ad::Index in, const std::vector<ad::Index>& hidden, double dropout,
             std::mt19937_64& rng)
      : in_(in), dropout_(dropout) {
    ad::Index prev = in;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      layers_.emplace_back(store, "clf." + std::to_string(i), prev, hidden[i], rng);
      prev = hidden[i];
    }
    layers_.emplace_back(store, "clf." + std::to_string(hidden.size()), prev, ad::Index{2}, rng);
  }

  ad::Tensor<S> logits(const ad::Tensor<S>& v, bool training, std::mt19937_64& rng) const {
    if (v.rank() != 1 || v.size() != in_) ad::shape_error("classifier input", v.shape(), {in_});
    ad::Tensor<S> h = v;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i)
      h = ad::dropout(ad::relu(layers_[i](h)), dropout_, training, rng);
    return layers_.back()(h);
  }

  ad::Tensor<S> operator()(const ad::Tensor<S>& v, bool training, std::mt19937_64& rng) const {
    return ad::softmax(logits(v, training, rng));
  }

  const std::vector<ad::Linear<S>>& layers() const { return layers_; }

 private:
  ad::Index in_ = 0;
  double dropout_ = 0.0;
  std::vector<ad::Linear<S>> layers_;
};

/// Per-sample model inputs, already converted to dense form.
template <typename S>
struct SampleInput {
  std::optional<GraphInput<S>> graph;
  std::optional<ad::Mat<S>> sequence;
  std::optional<ad::Tensor<S>> image;
};

template <typename S>
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    if (cfg_.enabled(View::Sensitivity)) graph_ = GraphEncoder<S>(store_, cfg_, rng);
    if (cfg_.enabled(View::Context)) seq_ = SequenceEncoder<S>(store_, cfg_, rng);
    if (cfg_.enabled(View::Environment)) img_ = ImageEncoder<S>(store_, cfg_, rng);
    fusion_ = FusionBlock<S>(store_, cfg_, rng);
    clf_ = Classifier<S>(store_, cfg_.attn_out_dim, cfg_.clf_hidden, cfg_.clf_dropout, rng);
  }

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  std::array<ad::Tensor<S>, kViewCount> embed(const SampleInput<S>& x) const {
    std::array<ad::Tensor<S>, kViewCount> e;
    if (cfg_.enabled(View::Sensitivity)) {
      if (!x.graph) throw Error(ErrorCode::MissingView, "sample has no callgraph view");
      e[0] = graph_(*x.graph);
    }
    if (cfg_.enabled(View::Context)) {
      if (!x.sequence) throw Error(ErrorCode::MissingView, "sample has no opcode view");
      e[1] = seq_(*x.sequence);
    }
    if (cfg_.enabled(View::Environment)) {
      if (!x.image) throw Error(ErrorCode::MissingView, "sample has no image view");
      e[2] = img_(*x.image);
    }
    return e;
  }

  ad::Tensor<S> fused(const SampleInput<S>& x, bool training, std::mt19937_64& rng) const {
    return fusion_(embed(x), training, rng);
  }

  /// Class probabilities [2].
  ad::Tensor<S> forward(const SampleInput<S>& x, bool training, std::mt19937_64& rng) const {
    return clf_(fused(x, training, rng), training, rng);
  }

  const ModelConfig& config() const { return cfg_; }
  ad::ParameterStore<S>& params() { return store_; }
  const ad::ParameterStore<S>& params() const { return store_; }
  const GraphEncoder<S>& graph_encoder() const { return graph_; }
  const SequenceEncoder<S>& sequence_encoder() const { return seq_; }
  const ImageEncoder<S>& image_encoder() const { return img_; }
  const FusionBlock<S>& fusion() const { return fusion_; }
  const Classifier<S>& classifier() const { return clf_; }

  static std::vector<std::string> encoder_prefixes() { return {"gcn.", "seqconv.", "img."}; }

 private:
  ModelConfig cfg_;
  ad::ParameterStore<S> store_;
  GraphEncoder<S> graph_;
  SequenceEncoder<S> seq_;
  ImageEncoder<S> img_;
  FusionBlock<S> fusion_;
  Classifier<S> clf_;
};

/// Converts decoded views into model inputs for the enabled views.
struct SampleViews {
  std::optional<AbstractCallgraph> graph;
  std::optional<OpcodeGramMatrix> opcodes;
  std::optional<ViewImage> image;
};

template <typename S>
SampleInput<S> make_input(const SampleViews& v, const ModelConfig& cfg) {
  SampleInput<S> in;
  if (cfg.enabled(View::Sensitivity) && v.graph) in.graph = make_graph_input<S>(*v.graph);
  if (cfg.enabled(View::Context) && v.opcodes) {
    if (v.opcodes->window_length != cfg.window_length)
      throw Error(ErrorCode::ShapeMismatch, "opcode-gram window " + std::to_string(v.opcodes->window_length) +
                                                " vs model window " + std::to_string(cfg.window_length));
    in.sequence = make_sequence_input<S>(*v.opcodes);
  }
  if (cfg.enabled(View::Environment) && v.image) in.image = make_image_input<S>(*v.image);
  return in;
}

}  // namespace mvd

#pragma once

// Per-view encoders: GCN over the abstract callgraph, row convolution over
// the opcode-gram matrix, and a small CNN over the three-channel image.
// Each maps its input to an embedding_dim vector.

#include <memory>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mvdroid/callgraph.hpp"
#include "mvdroid/image_view.hpp"
#include "mvdroid/log.hpp"
#include "mvdroid/model_config.hpp"
#include "mvdroid/nn.hpp"
#include "mvdroid/opcode_view.hpp"

namespace mvd {

template <typename S>
struct GraphInput {
  std::shared_ptr<const ad::SparseMat<S>> adjacency;  // D^-1/2 (A + I) D^-1/2
  ad::Mat<S> features;                                // [n, 15]

  ad::Index nodes() const { return features.rows(); }
};

/// Normalized adjacency with self-loops over the undirected closure of the
/// edges. Self-edges in the input are ignored; the identity supplies them.
template <typename S>
std::shared_ptr<const ad::SparseMat<S>> normalized_adjacency(
    std::size_t n, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> links;
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw Error(ErrorCode::IndexOutOfRange, "edge endpoint beyond node count");
    if (a == b) continue;
    links.emplace(a, b);
    links.emplace(b, a);
  }
  std::vector<S> degree(n, S(1));
  for (auto [a, b] : links) degree[a] += S(1);
  std::vector<Eigen::Triplet<S>> trip;
  trip.reserve(links.size() + n);
  for (std::size_t i = 0; i < n; ++i) trip.emplace_back(i, i, S(1) / degree[i]);
  for (auto [a, b] : links) trip.emplace_back(a, b, S(1) / std::sqrt(degree[a] * degree[b]));
  auto m = std::make_shared<ad::SparseMat<S>>(static_cast<ad::Index>(n), static_cast<ad::Index>(n));
  m->setFromTriplets(trip.begin(), trip.end());
  return m;
}

template <typename S>
GraphInput<S> make_graph_input(const AbstractCallgraph& g) {
  GraphInput<S> in;
  const std::size_t n = g.node_count();
  in.features.resize(static_cast<ad::Index>(n), static_cast<ad::Index>(kSensitivityDim));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < kSensitivityDim; ++j) in.features(i, j) = S(g.sensitivity[i][j]);
  in.adjacency = normalized_adjacency<S>(n, g.edges);
  return in;
}

template <typename S>
ad::Mat<S> make_sequence_input(const OpcodeGramMatrix& m) {
  ad::Mat<S> out(static_cast<ad::Index>(m.rows), static_cast<ad::Index>(m.width()));
  for (std::size_t i = 0; i < m.data.size(); ++i) out.data()[i] = S(m.data[i]);
  return out;
}

/// [3, H, W] tensor with pixels scaled to [0, 1].
template <typename S>
ad::Tensor<S> make_image_input(const ViewImage& img) {
  const auto h = static_cast<ad::Index>(img.height), w = static_cast<ad::Index>(img.width);
  ad::Vec<S> v(3 * h * w);
  for (ad::Index c = 0; c < 3; ++c) {
    const Plane& p = img.channels[static_cast<std::size_t>(c)];
    if (p.rows() != h || p.cols() != w) throw Error(ErrorCode::ShapeMismatch, "image channel size differs");
    for (ad::Index i = 0; i < h * w; ++i) v[c * h * w + i] = S(p.data()[i]) / S(255);
  }
  return ad::Tensor<S>::from({3, h, w}, std::move(v));
}

template <typename S>
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(ad::ParameterStore<S>& store, const ModelConfig& cfg, std::mt19937_64& rng) : dim_(cfg.embedding_dim) {
    ad::Index in = static_cast<ad::Index>(kSensitivityDim);
    for (ad::Index l = 0; l < cfg.gcn_layers; ++l) {
      layers_.push_back(store.add_glorot("gcn.layer" + std::to_string(l) + ".w", {in, cfg.gcn_hidden}, in,
                                         cfg.gcn_hidden, rng));
      in = cfg.gcn_hidden;
    }
    out_ = ad::Linear<S>(store, "gcn.out", in, dim_, rng);
  }

  /// Mean over nodes after the propagation layers, before the output map.
  ad::Tensor<S> readout(const GraphInput<S>& g) const {
    ad::Tensor<S> h = ad::Tensor<S>::from_matrix(g.features);
    for (const auto& w : layers_) h = ad::relu(ad::spmm(g.adjacency, ad::matmul(h, w)));
    return ad::mean_over_axis(h, 0);
  }

  ad::Tensor<S> operator()(const GraphInput<S>& g) const {
    if (g.nodes() == 0) {
      log::warn("empty callgraph; using a zero sensitivity embedding");
      return ad::Tensor<S>::zeros({dim_});
    }
    return out_(readout(g));
  }

 private:
  ad::Index dim_ = 0;
  std::vector<ad::Tensor<S>> layers_;
  ad::Linear<S> out_;
};

template <typename S>
class SequenceEncoder {
 public:
  SequenceEncoder() = default;
  SequenceEncoder(ad::ParameterStore<S>& store, const ModelConfig& cfg, std::mt19937_64& rng)
      : dim_(cfg.embedding_dim), width_(static_cast<ad::Index>(kCategoryCount * cfg.window_length)) {
    for (ad::Index kh : cfg.seq_kernel_heights) {
      const std::string name = "seqconv.k" + std::to_string(kh);
      Branch b;
      b.height = kh;
      b.kernel = store.add_glorot(name + ".w", {kh * width_, cfg.seq_filters}, kh * width_, cfg.seq_filters, rng);
      b.bias = store.add(name + ".b", {cfg.seq_filters});
      branches_.push_back(std::move(b));
    }
    out_ = ad::Linear<S>(store, "seqconv.out", cfg.seq_filters * static_cast<ad::Index>(branches_.size()), dim_, rng);
  }

  /// Max-over-time pooled responses of every branch, concatenated.
  ad::Tensor<S> pooled(const ad::Mat<S>& m) const {
    if (m.cols() != width_)
      throw Error(ErrorCode::ShapeMismatch,
                  "opcode-gram width " + std::to_string(m.cols()) + " vs expected " + std::to_string(width_));
    std::vector<ad::Tensor<S>> parts;
    for (const auto& b : branches_) {
      ad::Mat<S> padded = m;
      if (padded.rows() < b.height) {
        padded = ad::Mat<S>::Zero(b.height, width_);
        padded.topRows(m.rows()) = m;
      }
      const auto x = ad::Tensor<S>::from_matrix(padded);
      parts.push_back(ad::max_over_rows(ad::relu(ad::conv1d(x, b.kernel, b.bias, b.height))));
    }
    return ad::concat(parts);
  }

  ad::Tensor<S> operator()(const ad::Mat<S>& m) const {
    if (m.rows() == 0) {
      log::warn("empty opcode-gram matrix; using a zero context embedding");
      return ad::Tensor<S>::zeros({dim_});
    }
    return out_(pooled(m));
  }

 private:
  struct Branch {
    ad::Index height = 0;
    ad::Tensor<S> kernel;
    ad::Tensor<S> bias;
  };
  ad::Index dim_ = 0;
  ad::Index width_ = 0;
  std::vector<Branch> branches_;
  ad::Linear<S> out_;
};

template <typename S>
class ImageEncoder {
 public:
  ImageEncoder() = default;
  ImageEncoder(ad::ParameterStore<S>& store, const ModelConfig& cfg, std::mt19937_64& rng)
      : dim_(cfg.embedding_dim), size_(cfg.image_size) {
    ad::Index in = 3, side = size_;
    for (std::size_t s = 0; s < cfg.image_channels.size(); ++s) {
      const ad::Index out = cfg.image_channels[s];
      const std::string name = "img.stage" + std::to_string(s);
      Stage st;
      st.kernel = store.add_glorot(name + ".w", {out, in * 9}, in * 9, out * 9, rng);
      st.bias = store.add(name + ".b", {out});
      stages_.push_back(std::move(st));
      in = out;
      side /= 2;
    }
    if (side < 1) throw Error(ErrorCode::BadConfig, "image size too small for the number of stages");
    out_ = ad::Linear<S>(store, "img.out", in * side * side, dim_, rng);
  }

  ad::Tensor<S> features(const ad::Tensor<S>& img) const {
    if (img.rank() != 3 || img.dim(0) != 3 || img.dim(1) != size_ || img.dim(2) != size_)
      ad::shape_error("image encoder", img.shape(), {3, size_, size_});
    ad::Tensor<S> h = img;
    for (const auto& st : stages_) h = ad::mean_pool2d(ad::relu(ad::conv2d(h, st.kernel, st.bias, 3, 3, 1)));
    return ad::flatten(h);
  }

  ad::Tensor<S> operator()(const ad::Tensor<S>& img) const { return out_(features(img)); }

 private:
  struct Stage {
    ad::Tensor<S> kernel;
    ad::Tensor<S> bias;
  };
  ad::Index dim_ = 0;
  ad::Index size_ = 0;
  std::vector<Stage> stages_;
  ad::Linear<S> out_;
};

}  // namespace mvd

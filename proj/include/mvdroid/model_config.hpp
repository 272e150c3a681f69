#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mvd {

enum class View { Sensitivity = 0, Context = 1, Environment = 2 };
inline constexpr std::size_t kViewCount = 3;
std::string_view to_string(View v);

/// Architecture hyperparameters. Everything here is embedded into
/// checkpoints, so a model can be rebuilt from the file alone.
struct ModelConfig {
  // views enabled (graph, opcode, image)
  std::array<bool, kViewCount> views{true, true, true};
  Eigen::Index embedding_dim = 256;

  Eigen::Index gcn_layers = 2;
  Eigen::Index gcn_hidden = 64;

  std::size_t window_length = 4;
  std::vector<Eigen::Index> seq_kernel_heights{3, 4, 5};
  Eigen::Index seq_filters = 64;

  Eigen::Index image_size = 224;
  std::vector<Eigen::Index> image_channels{8, 16, 32, 32};

  Eigen::Index mfb_k = 5;
  Eigen::Index mfb_o = 512;
  double mfb_dropout = 0.1;

  Eigen::Index attn_heads = 4;
  Eigen::Index attn_proj_dim = 512;  // u: first-stage projection width
  Eigen::Index attn_head_dim = 128;  // p: per-head width
  Eigen::Index attn_out_dim = 1024;  // p_o: fused vector width

  std::vector<Eigen::Index> clf_hidden{512, 256, 128, 64};
  double clf_dropout = 0.2;

  std::size_t enabled_view_count() const {
    std::size_t n = 0;
    for (bool v : views) n += v ? 1 : 0;
    return n;
  }
  bool enabled(View v) const { return views[static_cast<std::size_t>(v)]; }
  /// Throws BadConfig on inconsistent values.
  void validate() const;
};

}  // namespace mvd

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mvdroid/model_config.hpp"

namespace mvd {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  std::size_t patience = 20;
  double val_fraction = 0.2;  // used when no validation set is given
  bool freeze_encoders = false;
};

struct ExtractConfig {
  std::size_t row_cap = 200000;
  std::size_t plane_width = 256;
  std::vector<std::string> so_sections{".text", ".data", ".rodata"};
  std::string permission_map;  // empty: bundled default
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  ExtractConfig extract;
  std::uint64_t seed = 1;
  std::filesystem::path cache_dir = "mvdroid-cache";
  bool emit_png = false;

  /// Throws BadConfig for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  void validate() const;
};

/// `key = value` lines; `#` starts a comment. Values override `base`.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Canonical text with every key, in a fixed order; parse_config of the
/// result reproduces the config exactly.
std::string to_config_text(const RunConfig& cfg);

/// Stable digest of the settings that change extracted features.
std::string extraction_digest(const RunConfig& cfg);

}  // namespace mvd

#pragma once

// Per-app feature extraction for the three views and an on-disk cache
// keyed by APK checksum and extraction settings.

#include <filesystem>
#include <optional>
#include <string>

#include "mvdroid/callgraph.hpp"
#include "mvdroid/config.hpp"
#include "mvdroid/ingest.hpp"
#include "mvdroid/model.hpp"

namespace mvd {

class FeatureExtractor {
 public:
  explicit FeatureExtractor(const RunConfig& cfg);

  SampleViews extract(const ApkArtifacts& apk) const;
  SampleViews extract(const std::filesystem::path& apk_path) const { return extract(extract_artifacts(apk_path)); }

  const RunConfig& config() const { return cfg_; }

 private:
  RunConfig cfg_;
  SubsignatureTable table_;
};

/// Throws MalformedInput unless `id` is a safe file stem
/// ([A-Za-z0-9._-], not starting with a dot).
void validate_sample_id(const std::string& id);

/// `<dir>/<id>.graph|.opcodes|.image` plus a `<id>.stamp` written last; an
/// entry is fresh when its stamp names the same APK checksum and digest.
class FeatureCache {
 public:
  FeatureCache(std::filesystem::path dir, std::string digest);

  bool fresh(const std::string& id, std::uint32_t apk_crc) const;
  void store(const std::string& id, std::uint32_t apk_crc, const SampleViews& views) const;
  SampleViews load(const std::string& id) const;

  /// Concatenated bytes of the cached view files, for checksumming.
  Bytes raw(const std::string& id) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path file(const std::string& id, const char* ext) const;
  std::string stamp_text(std::uint32_t apk_crc) const;

  std::filesystem::path dir_;
  std::string digest_;
};

}  // namespace mvd

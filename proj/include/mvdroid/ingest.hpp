#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvdroid/bytes.hpp"

namespace mvd {

enum class Label { Benign = 0, Malicious = 1 };

std::string_view to_string(Label label);

struct SampleManifestEntry {
  std::string sample_id;
  std::filesystem::path apk_path;
  Label label = Label::Benign;
  int timestamp_year = 0;
};

/// Reads a CSV manifest with header `sample_id,apk_path,label,year`
/// (columns may appear in any order). Labels are `malicious`/`benign`,
/// case-insensitive; years must be >= 2008.
std::vector<SampleManifestEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<SampleManifestEntry>& entries);

enum class ArtifactKind { Dex, Xml, So };

std::string_view to_string(ArtifactKind kind);

struct FileSpan {
  std::string path;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// One artifact type's payload: every matching entry concatenated, with the
/// index recording where each source file landed.
struct ArtifactStream {
  Bytes bytes;
  std::vector<FileSpan> index;

  ByteSpan file_bytes(const FileSpan& span) const {
    return ByteSpan(bytes).subspan(span.offset, span.length);
  }
};

struct ApkArtifacts {
  ArtifactStream dex;
  ArtifactStream xml;
  ArtifactStream so;

  const ArtifactStream& stream(ArtifactKind kind) const;
  ArtifactStream& stream(ArtifactKind kind);
};

/// Opens an APK (ZIP) and concatenates `.dex`, `.xml` and `.so` entries per
/// type in lexicographic order of entry path. Other entries are ignored.
ApkArtifacts extract_artifacts(const std::filesystem::path& apk_path);
ApkArtifacts extract_artifacts_from_bytes(Bytes apk_bytes);

/// `<dir>/<sample_id>.<type>.bin` plus `<dir>/<sample_id>.<type>.idx`
/// (`path<TAB>offset<TAB>length` per line).
void save_stream(const std::filesystem::path& dir, const std::string& sample_id, ArtifactKind kind,
                 const ArtifactStream& stream);
ArtifactStream load_stream(const std::filesystem::path& dir, const std::string& sample_id,
                           ArtifactKind kind);

}  // namespace mvd

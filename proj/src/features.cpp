#include "mvdroid/features.hpp"

#include <cctype>
#include <cstdio>

#include "mvdroid/image_view.hpp"
#include "mvdroid/opcode_view.hpp"

namespace mvd {

FeatureExtractor::FeatureExtractor(const RunConfig& cfg) : cfg_(cfg) {
  const auto map_path =
      cfg.extract.permission_map.empty() ? default_permission_map_path() : std::filesystem::path(cfg.extract.permission_map);
  table_ = build_subsignature_table(PermissionMap::load(map_path));
}

SampleViews FeatureExtractor::extract(const ApkArtifacts& apk) const {
  const auto dex_files = dex::parse_dex(apk.dex);
  SampleViews v;
  v.graph = build_app_callgraph(dex_files, table_);
  const auto seq = categorize_opcodes(dex_files);
  v.opcodes = build_gram_matrix(seq, cfg_.model.window_length, 1, cfg_.extract.row_cap);

  const DenoiseOptions opts{cfg_.extract.so_sections};
  std::array<Plane, 3> planes;
  const std::array<ArtifactKind, 3> kinds{ArtifactKind::Dex, ArtifactKind::Xml, ArtifactKind::So};
  for (std::size_t c = 0; c < 3; ++c)
    planes[c] = bytes_to_plane(denoise(apk.stream(kinds[c]), kinds[c], opts).bytes, cfg_.extract.plane_width);
  const auto side = static_cast<std::size_t>(cfg_.model.image_size);
  v.image = assemble_and_resize(planes, side, side);
  return v;
}

void validate_sample_id(const std::string& id) {
  bool ok = !id.empty() && id.front() != '.';
  for (char c : id) ok = ok && (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-');
  if (!ok) throw Error(ErrorCode::MalformedInput, "sample id '" + id + "' is not a safe file name");
}

FeatureCache::FeatureCache(std::filesystem::path dir, std::string digest)
    : dir_(std::move(dir)), digest_(std::move(digest)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path FeatureCache::file(const std::string& id, const char* ext) const {
  validate_sample_id(id);
  return dir_ / (id + ext);
}

std::string FeatureCache::stamp_text(std::uint32_t apk_crc) const {
  char hex[9];
  std::snprintf(hex, sizeof hex, "%08x", apk_crc);
  return std::string(hex) + " " + digest_ + "\n";
}

bool FeatureCache::fresh(const std::string& id, std::uint32_t apk_crc) const {
  const auto stamp = file(id, ".stamp");
  if (!std::filesystem::exists(stamp)) return false;
  const Bytes b = read_file(stamp);
  return std::string(b.begin(), b.end()) == stamp_text(apk_crc);
}

void FeatureCache::store(const std::string& id, std::uint32_t apk_crc, const SampleViews& views) const {
  std::filesystem::remove(file(id, ".stamp"));
  write_file(file(id, ".graph"), encode_callgraph(*views.graph));
  write_file(file(id, ".opcodes"), encode_gram_matrix(*views.opcodes));
  write_file(file(id, ".image"), encode_view_image(*views.image));
  const std::string s = stamp_text(apk_crc);
  write_file(file(id, ".stamp"), ByteSpan(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

SampleViews FeatureCache::load(const std::string& id) const {
  SampleViews v;
  v.graph = decode_callgraph(read_file(file(id, ".graph")));
  v.opcodes = decode_gram_matrix(read_file(file(id, ".opcodes")));
  v.image = decode_view_image(read_file(file(id, ".image")));
  return v;
}

Bytes FeatureCache::raw(const std::string& id) const {
  Bytes out;
  for (const char* ext : {".graph", ".opcodes", ".image"}) {
    const Bytes b = read_file(file(id, ext));
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

}  // namespace mvd

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvdroid/dex.hpp"

namespace mvd {

inline constexpr std::size_t kSensitivityDim = 15;

/// One bit per protection-level attribute, ordered by the level vocabulary.
using SensitivityVector = std::array<std::uint8_t, kSensitivityDim>;

/// API -> permissions (M), permission -> protection levels (P) and the
/// ordered 15-entry level vocabulary. Text form is a TSV with sections
/// `#API_PERMISSION`, `#PERMISSION_LEVELS` and `#LEVEL_VOCAB`.
struct PermissionMap {
  std::map<std::string, std::set<std::string>> api_to_permissions;
  std::map<std::string, std::set<std::string>> permission_to_levels;
  std::vector<std::string> level_vocabulary;

  static PermissionMap parse(std::string_view text);
  static PermissionMap load(const std::filesystem::path& path);
  std::string to_text() const;

  /// Vocabulary has 15 distinct entries and covers every level used in P.
  void validate() const;
  std::size_t level_position(const std::string& level) const;
};

/// The shipped default map (15 AOSP protection-level attributes plus a
/// PScout-style sample of sensitive framework APIs).
std::filesystem::path default_permission_map_path();

struct Subsignature {
  std::string package_prefix;  // first two dot-separated fields of the class name
  std::string method_name;
  auto operator<=>(const Subsignature&) const = default;
};

/// `Lcom/foo/Bar;` -> `com.foo.Bar`. Array and primitive descriptors are
/// returned unchanged.
std::string dotted_class_name(std::string_view descriptor);
std::string package_prefix(std::string_view dotted_class);

/// Accepts Soot-style `<pkg.Class: ret name(args)>` or dotted
/// `pkg.Class.name(args)` signatures.
Subsignature subsignature_of_api(std::string_view full_signature);
Subsignature subsignature_of_method(const dex::MethodRef& method);

using SubsignatureTable = std::map<Subsignature, SensitivityVector>;

/// For every API in M, unions the protection levels of all its permissions
/// with those of every other API sharing its subsignature, then one-hot
/// encodes against the vocabulary. Throws `UnknownPermission` when a
/// permission in M is absent from P.
SubsignatureTable build_subsignature_table(const PermissionMap& map);

/// Directed method graph whose nodes carry sensitivity vectors. Nodes are
/// sorted by method key and edges by (caller, callee) index.
struct AbstractCallgraph {
  std::vector<std::string> node_names;
  std::vector<SensitivityVector> sensitivity;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

  std::size_t node_count() const { return sensitivity.size(); }
  std::size_t node_index(std::string_view name) const;
};

/// Looks every node up by subsignature: hit -> the table's vector, miss ->
/// all zeros. `extra_nodes` are methods kept even when no edge touches them.
AbstractCallgraph abstract_callgraph(std::span<const dex::CallEdge> edges, const SubsignatureTable& table,
                                     std::span<const dex::MethodRef> extra_nodes = {});
AbstractCallgraph abstract_callgraph(std::span<const dex::CallEdge> edges, const PermissionMap& map);

/// Merges the invoke edges of every DEX file of one app, keeping all local
/// methods as nodes.
AbstractCallgraph build_app_callgraph(std::span<const dex::DexFile> dex_files, const SubsignatureTable& table);

Bytes encode_callgraph(const AbstractCallgraph& graph);
AbstractCallgraph decode_callgraph(ByteSpan data);

}  // namespace mvd

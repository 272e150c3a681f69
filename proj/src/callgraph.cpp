#include "mvdroid/callgraph.hpp"

#include <algorithm>
#include <sstream>

namespace mvd {
namespace {

constexpr std::uint32_t kGraphMagic = 0x4744564d;  // "MVDG"
constexpr std::uint32_t kGraphVersion = 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace

PermissionMap PermissionMap::parse(std::string_view text) {
  enum class Section { None, Api, Levels, Vocab } section = Section::None;
  PermissionMap map;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line == "#API_PERMISSION") {
      section = Section::Api;
      continue;
    }
    if (line == "#PERMISSION_LEVELS") {
      section = Section::Levels;
      continue;
    }
    if (line == "#LEVEL_VOCAB") {
      section = Section::Vocab;
      continue;
    }
    if (line.front() == '#') continue;
    const auto where = " at line " + std::to_string(line_no);
    switch (section) {
      case Section::None:
        throw Error(ErrorCode::MalformedInput, "permission map entry before any section" + where);
      case Section::Api: {
        const auto cells = split(line, '\t');
        if (cells.size() != 2 || cells[0].empty() || cells[1].empty())
          throw Error(ErrorCode::MalformedInput, "expected signature<TAB>permission" + where);
        map.api_to_permissions[cells[0]].insert(cells[1]);
        break;
      }
      case Section::Levels: {
        const auto cells = split(line, '\t');
        if (cells.size() != 2 || cells[0].empty())
          throw Error(ErrorCode::MalformedInput, "expected permission<TAB>levels" + where);
        auto& levels = map.permission_to_levels[cells[0]];
        for (auto& lvl : split(cells[1], '|'))
          if (!lvl.empty()) levels.insert(lvl);
        break;
      }
      case Section::Vocab:
        map.level_vocabulary.emplace_back(line);
        break;
    }
  }
  map.validate();
  return map;
}

PermissionMap PermissionMap::load(const std::filesystem::path& path) {
  const Bytes data = read_file(path);
  return parse(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

std::string PermissionMap::to_text() const {
  std::ostringstream out;
  out << "#LEVEL_VOCAB\n";
  for (const auto& v : level_vocabulary) out << v << '\n';
  out << "#PERMISSION_LEVELS\n";
  for (const auto& [perm, levels] : permission_to_levels) {
    out << perm << '\t';
    bool first = true;
    for (const auto& l : levels) {
      out << (first ? "" : "|") << l;
      first = false;
    }
    out << '\n';
  }
  out << "#API_PERMISSION\n";
  for (const auto& [api, perms] : api_to_permissions)
    for (const auto& p : perms) out << api << '\t' << p << '\n';
  return out.str();
}

void PermissionMap::validate() const {
  if (level_vocabulary.size() != kSensitivityDim)
    throw Error(ErrorCode::MalformedInput,
                "level vocabulary needs " + std::to_string(kSensitivityDim) + " entries, got " +
                    std::to_string(level_vocabulary.size()));
  const std::set<std::string> distinct(level_vocabulary.begin(), level_vocabulary.end());
  if (distinct.size() != level_vocabulary.size())
    throw Error(ErrorCode::MalformedInput, "level vocabulary has duplicates");
  for (const auto& [perm, levels] : permission_to_levels)
    for (const auto& l : levels)
      if (!distinct.contains(l))
        throw Error(ErrorCode::MalformedInput, "level '" + l + "' of " + perm + " not in vocabulary");
}

std::size_t PermissionMap::level_position(const std::string& level) const {
  auto it = std::find(level_vocabulary.begin(), level_vocabulary.end(), level);
  if (it == level_vocabulary.end()) throw Error(ErrorCode::MalformedInput, "unknown level " + level);
  return static_cast<std::size_t>(it - level_vocabulary.begin());
}

std::filesystem::path default_permission_map_path() {
  return std::filesystem::path(MVDROID_DEFAULT_DATA_DIR) / "permission_map.tsv";
}

std::string dotted_class_name(std::string_view descriptor) {
  if (descriptor.size() >= 2 && descriptor.front() == 'L' && descriptor.back() == ';') {
    std::string out(descriptor.substr(1, descriptor.size() - 2));
    std::replace(out.begin(), out.end(), '/', '.');
    return out;
  }
  return std::string(descriptor);
}

std::string package_prefix(std::string_view dotted_class) {
  const auto first = dotted_class.find('.');
  if (first == std::string_view::npos) return std::string(dotted_class);
  const auto second = dotted_class.find('.', first + 1);
  return std::string(dotted_class.substr(0, second));
}

Subsignature subsignature_of_api(std::string_view sig) {
  sig = trim(sig);
  if (!sig.empty() && sig.front() == '<') {
    const auto colon = sig.find(':');
    const auto paren = sig.find('(');
    if (colon == std::string_view::npos || paren == std::string_view::npos || paren < colon)
      throw Error(ErrorCode::MalformedInput, "bad API signature: " + std::string(sig));
    const std::string_view cls = trim(sig.substr(1, colon - 1));
    const std::string_view head = trim(sig.substr(colon + 1, paren - colon - 1));
    const auto space = head.rfind(' ');
    const std::string_view name = space == std::string_view::npos ? head : head.substr(space + 1);
    return {package_prefix(cls), std::string(name)};
  }
  const auto paren = sig.find('(');
  const std::string_view qualified = sig.substr(0, paren);
  const auto dot = qualified.rfind('.');
  if (dot == std::string_view::npos)
    throw Error(ErrorCode::MalformedInput, "bad API signature: " + std::string(sig));
  return {package_prefix(qualified.substr(0, dot)), std::string(qualified.substr(dot + 1))};
}

Subsignature subsignature_of_method(const dex::MethodRef& method) {
  return {package_prefix(dotted_class_name(method.class_descriptor)), method.name};
}

SubsignatureTable build_subsignature_table(const PermissionMap& map) {
  std::map<Subsignature, std::set<std::string>> grouped;
  for (const auto& [api, perms] : map.api_to_permissions) {
    auto& levels = grouped[subsignature_of_api(api)];
    for (const auto& p : perms) {
      auto it = map.permission_to_levels.find(p);
      if (it == map.permission_to_levels.end())
        throw Error(ErrorCode::UnknownPermission, p + " (used by " + api + ")");
      levels.insert(it->second.begin(), it->second.end());
    }
  }
  SubsignatureTable table;
  for (const auto& [sub, levels] : grouped) {
    SensitivityVector vec{};
    for (const auto& l : levels) vec[map.level_position(l)] = 1;
    table.emplace(sub, vec);
  }
  return table;
}

std::size_t AbstractCallgraph::node_index(std::string_view name) const {
  auto it = std::lower_bound(node_names.begin(), node_names.end(), name);
  if (it == node_names.end() || *it != name)
    throw Error(ErrorCode::IndexOutOfRange, "no node named " + std::string(name));
  return static_cast<std::size_t>(it - node_names.begin());
}

AbstractCallgraph abstract_callgraph(std::span<const dex::CallEdge> edges, const SubsignatureTable& table,
                                     std::span<const dex::MethodRef> extra_nodes) {
  std::map<std::string, const dex::MethodRef*> nodes;
  for (const auto& e : edges) {
    nodes.emplace(e.caller.key(), &e.caller);
    nodes.emplace(e.callee.key(), &e.callee);
  }
  for (const auto& m : extra_nodes) nodes.emplace(m.key(), &m);

  AbstractCallgraph g;
  g.node_names.reserve(nodes.size());
  g.sensitivity.reserve(nodes.size());
  std::map<std::string, std::uint32_t> index;
  for (const auto& [key, method] : nodes) {
    index.emplace(key, static_cast<std::uint32_t>(g.node_names.size()));
    g.node_names.push_back(key);
    auto hit = table.find(subsignature_of_method(*method));
    g.sensitivity.push_back(hit == table.end() ? SensitivityVector{} : hit->second);
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> edge_set;
  for (const auto& e : edges) edge_set.emplace(index.at(e.caller.key()), index.at(e.callee.key()));
  g.edges.assign(edge_set.begin(), edge_set.end());
  return g;
}

AbstractCallgraph abstract_callgraph(std::span<const dex::CallEdge> edges, const PermissionMap& map) {
  return abstract_callgraph(edges, build_subsignature_table(map));
}

AbstractCallgraph build_app_callgraph(std::span<const dex::DexFile> dex_files, const SubsignatureTable& table) {
  std::vector<dex::CallEdge> edges;
  std::vector<dex::MethodRef> local;
  for (const auto& dex : dex_files) {
    auto e = dex::invoke_edges(dex);
    edges.insert(edges.end(), std::make_move_iterator(e.begin()), std::make_move_iterator(e.end()));
    for (const auto& [idx, code] : dex.code_items) local.push_back(dex.methods[idx]);
  }
  return abstract_callgraph(edges, table, local);
}

Bytes encode_callgraph(const AbstractCallgraph& g) {
  ByteWriter w;
  w.u32(kGraphMagic);
  w.u32(kGraphVersion);
  w.u32(static_cast<std::uint32_t>(g.node_count()));
  w.u32(static_cast<std::uint32_t>(g.edges.size()));
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    std::uint16_t bits = 0;
    for (std::size_t b = 0; b < kSensitivityDim; ++b)
      if (g.sensitivity[i][b]) bits |= static_cast<std::uint16_t>(1u << b);
    w.u16(bits);
    w.u32(static_cast<std::uint32_t>(g.node_names[i].size()));
    w.str(g.node_names[i]);
  }
  for (const auto& [a, b] : g.edges) {
    w.u32(a);
    w.u32(b);
  }
  return std::move(w.buffer());
}

AbstractCallgraph decode_callgraph(ByteSpan data) {
  ByteReader r(data);
  if (r.u32() != kGraphMagic) throw Error(ErrorCode::BadMagic, "not a callgraph record");
  if (r.u32() != kGraphVersion) throw Error(ErrorCode::MalformedInput, "unsupported callgraph version");
  const std::uint32_t n = r.u32();
  const std::uint32_t m = r.u32();
  AbstractCallgraph g;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint16_t bits = r.u16();
    SensitivityVector v{};
    for (std::size_t b = 0; b < kSensitivityDim; ++b) v[b] = (bits >> b) & 1u;
    g.sensitivity.push_back(v);
    const ByteSpan name = r.bytes(r.u32());
    g.node_names.emplace_back(name.begin(), name.end());
  }
  for (std::uint32_t i = 0; i < m; ++i) {
    const std::uint32_t a = r.u32();
    const std::uint32_t b = r.u32();
    if (a >= n || b >= n) throw Error(ErrorCode::IndexOutOfRange, "callgraph edge endpoint");
    g.edges.emplace_back(a, b);
  }
  return g;
}

}  // namespace mvd

#include "mvdroid/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "mvdroid/bytes.hpp"
#include "mvdroid/error.hpp"
#include "mvdroid/fusion.hpp"

namespace mvd {

std::string_view to_string(View v) {
  switch (v) {
    case View::Sensitivity: return "sensitivity";
    case View::Context: return "context";
    case View::Environment: return "environment";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::BadConfig, m); };
  if (enabled_view_count() == 0) bad("at least one view must be enabled");
  if (embedding_dim < 1) bad("embedding_dim must be positive");
  if (gcn_layers < 1 || gcn_hidden < 1) bad("gcn_layers and gcn_hidden must be positive");
  if (window_length < 1) bad("window_length must be >= 1");
  if (seq_kernel_heights.empty() || seq_filters < 1) bad("seqconv needs kernel heights and filters");
  for (auto h : seq_kernel_heights)
    if (h < 1) bad("kernel heights must be >= 1");
  if (image_channels.empty()) bad("image encoder needs at least one stage");
  for (auto c : image_channels)
    if (c < 1) bad("image channels must be positive");
  if (image_size < (Eigen::Index{1} << image_channels.size()))
    bad("image_size too small for " + std::to_string(image_channels.size()) + " pooling stages");
  if (mfb_k < 1 || mfb_o < 1) bad("mfb_k and mfb_o must be >= 1");
  if (attn_heads < 1 || attn_proj_dim < 1 || attn_head_dim < 1 || attn_out_dim < 1)
    bad("attention dims must be positive");
  for (auto h : clf_hidden)
    if (h < 1) bad("classifier widths must be positive");
  if (mfb_dropout < 0 || mfb_dropout >= 1 || clf_dropout < 0 || clf_dropout >= 1) bad("dropout must be in [0, 1)");
}

std::vector<std::pair<View, View>> fusion_pairs(const std::array<bool, kViewCount>& views) {
  std::vector<View> on;
  for (std::size_t i = 0; i < kViewCount; ++i)
    if (views[i]) on.push_back(static_cast<View>(i));
  std::vector<std::pair<View, View>> pairs;
  if (on.size() == 1) {
    pairs.emplace_back(on[0], on[0]);
    return pairs;
  }
  for (std::size_t i = 0; i < on.size(); ++i)
    for (std::size_t j = i + 1; j < on.size(); ++j) pairs.emplace_back(on[i], on[j]);
  return pairs;
}

std::string pair_name(std::pair<View, View> p) {
  return "v" + std::to_string(static_cast<int>(p.first) + 1) + "v" + std::to_string(static_cast<int>(p.second) + 1);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::BadConfig, "bad value '" + std::string(value) + "' for " + std::string(key));
}

template <typename T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  bad_value(key, v);
}

std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

std::vector<Eigen::Index> parse_index_list(std::string_view key, std::string_view v) {
  std::vector<Eigen::Index> out;
  for (const auto& s : split_list(v)) out.push_back(parse_number<Eigen::Index>(key, s));
  return out;
}

std::array<bool, kViewCount> parse_views(std::string_view key, std::string_view v) {
  std::array<bool, kViewCount> out{false, false, false};
  for (const auto& s : split_list(v)) {
    if (s == "1" || s == "sensitivity" || s == "graph") {
      out[0] = true;
    } else if (s == "2" || s == "context" || s == "opcode") {
      out[1] = true;
    } else if (s == "3" || s == "environment" || s == "image") {
      out[2] = true;
    } else {
      bad_value(key, v);
    }
  }
  return out;
}

std::string fmt(double d) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

std::string views_text(const std::array<bool, kViewCount>& views) {
  std::vector<int> on;
  for (std::size_t i = 0; i < kViewCount; ++i)
    if (views[i]) on.push_back(static_cast<int>(i) + 1);
  return join(on);
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  auto& m = model;
  auto size = [&] { return parse_number<std::size_t>(key, v); };
  auto index = [&] { return parse_number<Eigen::Index>(key, v); };
  auto real = [&] { return parse_number<double>(key, v); };

  if (key == "seed") seed = parse_number<std::uint64_t>(key, v);
  else if (key == "cache_dir") cache_dir = std::string(v);
  else if (key == "emit_png") emit_png = parse_bool(key, v);
  else if (key == "row_cap") extract.row_cap = size();
  else if (key == "plane_width") extract.plane_width = size();
  else if (key == "so_sections") extract.so_sections = split_list(v);
  else if (key == "permission_map") extract.permission_map = std::string(v);
  else if (key == "views") m.views = parse_views(key, v);
  else if (key == "embedding_dim") m.embedding_dim = index();
  else if (key == "gcn_layers") m.gcn_layers = index();
  else if (key == "gcn_hidden") m.gcn_hidden = index();
  else if (key == "window_length") m.window_length = size();
  else if (key == "seq_kernel_heights") m.seq_kernel_heights = parse_index_list(key, v);
  else if (key == "seq_filters") m.seq_filters = index();
  else if (key == "image_size") m.image_size = index();
  else if (key == "image_channels") m.image_channels = parse_index_list(key, v);
  else if (key == "mfb_k") m.mfb_k = index();
  else if (key == "mfb_o") m.mfb_o = index();
  else if (key == "mfb_dropout") m.mfb_dropout = real();
  else if (key == "attn_heads") m.attn_heads = index();
  else if (key == "attn_proj_dim") m.attn_proj_dim = index();
  else if (key == "attn_head_dim") m.attn_head_dim = index();
  else if (key == "attn_out_dim") m.attn_out_dim = index();
  else if (key == "clf_hidden") m.clf_hidden = parse_index_list(key, v);
  else if (key == "clf_dropout") m.clf_dropout = real();
  else if (key == "learning_rate") train.learning_rate = real();
  else if (key == "batch_size") train.batch_size = size();
  else if (key == "max_epochs") train.max_epochs = size();
  else if (key == "patience") train.patience = size();
  else if (key == "val_fraction") train.val_fraction = real();
  else if (key == "freeze_encoders") train.freeze_encoders = parse_bool(key, v);
  else throw Error(ErrorCode::BadConfig, "unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
  model.validate();
  if (train.batch_size < 1) throw Error(ErrorCode::BadConfig, "batch_size must be >= 1");
  if (!(train.learning_rate > 0)) throw Error(ErrorCode::BadConfig, "learning_rate must be positive");
  if (train.val_fraction < 0 || train.val_fraction >= 1) throw Error(ErrorCode::BadConfig, "val_fraction in [0,1)");
  if (extract.plane_width < 1) throw Error(ErrorCode::BadConfig, "plane_width must be >= 1");
  if (extract.row_cap < 1) throw Error(ErrorCode::BadConfig, "row_cap must be >= 1");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::BadConfig, "line " + std::to_string(line_no) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  base.validate();
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  const Bytes b = read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(b.data()), b.size()), std::move(base));
}

std::string to_config_text(const RunConfig& c) {
  const auto& m = c.model;
  std::ostringstream o;
  o << "seed = " << c.seed << '\n'
    << "cache_dir = " << c.cache_dir.string() << '\n'
    << "emit_png = " << (c.emit_png ? "true" : "false") << '\n'
    << "row_cap = " << c.extract.row_cap << '\n'
    << "plane_width = " << c.extract.plane_width << '\n'
    << "so_sections = " << join(c.extract.so_sections) << '\n'
    << "permission_map = " << c.extract.permission_map << '\n'
    << "views = " << views_text(m.views) << '\n'
    << "embedding_dim = " << m.embedding_dim << '\n'
    << "gcn_layers = " << m.gcn_layers << '\n'
    << "gcn_hidden = " << m.gcn_hidden << '\n'
    << "window_length = " << m.window_length << '\n'
    << "seq_kernel_heights = " << join(m.seq_kernel_heights) << '\n'
    << "seq_filters = " << m.seq_filters << '\n'
    << "image_size = " << m.image_size << '\n'
    << "image_channels = " << join(m.image_channels) << '\n'
    << "mfb_k = " << m.mfb_k << '\n'
    << "mfb_o = " << m.mfb_o << '\n'
    << "mfb_dropout = " << fmt(m.mfb_dropout) << '\n'
    << "attn_heads = " << m.attn_heads << '\n'
    << "attn_proj_dim = " << m.attn_proj_dim << '\n'
    << "attn_head_dim = " << m.attn_head_dim << '\n'
    << "attn_out_dim = " << m.attn_out_dim << '\n'
    << "clf_hidden = " << join(m.clf_hidden) << '\n'
    << "clf_dropout = " << fmt(m.clf_dropout) << '\n'
    << "learning_rate = " << fmt(c.train.learning_rate) << '\n'
    << "batch_size = " << c.train.batch_size << '\n'
    << "max_epochs = " << c.train.max_epochs << '\n'
    << "patience = " << c.train.patience << '\n'
    << "val_fraction = " << fmt(c.train.val_fraction) << '\n'
    << "freeze_encoders = " << (c.train.freeze_encoders ? "true" : "false") << '\n';
  return o.str();
}

std::string extraction_digest(const RunConfig& c) {
  std::ostringstream o;
  o << "window_length=" << c.model.window_length << ";image_size=" << c.model.image_size
    << ";row_cap=" << c.extract.row_cap << ";plane_width=" << c.extract.plane_width
    << ";so_sections=" << join(c.extract.so_sections) << ";permission_map=" << c.extract.permission_map;
  const std::string s = o.str();
  char hex[9];
  std::snprintf(hex, sizeof hex, "%08x", crc32_of({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}));
  return hex;
}

}  // namespace mvd

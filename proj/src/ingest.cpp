#include "mvdroid/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "mvdroid/zip.hpp"

namespace mvd {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string_view to_string(Label label) {
  return label == Label::Malicious ? "malicious" : "benign";
}

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::Dex: return "dex";
    case ArtifactKind::Xml: return "xml";
    case ArtifactKind::So: return "so";
  }
  return "?";
}

std::vector<SampleManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumn, "manifest has no header: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[lower(header[i])] = i;
  for (const char* required : {"sample_id", "apk_path", "label", "year"})
    if (!column.contains(required))
      throw Error(ErrorCode::MissingColumn, std::string("manifest lacks column '") + required + "'");

  std::vector<SampleManifestEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < header.size())
      throw Error(ErrorCode::MissingColumn, "line " + std::to_string(line_no) + " has too few cells");

    SampleManifestEntry e;
    e.sample_id = cells[column["sample_id"]];
    e.apk_path = cells[column["apk_path"]];
    const std::string label = lower(cells[column["label"]]);
    if (label == "malicious") {
      e.label = Label::Malicious;
    } else if (label == "benign") {
      e.label = Label::Benign;
    } else {
      throw Error(ErrorCode::BadLabel, "line " + std::to_string(line_no) + ": '" + cells[column["label"]] + "'");
    }
    const std::string& year = cells[column["year"]];
    auto [ptr, ec] = std::from_chars(year.data(), year.data() + year.size(), e.timestamp_year);
    if (ec != std::errc{} || ptr != year.data() + year.size() || e.timestamp_year < 2008)
      throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + ": bad year '" + year + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<SampleManifestEntry>& entries) {
  std::ostringstream out;
  out << "sample_id,apk_path,label,year\n";
  for (const auto& e : entries)
    out << e.sample_id << ',' << e.apk_path.string() << ',' << to_string(e.label) << ',' << e.timestamp_year << '\n';
  write_text_file(path, out.str());
}

const ArtifactStream& ApkArtifacts::stream(ArtifactKind kind) const {
  switch (kind) {
    case ArtifactKind::Dex: return dex;
    case ArtifactKind::Xml: return xml;
    case ArtifactKind::So: return so;
  }
  return dex;
}

ArtifactStream& ApkArtifacts::stream(ArtifactKind kind) {
  return const_cast<ArtifactStream&>(std::as_const(*this).stream(kind));
}

ApkArtifacts extract_artifacts_from_bytes(Bytes apk_bytes) {
  const zip::Archive archive(std::move(apk_bytes));

  std::vector<const zip::Entry*> sorted;
  for (const auto& e : archive.entries()) sorted.push_back(&e);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->name < b->name; });

  ApkArtifacts art;
  for (const zip::Entry* e : sorted) {
    ArtifactStream* target = nullptr;
    if (ends_with(e->name, ".dex")) {
      target = &art.dex;
    } else if (ends_with(e->name, ".xml")) {
      target = &art.xml;
    } else if (ends_with(e->name, ".so")) {
      target = &art.so;
    } else {
      continue;
    }
    const Bytes content = archive.read(*e);
    target->index.push_back({e->name, target->bytes.size(), content.size()});
    target->bytes.insert(target->bytes.end(), content.begin(), content.end());
  }
  if (art.dex.bytes.empty()) throw Error(ErrorCode::NoDexFound, "APK has no non-empty .dex entry");
  return art;
}

ApkArtifacts extract_artifacts(const std::filesystem::path& apk_path) {
  return extract_artifacts_from_bytes(read_file(apk_path));
}

void save_stream(const std::filesystem::path& dir, const std::string& sample_id, ArtifactKind kind,
                 const ArtifactStream& stream) {
  const std::string stem = sample_id + "." + std::string(to_string(kind));
  write_file(dir / (stem + ".bin"), stream.bytes);
  std::ostringstream idx;
  for (const auto& f : stream.index) idx << f.path << '\t' << f.offset << '\t' << f.length << '\n';
  write_text_file(dir / (stem + ".idx"), idx.str());
}

ArtifactStream load_stream(const std::filesystem::path& dir, const std::string& sample_id, ArtifactKind kind) {
  const std::string stem = sample_id + "." + std::string(to_string(kind));
  ArtifactStream s;
  s.bytes = read_file(dir / (stem + ".bin"));
  std::ifstream idx(dir / (stem + ".idx"));
  if (!idx) throw Error(ErrorCode::UnreadableFile, (dir / (stem + ".idx")).string());
  std::string line;
  std::size_t expected_offset = 0;
  while (std::getline(idx, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    FileSpan f;
    std::string off, len;
    if (!std::getline(ls, f.path, '\t') || !std::getline(ls, off, '\t') || !std::getline(ls, len))
      throw Error(ErrorCode::MalformedInput, "bad stream index line: " + line);
    f.offset = std::stoull(off);
    f.length = std::stoull(len);
    if (f.offset != expected_offset || f.offset + f.length > s.bytes.size())
      throw Error(ErrorCode::MalformedInput, "stream index does not tile the stream: " + line);
    expected_offset += f.length;
    s.index.push_back(std::move(f));
  }
  if (expected_offset != s.bytes.size())
    throw Error(ErrorCode::MalformedInput, "stream index does not cover " + stem);
  return s;
}

}  // namespace mvd

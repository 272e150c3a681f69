#pragma once

// Writers for crafted Android artifacts and a labeled synthetic corpus in
// which each class leaves a distinct trace in chosen views.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvdroid/bytes.hpp"
#include "mvdroid/ingest.hpp"
#include "mvdroid/model_config.hpp"

namespace mvd::synth {

/// Binary XML `<manifest package=...>` with one `<uses-permission>` per entry.
Bytes axml_manifest(const std::string& package, const std::vector<std::string>& permissions);

struct ElfSection {
  std::string name;
  Bytes content;
};

/// Little-endian ELF64 shared object holding the given PROGBITS sections
/// plus `.shstrtab`; no program headers.
Bytes elf_shared_object(const std::vector<ElfSection>& sections);

struct AppSpec {
  int label = 0;  // 1 = malicious
  std::array<bool, kViewCount> signal{true, true, true};  // views carrying the class trace
  std::uint64_t seed = 0;
  std::string package = "com.example.app";
};

/// A complete APK. Views without signal are drawn from class-independent
/// templates, so they say nothing about the label.
Bytes make_apk(const AppSpec& spec);

enum class SignalLayout {
  AllViews,        // every sample carries its class trace in all three views
  OneViewPerSample // each sample carries it in exactly one view, balanced per class
};

struct CorpusOptions {
  std::size_t per_class = 8;
  std::vector<int> years{2019};
  std::uint64_t seed = 1;
  SignalLayout layout = SignalLayout::AllViews;
};

struct CorpusSample {
  SampleManifestEntry entry;
  std::array<bool, kViewCount> signal{};
};

/// Writes `<dir>/apk/<id>.apk` for every sample and `<dir>/manifest.csv`.
/// Labels alternate benign/malicious; years cycle per pair.
std::vector<CorpusSample> write_corpus(const std::filesystem::path& dir, const CorpusOptions& options);

}  // namespace mvd::synth

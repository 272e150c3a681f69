#pragma once

// The four pipeline commands behind the command-line tool.

#include <filesystem>
#include <string>
#include <vector>

#include "mvdroid/config.hpp"
#include "mvdroid/features.hpp"
#include "mvdroid/metrics.hpp"
#include "mvdroid/train.hpp"

namespace mvd {

struct ExtractFailure {
  std::string sample_id;
  std::string error;
};

struct ExtractReport {
  std::size_t computed = 0;
  std::size_t reused = 0;
  std::vector<SampleManifestEntry> extracted;  // manifest order
  std::vector<ExtractFailure> failures;
};

/// Cache layout under `cfg.cache_dir`: `features/` holds view files,
/// `png/` the optional environment images.
FeatureCache feature_cache(const RunConfig& cfg);

/// Fills the cache for every manifest entry, skipping fresh entries. A
/// failing sample becomes a report row instead of stopping the batch.
ExtractReport extract_samples(const std::vector<SampleManifestEntry>& entries, const RunConfig& cfg);

/// extract_samples over a manifest file; also writes `samples.csv` (the
/// successful entries) and `failures.csv` into the cache directory.
ExtractReport cmd_extract(const std::filesystem::path& manifest, const RunConfig& cfg);

template <typename S>
std::vector<Example<S>> load_examples(const FeatureCache& cache, const std::vector<SampleManifestEntry>& entries,
                                      const ModelConfig& model) {
  std::vector<Example<S>> out;
  out.reserve(entries.size());
  for (const auto& e : entries)
    out.push_back({make_input<S>(cache.load(e.sample_id), model), e.label == Label::Malicious ? 1 : 0});
  return out;
}

struct TrainOutcome {
  TrainResult result;
  Checkpoint checkpoint;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

/// Trains on the samples listed in `<cache_dir>/samples.csv` with a
/// stratified validation split, then writes the checkpoint and
/// `<checkpoint>.history.csv`.
TrainOutcome cmd_train(const RunConfig& cfg, const std::filesystem::path& checkpoint_path);

struct Prediction {
  std::string sample;
  Label label = Label::Benign;
  double p_benign = 0;
  double p_malicious = 0;
};

/// Rebuilds the model and extraction settings from the checkpoint alone.
std::vector<Prediction> cmd_predict(const std::filesystem::path& checkpoint,
                                    const std::vector<std::filesystem::path>& apks);

/// Evaluates the manifest's samples, slotted by year. Features go through
/// the cache at `cache_dir`; samples that fail extraction are skipped.
EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                    const std::filesystem::path& cache_dir);

}  // namespace mvd

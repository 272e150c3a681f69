#include "mvdroid/commands.hpp"

#include <memory>

#include "mvdroid/image_view.hpp"
#include "mvdroid/log.hpp"

namespace mvd {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::unique_ptr<Model<float>> model_from(const Checkpoint& ckpt, RunConfig& cfg) {
  cfg = parse_config(ckpt.config_text);
  auto model = std::make_unique<Model<float>>(cfg.model, cfg.seed);
  restore(model->params(), ckpt.arrays);
  return model;
}

}  // namespace

FeatureCache feature_cache(const RunConfig& cfg) { return FeatureCache(cfg.cache_dir / "features", extraction_digest(cfg)); }

ExtractReport extract_samples(const std::vector<SampleManifestEntry>& entries, const RunConfig& cfg) {
  const FeatureCache cache = feature_cache(cfg);
  const FeatureExtractor extractor(cfg);
  ExtractReport report;
  for (const auto& e : entries) {
    try {
      validate_sample_id(e.sample_id);
      Bytes apk = read_file(e.apk_path);
      const std::uint32_t crc = crc32_of(apk);
      if (cache.fresh(e.sample_id, crc)) {
        ++report.reused;
      } else {
        const SampleViews views = extractor.extract(extract_artifacts_from_bytes(std::move(apk)));
        cache.store(e.sample_id, crc, views);
        ++report.computed;
      }
      if (cfg.emit_png) {
        std::filesystem::create_directories(cfg.cache_dir / "png");
        write_png(*cache.load(e.sample_id).image, cfg.cache_dir / "png" / (e.sample_id + ".png"));
      }
      report.extracted.push_back(e);
    } catch (const std::exception& ex) {
      log::warn("extract " + e.sample_id + ": " + ex.what());
      report.failures.push_back({e.sample_id, ex.what()});
    }
  }
  return report;
}

ExtractReport cmd_extract(const std::filesystem::path& manifest, const RunConfig& cfg) {
  const auto entries = load_manifest(manifest);
  ExtractReport report = extract_samples(entries, cfg);
  write_manifest(cfg.cache_dir / "samples.csv", report.extracted);
  std::string failures = "sample_id,error\n";
  for (const auto& f : report.failures) failures += csv_field(f.sample_id) + "," + csv_field(f.error) + "\n";
  write_text(cfg.cache_dir / "failures.csv", failures);
  log::info("extract: " + std::to_string(report.computed) + " computed, " + std::to_string(report.reused) +
            " reused, " + std::to_string(report.failures.size()) + " failed");
  return report;
}

TrainOutcome cmd_train(const RunConfig& cfg, const std::filesystem::path& checkpoint_path) {
  cfg.validate();
  const auto entries = load_manifest(cfg.cache_dir / "samples.csv");
  const auto all = load_examples<float>(feature_cache(cfg), entries, cfg.model);
  std::vector<int> labels;
  for (const auto& ex : all) labels.push_back(ex.label);
  const auto [train_idx, val_idx] = stratified_split(labels, cfg.train.val_fraction, cfg.seed);

  std::vector<Example<float>> train, val;
  for (auto i : train_idx) train.push_back(all[i]);
  for (auto i : val_idx) val.push_back(all[i]);

  Model<float> model(cfg.model, cfg.seed);
  TrainOutcome out;
  out.train_size = train.size();
  out.val_size = val.size();
  out.result = train_model(model, train, val, cfg.train, cfg.seed, [](const EpochRecord& r) {
    log::info("epoch " + std::to_string(r.epoch) + " train_loss " + std::to_string(r.train_loss) + " val_loss " +
              std::to_string(r.val_loss) + " val_acc " + std::to_string(r.val_acc));
  });
  // Run-location settings stay out of the checkpoint so it depends only on data and hyperparameters.
  RunConfig stored = cfg;
  stored.cache_dir = RunConfig{}.cache_dir;
  stored.emit_png = RunConfig{}.emit_png;
  out.checkpoint = {to_config_text(stored), snapshot(model.params())};
  save_checkpoint(checkpoint_path, out.checkpoint);
  write_text(checkpoint_path.string() + ".history.csv", history_csv(out.result.history));
  return out;
}

std::vector<Prediction> cmd_predict(const std::filesystem::path& checkpoint,
                                    const std::vector<std::filesystem::path>& apks) {
  RunConfig cfg;
  const auto model = model_from(load_checkpoint(checkpoint), cfg);
  const FeatureExtractor extractor(cfg);
  std::mt19937_64 rng(0);
  std::vector<Prediction> out;
  for (const auto& apk : apks) {
    const auto probs = model->forward(make_input<float>(extractor.extract(apk), cfg.model), false, rng);
    Prediction p;
    p.sample = apk.string();
    p.p_benign = probs.value()[0];
    p.p_malicious = probs.value()[1];
    p.label = predicted_class(p.p_benign, p.p_malicious) == 1 ? Label::Malicious : Label::Benign;
    out.push_back(p);
  }
  return out;
}

EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                    const std::filesystem::path& cache_dir) {
  RunConfig cfg;
  const auto model = model_from(load_checkpoint(checkpoint), cfg);
  cfg.cache_dir = cache_dir;
  const ExtractReport ex = extract_samples(load_manifest(manifest), cfg);
  if (ex.extracted.empty()) throw Error(ErrorCode::EmptyDataset, "no evaluable samples in " + manifest.string());
  const auto data = load_examples<float>(feature_cache(cfg), ex.extracted, cfg.model);
  std::mt19937_64 rng(0);
  std::vector<int> labels, preds, slots;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto probs = model->forward(data[i].input, false, rng);
    labels.push_back(data[i].label);
    preds.push_back(predicted_class(probs.value()[0], probs.value()[1]));
    slots.push_back(ex.extracted[i].timestamp_year);
  }
  return evaluate_slots(labels, preds, slots);
}

}  // namespace mvd

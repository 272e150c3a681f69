#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "mvdroid/commands.hpp"
#include "mvdroid/log.hpp"
#include "mvdroid/synth.hpp"

using namespace mvd;

namespace {

struct Common {
  std::string config_file;
  std::string cache_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> window_length;
  bool emit_png = false;
  bool freeze = false;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--cache-dir", cache_dir, "feature cache directory");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--window-length", window_length, "opcode-gram window length");
    cmd->add_flag("--emit-png", emit_png, "write one PNG per sample for the environment view");
    cmd->add_flag("--freeze-encoders", freeze, "train only the fusion block and classifier");
    cmd->add_option("--set", overrides, "extra key=value overrides");
  }

  // Defaults, then the file, then flags.
  RunConfig resolve() const {
    RunConfig cfg = config_file.empty() ? RunConfig{} : load_config(config_file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::BadConfig, "--set expects key=value, got " + kv);
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
    if (seed) cfg.seed = *seed;
    if (window_length) cfg.model.window_length = *window_length;
    if (emit_png) cfg.emit_png = true;
    if (freeze) cfg.train.freeze_encoders = true;
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvdroid: multi-view Android malware detection"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");

  Common extract_opts, train_opts, eval_opts, config_opts;
  std::string manifest, checkpoint = "model.ckpt", eval_manifest, eval_out;
  std::vector<std::string> apks;

  auto* extract = app.add_subcommand("extract", "build the per-view feature cache");
  extract->add_option("--manifest", manifest, "CSV manifest")->required()->check(CLI::ExistingFile);
  extract_opts.attach(extract);

  auto* train = app.add_subcommand("train", "train on the extracted samples");
  train->add_option("--manifest", manifest, "extract this manifest first")->check(CLI::ExistingFile);
  train->add_option("--checkpoint,-o", checkpoint, "output checkpoint");
  train_opts.attach(train);

  auto* predict = app.add_subcommand("predict", "classify APK files");
  predict->add_option("--checkpoint,-c", checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("apks", apks, "APK files")->required()->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "evaluate on a labeled manifest");
  eval->add_option("--checkpoint,-c", checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", eval_manifest, "CSV manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "also write the report JSON here");
  eval_opts.attach(eval);

  auto* config = app.add_subcommand("config", "print the effective configuration");
  config_opts.attach(config);

  std::string synth_dir;
  std::size_t per_class = 8;
  std::vector<int> years{2019};
  std::uint64_t synth_seed = 1;
  bool one_view = false;
  auto* synth = app.add_subcommand("synth", "write a labeled synthetic corpus");
  synth->add_option("--out", synth_dir, "output directory")->required();
  synth->add_option("--per-class", per_class, "samples per class");
  synth->add_option("--years", years, "year slots, cycled per sample pair")->delimiter(',');
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_flag("--one-view", one_view, "carry each sample's class trace in a single view");

  CLI11_PARSE(app, argc, argv);
  log::set_verbose(verbose);

  try {
    if (*extract) {
      const auto r = cmd_extract(manifest, extract_opts.resolve());
      std::cout << "extracted " << r.extracted.size() << " (" << r.computed << " computed, " << r.reused
                << " reused), failed " << r.failures.size() << '\n';
    } else if (*train) {
      const RunConfig cfg = train_opts.resolve();
      if (!manifest.empty()) cmd_extract(manifest, cfg);
      const auto out = cmd_train(cfg, checkpoint);
      const auto& best = out.result.history[out.result.best_epoch - 1];
      std::cout << "trained on " << out.train_size << ", validated on " << out.val_size << "; best epoch "
                << out.result.best_epoch << " val_loss " << best.val_loss << " val_acc " << best.val_acc << '\n';
    } else if (*predict) {
      std::vector<std::filesystem::path> paths(apks.begin(), apks.end());
      std::cout << "apk,label,p_benign,p_malicious\n";
      for (const auto& p : cmd_predict(checkpoint, paths)) {
        char probs[64];
        std::snprintf(probs, sizeof probs, "%.6f,%.6f", p.p_benign, p.p_malicious);
        std::cout << p.sample << ',' << to_string(p.label) << ',' << probs << '\n';
      }
    } else if (*eval) {
      const RunConfig cfg = eval_opts.resolve();
      const std::string json = to_json(cmd_eval(checkpoint, eval_manifest, cfg.cache_dir));
      std::cout << json;
      if (!eval_out.empty()) write_file(eval_out, ByteSpan(reinterpret_cast<const std::uint8_t*>(json.data()), json.size()));
    } else if (*config) {
      std::cout << to_config_text(config_opts.resolve());
    } else if (*synth) {
      synth::CorpusOptions opts;
      opts.per_class = per_class;
      opts.years = years;
      opts.seed = synth_seed;
      opts.layout = one_view ? synth::SignalLayout::OneViewPerSample : synth::SignalLayout::AllViews;
      const auto samples = synth::write_corpus(synth_dir, opts);
      std::cout << "wrote " << samples.size() << " samples to " << synth_dir << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

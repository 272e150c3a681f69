#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "fixture_util.hpp"
#include "mvdroid/axml.hpp"
#include "mvdroid/commands.hpp"
#include "mvdroid/elf.hpp"
#include "mvdroid/image_view.hpp"
#include "mvdroid/synth.hpp"

using namespace mvd;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig =
    "embedding_dim = 16\n"
    "gcn_hidden = 8\n"
    "seq_filters = 8\n"
    "image_size = 16\n"
    "image_channels = 4,4\n"
    "mfb_k = 3\n"
    "mfb_o = 16\n"
    "attn_heads = 2\n"
    "attn_proj_dim = 16\n"
    "attn_head_dim = 8\n"
    "attn_out_dim = 32\n"
    "clf_hidden = 16,8\n"
    "batch_size = 8\n"
    "max_epochs = 60\n"
    "learning_rate = 0.003\n"
    "val_fraction = 0\n";

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code = -1;
  std::string out, err;
};

Run cli(const fixture::TempDir& dir, const std::string& args) {
  const auto out = dir.path() / "stdout.txt", err = dir.path() / "stderr.txt";
  const std::string cmd = std::string(MVDROID_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, slurp(out), slurp(err)};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::size_t count_occurrences(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

RunConfig small_config(const fs::path& cache) {
  RunConfig cfg = parse_config(kSmallConfig);
  cfg.cache_dir = cache;
  return cfg;
}

bool any_bit(const AbstractCallgraph& g, std::size_t bit) {
  for (const auto& v : g.sensitivity)
    if (v[bit]) return true;
  return false;
}

bool has_category(const OpcodeGramMatrix& m, OpcodeCategory c) {
  for (std::size_t r = 0; r < m.rows; ++r)
    if (m.at(r, static_cast<std::size_t>(c))) return true;
  return false;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synthetic AXML walks as one document") {
  const Bytes doc = synth::axml_manifest("com.x", {"android.permission.INTERNET", "android.permission.CAMERA"});
  const auto docs = axml::walk(doc);
  REQUIRE(docs.size() == 1);
  CHECK(docs[0].root.size == doc.size());
  std::vector<int> types;
  for (const auto& c : docs[0].children) types.push_back(c.type);
  CHECK(types == std::vector<int>{axml::kStringPool, axml::kResourceMap, axml::kStartNamespace, axml::kStartElement,
                                  axml::kStartElement, axml::kEndElement, axml::kStartElement, axml::kEndElement,
                                  axml::kEndElement, axml::kEndNamespace});
  const std::string text(doc.begin(), doc.end());
  CHECK(text.find("android.permission.CAMERA") != std::string::npos);
}

TEST_CASE("synthetic ELF exposes its sections") {
  const Bytes text(37, 0xaa), data{1, 2, 3};
  const Bytes so = synth::elf_shared_object({{".text", text}, {".data", data}});
  const auto secs = elf::sections(so);
  REQUIRE(secs.size() == 4);
  CHECK(secs[1].name == ".text");
  CHECK(secs[1].size == 37);
  CHECK(secs[2].name == ".data");
  CHECK(secs[3].name == ".shstrtab");
  const auto kept = denoise(so, ArtifactKind::So);
  CHECK_FALSE(kept.passthrough);
  Bytes expect = text;
  expect.insert(expect.end(), data.begin(), data.end());
  CHECK(kept.bytes == expect);
}

TEST_CASE("synthetic apps carry the class trace only where asked") {
  RunConfig cfg;
  cfg.model.image_size = 32;
  const FeatureExtractor fe(cfg);
  const auto views = [&](int label, std::array<bool, 3> signal) {
    return fe.extract(extract_artifacts_from_bytes(synth::make_apk({label, signal, 9, "org.t.app"})));
  };
  const auto mal = views(1, {true, true, true}), ben = views(0, {true, true, true});
  const auto quiet = views(1, {false, false, false});

  CHECK(any_bit(*mal.graph, 1));  // dangerous
  CHECK_FALSE(any_bit(*ben.graph, 1));
  CHECK(any_bit(*ben.graph, 0));  // normal
  CHECK_FALSE(any_bit(*quiet.graph, 0));
  CHECK_FALSE(any_bit(*quiet.graph, 1));

  CHECK(has_category(*mal.opcodes, OpcodeCategory::If));
  CHECK_FALSE(has_category(*mal.opcodes, OpcodeCategory::Get));
  CHECK(has_category(*ben.opcodes, OpcodeCategory::Get));
  CHECK_FALSE(has_category(*ben.opcodes, OpcodeCategory::If));
  CHECK_FALSE(has_category(*quiet.opcodes, OpcodeCategory::If));
  CHECK_FALSE(has_category(*quiet.opcodes, OpcodeCategory::Get));

  const auto blue = [](const SampleViews& v) { return v.image->channels[2].cast<double>().mean(); };
  CHECK(blue(mal) > 150);
  CHECK(blue(ben) < 100);
  CHECK(blue(quiet) > 100);
  CHECK(blue(quiet) < 150);
}

TEST_CASE("dex strings do not depend on the label") {
  const auto strings = [](int label) {
    const auto apk = extract_artifacts_from_bytes(synth::make_apk({label, {true, true, true}, 3, "org.t.same"}));
    const auto files = dex::parse_dex(apk.dex);
    return std::set<std::string>(files[0].strings.begin(), files[0].strings.end());
  };
  const auto a = strings(0), b = strings(1);
  CHECK(a == b);
}

TEST_CASE("corpus layout and one-view signal balance") {
  fixture::TempDir dir("corpus");
  synth::CorpusOptions o;
  o.per_class = 6;
  o.years = {2019, 2020, 2021};
  o.layout = synth::SignalLayout::OneViewPerSample;
  const auto samples = synth::write_corpus(dir.path(), o);
  REQUIRE(samples.size() == 12);
  const auto manifest = load_manifest(dir.path() / "manifest.csv");
  CHECK(manifest.size() == 12);
  std::array<std::array<int, 3>, 2> per{};
  for (const auto& s : samples) {
    CHECK(std::count(s.signal.begin(), s.signal.end(), true) == 1);
    const auto view = static_cast<std::size_t>(std::find(s.signal.begin(), s.signal.end(), true) - s.signal.begin());
    ++per[s.entry.label == Label::Malicious ? 1 : 0][view];
    CHECK(fs::exists(s.entry.apk_path));
  }
  for (const auto& cls : per) CHECK(cls == std::array<int, 3>{2, 2, 2});
  CHECK(manifest[0].timestamp_year == 2019);
  CHECK(manifest[2].timestamp_year == 2020);
  CHECK(manifest[11].timestamp_year == 2021);
}

TEST_CASE("extract is idempotent and isolates failures") {
  fixture::TempDir dir("extract");
  synth::CorpusOptions o;
  o.per_class = 2;
  auto samples = synth::write_corpus(dir.path() / "corpus", o);
  std::vector<SampleManifestEntry> entries;
  for (const auto& s : samples) entries.push_back(s.entry);
  const fs::path junk = dir.path() / "corpus" / "junk.apk";
  write_file(junk, Bytes{'n', 'o', 'p', 'e'});
  entries.push_back({"broken", junk, Label::Malicious, 2019});
  write_manifest(dir.path() / "m.csv", entries);

  const fs::path cache = dir.path() / "cache";
  auto r = cli(dir, "extract --manifest " + (dir.path() / "m.csv").string() + " --cache-dir " + cache.string() +
                        " --emit-png");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("extracted 4 (4 computed, 0 reused), failed 1") != std::string::npos);
  const std::string failures = slurp(cache / "failures.csv");
  CHECK(line_count(failures) == 2);
  CHECK(failures.find("broken,NotAZip") != std::string::npos);
  CHECK(load_manifest(cache / "samples.csv").size() == 4);
  std::size_t pngs = 0;
  for (const auto& e : fs::directory_iterator(cache / "png")) pngs += e.path().extension() == ".png" ? 1 : 0;
  CHECK(pngs == 4);

  RunConfig cfg;
  cfg.cache_dir = cache;
  const auto fc = feature_cache(cfg);
  std::vector<std::uint32_t> digests;
  for (const auto& s : samples) digests.push_back(crc32_of(fc.raw(s.entry.sample_id)));

  r = cli(dir, "extract --manifest " + (dir.path() / "m.csv").string() + " --cache-dir " + cache.string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("(0 computed, 4 reused), failed 1") != std::string::npos);
  for (std::size_t i = 0; i < samples.size(); ++i) CHECK(crc32_of(fc.raw(samples[i].entry.sample_id)) == digests[i]);

  // a changed extraction setting invalidates the stamps
  r = cli(dir, "extract --manifest " + (dir.path() / "m.csv").string() + " --cache-dir " + cache.string() +
                   " --window-length 3");
  CHECK(r.out.find("(4 computed, 0 reused)") != std::string::npos);
}

TEST_CASE("train, predict and eval through the command line") {
  fixture::TempDir dir("pipeline");
  synth::CorpusOptions o;
  o.per_class = 4;
  o.years = {2019, 2020, 2021, 2022};
  const auto samples = synth::write_corpus(dir.path() / "corpus", o);
  const fs::path cfg_file = dir.path() / "small.cfg";
  write_file(cfg_file, ByteSpan(reinterpret_cast<const std::uint8_t*>(kSmallConfig), std::strlen(kSmallConfig)));
  const std::string manifest = (dir.path() / "corpus" / "manifest.csv").string();
  const std::string common = " --config " + cfg_file.string() + " --cache-dir " + (dir.path() / "cache").string();

  const fs::path ck = dir.path() / "model.ckpt";
  auto r = cli(dir, "train --manifest " + manifest + common + " --seed 5 -o " + ck.string());
  REQUIRE(r.code == 0);
  CHECK(fs::exists(ck.string() + ".history.csv"));
  CHECK(slurp(ck.string() + ".history.csv").rfind("epoch,train_loss,val_loss,val_acc\n", 0) == 0);
  const Checkpoint saved = load_checkpoint(ck);
  CHECK(saved.config_text.find("seed = 5\n") != std::string::npos);
  CHECK(saved.config_text.find("embedding_dim = 16\n") != std::string::npos);

  SUBCASE("same seed gives the same checkpoint") {
    const fs::path ck2 = dir.path() / "again.ckpt";
    REQUIRE(cli(dir, "train" + common + " --seed 5 -o " + ck2.string()).code == 0);
    CHECK(read_file(ck) == read_file(ck2));
  }

  SUBCASE("predict recovers training labels confidently") {
    r = cli(dir, "predict -c " + ck.string() + " " + samples[0].entry.apk_path.string() + " " +
                     samples[1].entry.apk_path.string());
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header, first, second;
    std::getline(lines, header);
    std::getline(lines, first);
    std::getline(lines, second);
    CHECK(header == "apk,label,p_benign,p_malicious");
    const auto benign = split_csv(first), malicious = split_csv(second);
    REQUIRE(benign.size() == 4);
    REQUIRE(malicious.size() == 4);
    CHECK(benign[1] == "benign");
    CHECK(std::stod(benign[2]) > 0.9);
    CHECK(malicious[1] == "malicious");
    CHECK(std::stod(malicious[3]) > 0.9);
  }

  SUBCASE("eval over four years feeds four slots") {
    r = cli(dir, "eval -c " + ck.string() + " --manifest " + manifest + common);
    REQUIRE(r.code == 0);
    CHECK(count_occurrences(r.out, "\"slot\"") == 4);
    CHECK(r.out.find("\"aut\"") != std::string::npos);
    CHECK(r.out.find("\"accuracy\": 1.0") != std::string::npos);
  }

  SUBCASE("eval over one year omits AUT") {
    auto entries = load_manifest(manifest);
    for (auto& e : entries) e.timestamp_year = 2019;
    write_manifest(dir.path() / "one.csv", entries);
    r = cli(dir, "eval -c " + ck.string() + " --manifest " + (dir.path() / "one.csv").string() + common);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("\"slot\"") == std::string::npos);
    CHECK(r.out.find("\"aut\"") == std::string::npos);
  }
}

TEST_CASE("flags override the config file") {
  fixture::TempDir dir("flags");
  synth::CorpusOptions o;
  o.per_class = 2;
  write_corpus(dir.path() / "corpus", o);
  const fs::path cfg_file = dir.path() / "c.cfg";
  const std::string text = std::string(kSmallConfig) + "max_epochs = 1\nwindow_length = 2\nseed = 3\n";
  write_file(cfg_file, ByteSpan(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  const fs::path ck = dir.path() / "m.ckpt";
  const auto r = cli(dir, "train --manifest " + (dir.path() / "corpus" / "manifest.csv").string() + " --config " +
                              cfg_file.string() + " --cache-dir " + (dir.path() / "cache").string() +
                              " --window-length 5 --freeze-encoders -o " + ck.string());
  REQUIRE(r.code == 0);
  const std::string saved = load_checkpoint(ck).config_text;
  CHECK(saved.find("window_length = 5\n") != std::string::npos);
  CHECK(saved.find("seed = 3\n") != std::string::npos);
  CHECK(saved.find("freeze_encoders = true\n") != std::string::npos);
}

TEST_CASE("command errors exit non-zero with the error code") {
  fixture::TempDir dir("errors");
  const fs::path cfg_file = dir.path() / "bad.cfg";
  write_file(cfg_file, Bytes{'n', 'o', 'p', 'e', ' ', '=', ' ', '1', '\n'});
  synth::CorpusOptions o;
  o.per_class = 1;
  write_corpus(dir.path() / "corpus", o);
  auto r = cli(dir, "extract --manifest " + (dir.path() / "corpus" / "manifest.csv").string() + " --config " +
                        cfg_file.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("BadConfig") != std::string::npos);

  const fs::path junk = dir.path() / "junk.ckpt";
  write_file(junk, Bytes(64, 7));
  r = cli(dir, "predict -c " + junk.string() + " " + (dir.path() / "corpus" / "apk" / "s0000.apk").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("BadMagic") != std::string::npos);
}

TEST_CASE("library train on an empty sample list") {
  fixture::TempDir dir("empty");
  RunConfig cfg = small_config(dir.path());
  write_manifest(dir.path() / "samples.csv", {});
  CHECK_THROWS_WITH_AS(cmd_train(cfg, dir.path() / "x.ckpt"), doctest::Contains("EmptyDataset"), Error);
}

}  // TEST_SUITE

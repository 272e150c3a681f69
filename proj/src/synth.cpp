#include "mvdroid/synth.hpp"

#include <cstdio>
#include <cstring>
#include <random>

#include "mvdroid/axml.hpp"
#include "mvdroid/dex_writer.hpp"
#include "mvdroid/zip.hpp"

namespace mvd::synth {
namespace {

constexpr std::uint32_t kAndroidNameRes = 0x01010003;
constexpr std::uint32_t kNoString = 0xffffffff;

class StringPool {
 public:
  std::uint32_t add(const std::string& s) {
    for (std::uint32_t i = 0; i < strings_.size(); ++i)
      if (strings_[i] == s) return i;
    strings_.push_back(s);
    return static_cast<std::uint32_t>(strings_.size() - 1);
  }

  // UTF-8 pool: two length prefixes (chars, bytes), data, NUL.
  void write(ByteWriter& w) const {
    ByteWriter data;
    std::vector<std::uint32_t> offsets;
    for (const auto& s : strings_) {
      if (s.size() >= 0x80) throw Error(ErrorCode::MalformedInput, "synthetic AXML strings must be < 128 bytes");
      offsets.push_back(static_cast<std::uint32_t>(data.size()));
      data.u8(static_cast<std::uint8_t>(s.size()));
      data.u8(static_cast<std::uint8_t>(s.size()));
      data.str(s);
      data.u8(0);
    }
    data.pad_to(4);
    const auto header = 28u, start = header + 4u * static_cast<std::uint32_t>(strings_.size());
    w.u16(axml::kStringPool);
    w.u16(header);
    w.u32(start + static_cast<std::uint32_t>(data.size()));
    w.u32(static_cast<std::uint32_t>(strings_.size()));
    w.u32(0);        // styles
    w.u32(1u << 8);  // UTF-8
    w.u32(start);
    w.u32(0);
    for (auto o : offsets) w.u32(o);
    w.bytes(data.buffer());
  }

 private:
  std::vector<std::string> strings_;
};

void node_header(ByteWriter& w, std::uint16_t type, std::uint32_t size) {
  w.u16(type);
  w.u16(16);
  w.u32(size);
  w.u32(1);  // line
  w.u32(kNoString);
}

struct Attr {
  std::uint32_t ns, name, value;
};

void start_element(ByteWriter& w, std::uint32_t ns, std::uint32_t name, const std::vector<Attr>& attrs) {
  node_header(w, axml::kStartElement, 16 + 20 + 20 * static_cast<std::uint32_t>(attrs.size()));
  w.u32(ns);
  w.u32(name);
  w.u16(20);
  w.u16(20);
  w.u16(static_cast<std::uint16_t>(attrs.size()));
  w.u16(0);
  w.u16(0);
  w.u16(0);
  for (const auto& a : attrs) {
    w.u32(a.ns);
    w.u32(a.name);
    w.u32(a.value);
    w.u16(8);
    w.u8(0);
    w.u8(0x03);  // string
    w.u32(a.value);
  }
}

void end_element(ByteWriter& w, std::uint32_t ns, std::uint32_t name) {
  node_header(w, axml::kEndElement, 24);
  w.u32(ns);
  w.u32(name);
}

std::string descriptor(const std::string& dotted) {
  std::string d = "L" + dotted + ";";
  for (auto& c : d)
    if (c == '.') c = '/';
  return d;
}

struct Api {
  const char* cls;
  const char* name;
};

// Dangerous-level calls, normal-level calls, and framework calls with no
// permission mapping.
const std::vector<Api> kMaliciousApis{{"android.telephony.SmsManager", "sendTextMessage"},
                                      {"android.telephony.TelephonyManager", "getDeviceId"},
                                      {"android.telephony.TelephonyManager", "getSubscriberId"},
                                      {"android.location.LocationManager", "getLastKnownLocation"},
                                      {"android.accounts.AccountManager", "getAccounts"},
                                      {"android.media.AudioRecord", "startRecording"},
                                      {"android.hardware.Camera", "open"}};
const std::vector<Api> kBenignApis{{"android.os.Vibrator", "vibrate"},
                                   {"android.net.wifi.WifiManager", "getConnectionInfo"},
                                   {"android.net.ConnectivityManager", "getActiveNetworkInfo"},
                                   {"android.bluetooth.BluetoothAdapter", "getAddress"},
                                   {"android.media.AudioManager", "setMode"},
                                   {"android.os.PowerManager", "newWakeLock"}};
const std::vector<Api> kNeutralApis{{"android.util.Log", "d"},
                                    {"java.lang.StringBuilder", "append"},
                                    {"android.os.Handler", "post"},
                                    {"java.util.ArrayList", "add"},
                                    {"android.widget.Toast", "show"},
                                    {"android.content.Intent", "putExtra"}};

dex::MethodSpec api_spec(const Api& a) { return {descriptor(a.cls), a.name, "V", {}}; }

dex::MethodDef method(const std::string& cls, const std::string& name, std::vector<dex::AsmInsn> code) {
  dex::MethodDef m;
  m.spec = {cls, name, "V", {}};
  m.registers = 4;
  m.code = std::move(code);
  m.code.push_back(dex::asm_::return_void());
  return m;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  Bytes b(n);
  for (auto& v : b) v = static_cast<std::uint8_t>(d(rng));
  return b;
}

Bytes make_dex(const AppSpec& spec, std::mt19937_64& rng, const std::string& pkg_path) {
  const std::string main = "L" + pkg_path + "/Main;", util = "L" + pkg_path + "/Util;";
  std::uniform_int_distribution<int> count(4, 9), coin(0, 1);
  const int helpers = 4;

  dex::ClassSpec util_cls;
  util_cls.descriptor = util;
  for (int h = 0; h < helpers; ++h) {
    auto m = method(util, "h" + std::to_string(h), {});
    m.access_flags = 0x0009;  // public static
    m.direct = true;
    util_cls.methods.push_back(std::move(m));
  }

  dex::ClassSpec main_cls;
  main_cls.descriptor = main;

  // Every app names every pool API, so string data does not depend on the label.
  std::vector<dex::AsmInsn> names;
  for (const auto* pool : {&kMaliciousApis, &kBenignApis, &kNeutralApis})
    for (const auto& a : *pool) {
      names.push_back(dex::asm_::const_string(0, descriptor(a.cls)));
      names.push_back(dex::asm_::const_string(0, a.name));
    }
  main_cls.methods.push_back(method(main, "banner", std::move(names)));

  const std::vector<Api>& pool = !spec.signal[0] ? kNeutralApis : spec.label == 1 ? kMaliciousApis : kBenignApis;
  std::vector<dex::AsmInsn> calls;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int i = 0; i < 4; ++i) calls.push_back(dex::asm_::invoke(0x71, api_spec(pool[pick(rng)])));
  main_cls.methods.push_back(method(main, "sync", std::move(calls)));

  std::uniform_int_distribution<int> helper(0, helpers - 1);
  const int fillers = 3 + static_cast<int>(rng() % 4);
  for (int f = 0; f < fillers; ++f) {
    std::vector<dex::AsmInsn> body;
    for (int i = count(rng); i > 0; --i) {
      if (coin(rng))
        body.push_back(dex::asm_::move(1, 0));
      else
        body.push_back(dex::asm_::invoke(0x71, {util, "h" + std::to_string(helper(rng)), "V", {}}));
      if (rng() % 3 == 0) body.push_back(dex::asm_::const4(0, 1));
    }
    main_cls.methods.push_back(method(main, "f" + std::to_string(f), std::move(body)));
  }

  if (spec.signal[1]) {
    for (int loop = 0; loop < 2; ++loop) {
      std::vector<dex::AsmInsn> body;
      for (int i = count(rng); i > 0; --i) {
        if (spec.label == 1) {
          body.push_back(dex::asm_::if_eqz(0, 3));
          body.push_back(dex::asm_::goto_(1));
        } else {
          body.push_back(dex::asm_::aget(0, 1, 2));
          body.push_back(dex::asm_::aput(0, 1, 2));
        }
      }
      main_cls.methods.push_back(method(main, "w" + std::to_string(loop), std::move(body)));
    }
  }

  dex::DexBuilder b;
  b.add_class(std::move(main_cls));
  b.add_class(std::move(util_cls));
  return b.build();
}

Bytes make_native_lib(const AppSpec& spec, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> size(1500, 3000);
  int lo = 64, hi = 191;
  if (spec.signal[2]) {
    lo = spec.label == 1 ? 160 : 0;
    hi = spec.label == 1 ? 255 : 95;
  }
  Bytes rodata;
  for (const char* s : {"libnative", "init", "JNI_OnLoad"}) {
    rodata.insert(rodata.end(), s, s + std::strlen(s));
    rodata.push_back(0);
  }
  return elf_shared_object({{".text", random_bytes(rng, size(rng), lo, hi)},
                            {".rodata", rodata},
                            {".data", random_bytes(rng, 64, 0, 255)}});
}

}  // namespace

Bytes axml_manifest(const std::string& package, const std::vector<std::string>& permissions) {
  StringPool pool;
  const auto name = pool.add("name");  // index 0: mapped to android:name
  const auto android = pool.add("android");
  const auto uri = pool.add("http://schemas.android.com/apk/res/android");
  const auto manifest = pool.add("manifest");
  const auto package_attr = pool.add("package");
  const auto uses = pool.add("uses-permission");
  const auto pkg = pool.add(package);
  std::vector<std::uint32_t> perms;
  for (const auto& p : permissions) perms.push_back(pool.add(p));

  ByteWriter body;
  pool.write(body);
  body.u16(axml::kResourceMap);
  body.u16(8);
  body.u32(12);
  body.u32(kAndroidNameRes);
  node_header(body, axml::kStartNamespace, 24);
  body.u32(android);
  body.u32(uri);
  start_element(body, kNoString, manifest, {{kNoString, package_attr, pkg}});
  for (auto p : perms) {
    start_element(body, kNoString, uses, {{uri, name, p}});
    end_element(body, kNoString, uses);
  }
  end_element(body, kNoString, manifest);
  node_header(body, axml::kEndNamespace, 24);
  body.u32(android);
  body.u32(uri);

  ByteWriter doc;
  doc.u16(axml::kXmlDocument);
  doc.u16(8);
  doc.u32(static_cast<std::uint32_t>(8 + body.size()));
  doc.bytes(body.buffer());
  return std::move(doc.buffer());
}

Bytes elf_shared_object(const std::vector<ElfSection>& sections) {
  Bytes shstrtab{0};
  std::vector<std::uint32_t> name_off;
  for (const auto& s : sections) {
    name_off.push_back(static_cast<std::uint32_t>(shstrtab.size()));
    shstrtab.insert(shstrtab.end(), s.name.begin(), s.name.end());
    shstrtab.push_back(0);
  }
  const auto shstr_name = static_cast<std::uint32_t>(shstrtab.size());
  const std::string self = ".shstrtab";
  shstrtab.insert(shstrtab.end(), self.begin(), self.end());
  shstrtab.push_back(0);

  ByteWriter w;
  w.buffer().resize(64);
  std::vector<std::uint64_t> offsets;
  for (const auto& s : sections) {
    w.pad_to(16);
    offsets.push_back(w.size());
    w.bytes(s.content);
  }
  const std::uint64_t shstr_off = w.size();
  w.bytes(shstrtab);
  w.pad_to(8);
  const std::uint64_t shoff = w.size();
  const auto shnum = static_cast<std::uint16_t>(sections.size() + 2);

  const auto header = [&](std::uint32_t name, std::uint32_t type, std::uint64_t flags, std::uint64_t off,
                          std::uint64_t size, std::uint64_t align) {
    w.u32(name);
    w.u32(type);
    w.u64(flags);
    w.u64(flags != 0 ? off : 0);  // addr
    w.u64(off);
    w.u64(size);
    w.u32(0);
    w.u32(0);
    w.u64(align);
    w.u64(0);
  };
  header(0, 0, 0, 0, 0, 0);
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const auto& n = sections[i].name;
    const std::uint64_t flags = n == ".text" ? 0x6 : n == ".data" ? 0x3 : 0x2;
    header(name_off[i], 1, flags, offsets[i], sections[i].content.size(), 16);
  }
  header(shstr_name, 3, 0, shstr_off, shstrtab.size(), 1);

  ByteWriter h;
  for (int b : {0x7f, 0x45, 0x4c, 0x46, 2, 1, 1, 0}) h.u8(static_cast<std::uint8_t>(b));
  h.u64(0);
  h.u16(3);     // ET_DYN
  h.u16(0xb7);  // AArch64
  h.u32(1);
  h.u64(0);  // entry
  h.u64(0);  // phoff
  h.u64(shoff);
  h.u32(0);
  h.u16(64);
  h.u16(56);
  h.u16(0);
  h.u16(64);
  h.u16(shnum);
  h.u16(static_cast<std::uint16_t>(shnum - 1));
  Bytes out = std::move(w.buffer());
  std::copy(h.buffer().begin(), h.buffer().end(), out.begin());
  return out;
}

Bytes make_apk(const AppSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::string pkg_path = spec.package;
  for (auto& c : pkg_path)
    if (c == '.') c = '/';

  std::vector<std::string> perms{"android.permission.INTERNET", "android.permission.ACCESS_NETWORK_STATE"};
  for (const char* p : {"android.permission.VIBRATE", "android.permission.WAKE_LOCK", "android.permission.CAMERA",
                        "android.permission.READ_PHONE_STATE"})
    if (rng() % 2) perms.emplace_back(p);

  zip::Writer z;
  z.add("AndroidManifest.xml", axml_manifest(spec.package, perms));
  z.add("classes.dex", make_dex(spec, rng, pkg_path));
  z.add("lib/arm64-v8a/libnative.so", make_native_lib(spec, rng));
  z.add("res/raw/blob.bin", random_bytes(rng, 256, 0, 255), false);
  return z.finish();
}

std::vector<CorpusSample> write_corpus(const std::filesystem::path& dir, const CorpusOptions& options) {
  if (options.years.empty()) throw Error(ErrorCode::BadConfig, "corpus needs at least one year");
  std::filesystem::create_directories(dir / "apk");
  std::vector<CorpusSample> out;
  std::array<std::size_t, 2> seen{0, 0};
  for (std::size_t i = 0; i < 2 * options.per_class; ++i) {
    const int label = static_cast<int>(i % 2);
    CorpusSample s;
    char id[32];
    std::snprintf(id, sizeof id, "s%04zu", i);
    s.entry.sample_id = id;
    s.entry.apk_path = dir / "apk" / (s.entry.sample_id + ".apk");
    s.entry.label = label == 1 ? Label::Malicious : Label::Benign;
    s.entry.timestamp_year = options.years[(i / 2) % options.years.size()];
    if (options.layout == SignalLayout::AllViews) {
      s.signal = {true, true, true};
    } else {
      s.signal = {false, false, false};
      s.signal[seen[static_cast<std::size_t>(label)] % kViewCount] = true;
    }
    ++seen[static_cast<std::size_t>(label)];
    AppSpec spec{label, s.signal, options.seed * 1000003u + i, "com.synth.app" + std::to_string(i)};
    write_file(s.entry.apk_path, make_apk(spec));
    out.push_back(std::move(s));
  }
  std::vector<SampleManifestEntry> entries;
  for (const auto& s : out) entries.push_back(s.entry);
  write_manifest(dir / "manifest.csv", entries);
  return out;
}

}  // namespace mvd::synth

#pragma once

// Random fixtures shared by the unit tests and the acceptance binary.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "mvdroid/callgraph.hpp"
#include "mvdroid/dex.hpp"
#include "oracles.hpp"

namespace gen {

inline const std::vector<std::string>& level_vocab() {
  static const std::vector<std::string> v{"normal",   "dangerous", "signature", "signatureOrSystem", "privileged",
                                          "system",   "development", "appop",   "pre23",             "installer",
                                          "verifier", "preinstalled", "setup",  "instant",           "runtime"};
  return v;
}

/// An API universe with deliberate subsignature collisions: class names are
/// drawn from a few two-field prefixes and method names from a short list.
struct ApiUniverse {
  std::vector<std::string> classes;  // dotted
  std::vector<std::string> method_names;
  std::vector<std::pair<std::string, std::string>> apis;  // (class, method)
  mvd::PermissionMap map;
  oracle::SensitivityOracle oracle;
};

inline std::string soot_signature(const std::string& cls, const std::string& method) {
  return "<" + cls + ": void " + method + "(int)>";
}

inline ApiUniverse random_universe(std::mt19937_64& rng, std::size_t api_count) {
  ApiUniverse u;
  const std::vector<std::string> prefixes{"android.telephony", "android.location", "com.android", "android.net",
                                          "java.io", "Solo"};
  const std::vector<std::string> tails{"", ".Alpha", ".Beta", ".sub.Gamma", ".Delta"};
  for (const auto& p : prefixes)
    for (const auto& t : tails) u.classes.push_back(p == "Solo" ? p : p + t);
  u.method_names = {"query", "insert", "send", "open", "applyBatch", "listen", "read", "write", "connect", "getId"};

  std::uniform_int_distribution<std::size_t> pick_class(0, u.classes.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_method(0, u.method_names.size() - 1);
  std::set<std::pair<std::string, std::string>> seen;
  while (u.apis.size() < api_count) {
    std::pair<std::string, std::string> api{u.classes[pick_class(rng)], u.method_names[pick_method(rng)]};
    if (seen.insert(api).second) u.apis.push_back(api);
  }

  const auto& vocab = level_vocab();
  u.map.level_vocabulary = vocab;
  std::uniform_int_distribution<std::size_t> pick_level(0, vocab.size() - 1);
  std::uniform_int_distribution<int> level_count(1, 3), perm_count(1, 2);
  std::vector<std::string> perms;
  for (int i = 0; i < 20; ++i) {
    const std::string perm = "perm.P" + std::to_string(i);
    perms.push_back(perm);
    auto& levels = u.map.permission_to_levels[perm];
    for (int k = level_count(rng); k > 0; --k) levels.insert(vocab[pick_level(rng)]);
  }
  std::uniform_int_distribution<std::size_t> pick_perm(0, perms.size() - 1);
  for (const auto& [cls, m] : u.apis) {
    const std::string sig = soot_signature(cls, m);
    for (int k = perm_count(rng); k > 0; --k) u.map.api_to_permissions[sig].insert(perms[pick_perm(rng)]);
  }

  u.oracle.api_perms = u.map.api_to_permissions;
  u.oracle.perm_levels = u.map.permission_to_levels;
  u.oracle.vocab = vocab;
  return u;
}

inline std::string descriptor_of(const std::string& dotted) {
  std::string d = "L" + dotted + ";";
  for (auto& c : d)
    if (c == '.') c = '/';
  return d;
}

/// Random call edges between local app methods and APIs of the universe.
/// About a quarter of the callees are methods absent from the map.
inline std::vector<mvd::dex::CallEdge> random_edges(std::mt19937_64& rng, const ApiUniverse& u, std::size_t count) {
  std::vector<mvd::dex::MethodRef> locals;
  for (int i = 0; i < 6; ++i) locals.push_back({"Lorg/app/C" + std::to_string(i) + ";", "m" + std::to_string(i), "()V", true});
  std::uniform_int_distribution<std::size_t> pick_local(0, locals.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_class(0, u.classes.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_method(0, u.method_names.size() - 1);
  std::uniform_int_distribution<int> kind(0, 3);
  std::vector<mvd::dex::CallEdge> edges;
  for (std::size_t i = 0; i < count; ++i) {
    mvd::dex::CallEdge e;
    e.caller = locals[pick_local(rng)];
    const int k = kind(rng);
    if (k == 0) {
      e.callee = locals[pick_local(rng)];
    } else {
      e.callee = {descriptor_of(u.classes[pick_class(rng)]), k == 1 ? "unmapped" : u.method_names[pick_method(rng)],
                  "(I)V", false};
    }
    edges.push_back(e);
  }
  return edges;
}

}  // namespace gen

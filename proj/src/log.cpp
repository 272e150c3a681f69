#include "mvdroid/log.hpp"

#include <iostream>
#include <mutex>

namespace mvd::log {
namespace {

bool g_verbose = false;

void default_sink(Level level, const std::string& message) {
  if (level == Level::Warn) {
    std::cerr << "warning: " << message << '\n';
  } else if (g_verbose) {
    std::cerr << message << '\n';
  }
}

std::mutex g_mutex;
Sink g_sink = default_sink;

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  Sink old = std::move(g_sink);
  g_sink = sink ? std::move(sink) : Sink(default_sink);
  return old;
}

void set_verbose(bool verbose) { g_verbose = verbose; }

void write(Level level, const std::string& message) {
  std::lock_guard lock(g_mutex);
  g_sink(level, message);
}

}  // namespace mvd::log

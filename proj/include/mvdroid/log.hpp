#pragma once

#include <functional>
#include <string>

namespace mvd::log {

enum class Level { Debug, Info, Warn };

using Sink = std::function<void(Level, const std::string&)>;

/// Replaces the process-wide sink; returns the previous one. The default
/// sink writes warnings to stderr and drops everything else.
Sink set_sink(Sink sink);
void set_verbose(bool verbose);

void write(Level level, const std::string& message);
inline void debug(const std::string& m) { write(Level::Debug, m); }
inline void info(const std::string& m) { write(Level::Info, m); }
inline void warn(const std::string& m) { write(Level::Warn, m); }

}  // namespace mvd::log

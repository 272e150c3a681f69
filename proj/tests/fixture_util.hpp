#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include <json.hpp>

#include "mvdroid/bytes.hpp"

namespace fixture {

inline std::filesystem::path path(const std::string& name) { return std::filesystem::path(MVDROID_FIXTURE_DIR) / name; }

inline mvd::Bytes bytes(const std::string& name) { return mvd::read_file(path(name)); }

inline const nlohmann::json& expected() {
  static const nlohmann::json j = [] {
    const auto b = bytes("golden.expected.json");
    return nlohmann::json::parse(b.begin(), b.end());
  }();
  return j;
}

/// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mvdroid-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture

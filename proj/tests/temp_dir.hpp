#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include "eacorr/random.hpp"

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto stamp = eacorr::mix64(reinterpret_cast<std::uintptr_t>(this) ^ ++counter ^
                                     static_cast<std::uint64_t>(::getpid()));
    path_ = std::filesystem::temp_directory_path() / ("eacorr_" + tag + "_" + std::to_string(stamp));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

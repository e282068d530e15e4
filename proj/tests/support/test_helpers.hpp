#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "logitdiff/core/error.hpp"

namespace logitdiff::testing {

inline void expect_code(const std::function<void()>& fn, ErrorCode expected) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(expected) << ", nothing thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), expected) << e.what();
  }
}

// Fresh directory under the build tree, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("logitdiff-" + tag + "-" + std::to_string(rd()));
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

}  // namespace logitdiff::testing

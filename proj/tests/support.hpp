#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#include "ivise/common.hpp"
#include "ivise/error.hpp"

// Asserts that `stmt` throws ivise::Error of the given kind.
#define EXPECT_IVISE_ERROR(stmt, expected_kind)                                   \
  do {                                                                            \
    try {                                                                         \
      stmt;                                                                       \
      ADD_FAILURE() << "expected " << ::ivise::to_string(expected_kind);          \
    } catch (const ::ivise::Error& e_) {                                          \
      EXPECT_EQ(e_.kind(), expected_kind) << e_.what();                           \
    }                                                                             \
  } while (0)

namespace ivise::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("ivise-test-" + std::to_string(rng()));
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

inline FrameRef solid_frame(int w, int h, Rgb c, std::string camera = "cam1", std::uint64_t seq = 0) {
  FrameRef f;
  f.camera_id = std::move(camera);
  f.sequence = seq;
  f.width = w;
  f.height = h;
  f.pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < f.pixels.size(); i += 3) {
    f.pixels[i] = c.r;
    f.pixels[i + 1] = c.g;
    f.pixels[i + 2] = c.b;
  }
  return f;
}

}  // namespace ivise::testing

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ivise/common.hpp"

namespace ivise {

// Binary PPM (P6, maxval 255) codec. This is the frame-directory input format
// and the image body posted to a remote pose endpoint.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

RgbImage decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(int width, int height, std::span<const std::uint8_t> pixels);

RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const FrameRef& frame);

// Files in `dir` whose stem is an integer, ordered numerically by that integer
// (so 2.ppm precedes 10.ppm). Other files are ignored.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

}  // namespace ivise

#include "ivise/image.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>

#include "ivise/error.hpp"

namespace ivise {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) throw Error(ErrorKind::ParseError, "truncated PPM header");
    return out;
  }

  int integer() {
    auto t = token();
    int v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || v <= 0) {
      throw Error(ErrorKind::ParseError, "bad PPM header value", t);
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorKind::ParseError, "missing PPM raster separator");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  HeaderReader reader(bytes);
  if (reader.token() != "P6") throw Error(ErrorKind::ParseError, "not a binary PPM (P6)");
  RgbImage img;
  img.width = reader.integer();
  img.height = reader.integer();
  if (reader.integer() != 255) throw Error(ErrorKind::ParseError, "PPM maxval must be 255");
  const auto offset = reader.raster_offset();
  const auto need = static_cast<std::size_t>(img.width) * img.height * 3;
  if (bytes.size() - offset < need) throw Error(ErrorKind::ParseError, "truncated PPM raster");
  img.pixels.assign(bytes.begin() + offset, bytes.begin() + offset + need);
  return img;
}

std::vector<std::uint8_t> encode_ppm(int width, int height, std::span<const std::uint8_t> pixels) {
  const std::string header =
      "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

void write_ppm(const std::filesystem::path& path, const FrameRef& frame) {
  auto bytes = encode_ppm(frame.width, frame.height, frame.pixels);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir) {
  std::vector<std::pair<long long, std::filesystem::path>> numbered;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto stem = entry.path().stem().string();
    long long n = 0;
    auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), n);
    if (ec != std::errc() || ptr != stem.data() + stem.size()) continue;
    numbered.emplace_back(n, entry.path());
  }
  std::sort(numbered.begin(), numbered.end());
  std::vector<std::filesystem::path> out;
  out.reserve(numbered.size());
  for (auto& [n, p] : numbered) out.push_back(std::move(p));
  return out;
}

}  // namespace ivise

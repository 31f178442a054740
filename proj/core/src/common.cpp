#include "ivise/common.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cctype>
#include <cmath>

namespace ivise {

TimestampMs wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

void BoundingBox::extend(PixelCoord p) {
  if (empty()) {
    min_x = max_x = p.x;
    min_y = max_y = p.y;
    return;
  }
  min_x = std::min(min_x, p.x);
  min_y = std::min(min_y, p.y);
  max_x = std::max(max_x, p.x);
  max_y = std::max(max_y, p.y);
}

namespace {

constexpr std::array<std::string_view, kPartCount> kPartNames = {
    "nose",       "neck",        "right_shoulder", "right_elbow", "right_wrist",
    "left_shoulder", "left_elbow", "left_wrist",   "right_hip",   "right_knee",
    "right_ankle", "left_hip",   "left_knee",      "left_ankle",  "right_eye",
    "left_eye",   "right_ear",   "left_ear",
};

constexpr std::array<std::string_view, kSectionCount> kSectionNames = {
    "torso", "left_leg", "right_leg", "face", "hair"};

}  // namespace

std::string_view to_string(PartKind part) {
  return kPartNames[static_cast<std::size_t>(part)];
}

std::optional<PartKind> parse_part(std::string_view name) {
  for (std::size_t i = 0; i < kPartNames.size(); ++i) {
    if (kPartNames[i] == name) return static_cast<PartKind>(i);
  }
  return std::nullopt;
}

const std::array<PartKind, kPartCount>& all_parts() {
  static const auto parts = [] {
    std::array<PartKind, kPartCount> out{};
    for (std::size_t i = 0; i < kPartCount; ++i) out[i] = static_cast<PartKind>(i);
    return out;
  }();
  return parts;
}

std::string_view to_string(Section section) {
  return kSectionNames[static_cast<std::size_t>(section)];
}

std::optional<Section> parse_section(std::string_view name) {
  for (std::size_t i = 0; i < kSectionNames.size(); ++i) {
    if (kSectionNames[i] == name) return static_cast<Section>(i);
  }
  return std::nullopt;
}

const std::array<Section, kSectionCount>& all_sections() {
  static constexpr std::array<Section, kSectionCount> sections = {
      Section::Torso, Section::LeftLeg, Section::RightLeg, Section::Face, Section::Hair};
  return sections;
}

const CandidateKeypoint* Skeleton::find(PartKind part) const {
  auto it = keypoints.find(part);
  return it == keypoints.end() ? nullptr : &it->second;
}

void Skeleton::set(PartKind part, Point2D position, double confidence) {
  keypoints[part] = CandidateKeypoint{part, position, confidence};
}

std::string format_decimal(double value) {
  // Shortest round-trip form, but never exponent notation for moderate
  // magnitudes so CSV and text files stay readable.
  char buf[512];
  const bool moderate = std::abs(value) < 1e15 && (value == 0.0 || std::abs(value) >= 1e-6);
  auto [end, ec] = moderate ? std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed)
                            : std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, end);
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.remove_suffix(1);
  }
  return text;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace ivise

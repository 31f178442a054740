#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ivise {

using TimestampMs = std::int64_t;

TimestampMs wall_clock_ms();

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend Point2D operator+(Point2D a, Point2D b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2D operator-(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2D operator*(Point2D a, double s) { return {a.x * s, a.y * s}; }
  friend Point2D operator*(double s, Point2D a) { return {a.x * s, a.y * s}; }
  friend bool operator==(const Point2D&, const Point2D&) = default;
};

// Field vectors share the representation of points.
using Vec2 = Point2D;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 v);

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend auto operator<=>(const Rgb&, const Rgb&) = default;
};

// Inclusive pixel bounds.
struct BoundingBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = -1;
  int max_y = -1;

  bool empty() const { return max_x < min_x || max_y < min_y; }
  void extend(PixelCoord p);
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// COCO-18 keypoint catalog, in the order the pose model emits parts.
enum class PartKind : std::uint8_t {
  Nose,
  Neck,
  RightShoulder,
  RightElbow,
  RightWrist,
  LeftShoulder,
  LeftElbow,
  LeftWrist,
  RightHip,
  RightKnee,
  RightAnkle,
  LeftHip,
  LeftKnee,
  LeftAnkle,
  RightEye,
  LeftEye,
  RightEar,
  LeftEar,
};

inline constexpr std::size_t kPartCount = 18;

std::string_view to_string(PartKind part);
std::optional<PartKind> parse_part(std::string_view name);
const std::array<PartKind, kPartCount>& all_parts();

enum class Section : std::uint8_t { Torso, LeftLeg, RightLeg, Face, Hair };

inline constexpr std::size_t kSectionCount = 5;

std::string_view to_string(Section section);
std::optional<Section> parse_section(std::string_view name);
const std::array<Section, kSectionCount>& all_sections();

struct FrameRef {
  std::string camera_id;
  std::uint64_t sequence = 0;
  TimestampMs timestamp = 0;
  int width = 0;
  int height = 0;
  // Row-major RGB; empty when the frame carries no image (fixture-only runs).
  std::vector<std::uint8_t> pixels;

  bool has_pixels() const { return !pixels.empty(); }
  bool contains(Point2D p) const {
    return p.x >= 0.0 && p.y >= 0.0 && p.x < width && p.y < height;
  }
  bool contains(PixelCoord p) const {
    return p.x >= 0 && p.y >= 0 && p.x < width && p.y < height;
  }
  Rgb at(PixelCoord p) const {
    const auto i = (static_cast<std::size_t>(p.y) * width + p.x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(PixelCoord p, Rgb c) {
    const auto i = (static_cast<std::size_t>(p.y) * width + p.x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }
};

struct CandidateKeypoint {
  PartKind kind = PartKind::Nose;
  Point2D position;
  double confidence = 0.0;
  friend bool operator==(const CandidateKeypoint&, const CandidateKeypoint&) = default;
};

struct Skeleton {
  int person_index = 0;
  std::map<PartKind, CandidateKeypoint> keypoints;

  const CandidateKeypoint* find(PartKind part) const;
  bool has(PartKind part) const { return keypoints.contains(part); }
  void set(PartKind part, Point2D position, double confidence = 1.0);
  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

struct PoseResult {
  std::string camera_id;
  std::uint64_t sequence = 0;
  std::vector<Skeleton> skeletons;
  double inference_millis = 0.0;
};

// Identifies one detected person in one frame of one camera.
struct PersonRef {
  std::string camera_id;
  std::uint64_t sequence = 0;
  int person_index = 0;
  friend auto operator<=>(const PersonRef&, const PersonRef&) = default;
};

// Shortest decimal text for a double that parses back to the same value.
std::string format_decimal(double value);

std::vector<std::string_view> split_whitespace(std::string_view text);
std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);

}  // namespace ivise

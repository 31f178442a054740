#include "ivise/regions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "ivise/error.hpp"

namespace ivise::regions {

namespace {

constexpr double kAreaTolerance = 1e-9;

double orient(Point2D a, Point2D b, Point2D p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

const CandidateKeypoint& require(const Skeleton& skeleton, Section section,
                                 std::initializer_list<PartKind> parts) {
  std::string absent;
  for (auto part : parts) {
    if (!skeleton.has(part)) {
      if (!absent.empty()) absent += ",";
      absent += to_string(part);
    }
  }
  if (!absent.empty()) {
    throw Error(ErrorKind::MissingKeypoint,
                "section " + std::string(to_string(section)) + " needs " + absent,
                std::string(to_string(section)));
  }
  return *skeleton.find(*parts.begin());
}

Point2D at(const Skeleton& skeleton, PartKind part) { return skeleton.find(part)->position; }

PixelRegion make_region(Section section, const Skeleton& skeleton, const FrameRef& frame,
                        std::vector<PixelCoord> coords) {
  if (coords.empty()) {
    throw Error(ErrorKind::DegenerateRegion,
                "section " + std::string(to_string(section)) + " covers no pixels",
                std::string(to_string(section)));
  }
  if (!frame.has_pixels()) throw Error(ErrorKind::EmptyFrame, "region crop needs pixels");
  PixelRegion region;
  region.section = section;
  region.source = {frame.camera_id, frame.sequence, skeleton.person_index};
  region.pixels.reserve(coords.size());
  for (auto c : coords) {
    region.pixels.push_back(frame.at(c));
    region.bounding_box.extend(c);
  }
  region.coords = std::move(coords);
  return region;
}

// Edge-clamped 3x3 box mean of one channel.
double blurred(const FrameRef& f, int x, int y, int ch) {
  int sum = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    const int yy = std::clamp(y + dy, 0, f.height - 1);
    const auto row = static_cast<std::size_t>(yy) * f.width;
    for (int dx = -1; dx <= 1; ++dx) {
      const int xx = std::clamp(x + dx, 0, f.width - 1);
      sum += f.pixels[(row + xx) * 3 + ch];
    }
  }
  return sum / 9.0;
}

}  // namespace

Preprocessed preprocess(const FrameRef& frame, int target) {
  if (!frame.has_pixels() || frame.width <= 0 || frame.height <= 0) {
    throw Error(ErrorKind::EmptyFrame, "frame has no pixel buffer");
  }
  if (frame.pixels.size() != static_cast<std::size_t>(frame.width) * frame.height * 3) {
    throw Error(ErrorKind::InvalidArgument, "pixel buffer size does not match frame dimensions");
  }
  Preprocessed out;
  out.scale_x = static_cast<double>(frame.width) / target;
  out.scale_y = static_cast<double>(frame.height) / target;
  out.frame.camera_id = frame.camera_id;
  out.frame.sequence = frame.sequence;
  out.frame.timestamp = frame.timestamp;
  out.frame.width = target;
  out.frame.height = target;
  out.frame.pixels.resize(static_cast<std::size_t>(target) * target * 3);

  // Blur is evaluated lazily at the four source taps of each output pixel;
  // identical to blurring the whole frame first.
  for (int oy = 0; oy < target; ++oy) {
    const double sy = std::clamp((oy + 0.5) * out.scale_y - 0.5, 0.0, double(frame.height - 1));
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, frame.height - 1);
    const double fy = sy - y0;
    for (int ox = 0; ox < target; ++ox) {
      const double sx = std::clamp((ox + 0.5) * out.scale_x - 0.5, 0.0, double(frame.width - 1));
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, frame.width - 1);
      const double fx = sx - x0;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = blurred(frame, x0, y0, ch) * (1 - fx) +
                           (fx > 0 ? blurred(frame, x1, y0, ch) * fx : 0.0);
        const double bottom =
            fy > 0 ? blurred(frame, x0, y1, ch) * (1 - fx) +
                         (fx > 0 ? blurred(frame, x1, y1, ch) * fx : 0.0)
                   : 0.0;
        const double v = top * (1 - fy) + bottom * fy;
        out.frame.pixels[(static_cast<std::size_t>(oy) * target + ox) * 3 + ch] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

PoseResult scale_pose(PoseResult pose, double scale_x, double scale_y, int native_width,
                      int native_height) {
  const double max_x = std::nextafter(double(native_width), 0.0);
  const double max_y = std::nextafter(double(native_height), 0.0);
  for (auto& skeleton : pose.skeletons) {
    for (auto& [part, kp] : skeleton.keypoints) {
      kp.position = {std::clamp(kp.position.x * scale_x, 0.0, max_x),
                     std::clamp(kp.position.y * scale_y, 0.0, max_y)};
    }
  }
  return pose;
}

bool inside_triangle(Point2D p, Point2D a, Point2D b, Point2D c) {
  const double e0 = orient(a, b, p);
  const double e1 = orient(b, c, p);
  const double e2 = orient(c, a, p);
  return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
}

std::vector<PixelCoord> rasterize_triangle(Point2D a, Point2D b, Point2D c, int width,
                                           int height) {
  if (std::abs(orient(a, b, c)) <= kAreaTolerance) {
    throw Error(ErrorKind::DegenerateRegion, "triangle has zero area");
  }
  std::vector<PixelCoord> out;
  const int y_lo = std::max(0, static_cast<int>(std::ceil(std::min({a.y, b.y, c.y}))));
  const int y_hi = std::min(height - 1, static_cast<int>(std::floor(std::max({a.y, b.y, c.y}))));
  const std::array<std::pair<Point2D, Point2D>, 3> edges = {{{a, b}, {b, c}, {c, a}}};

  for (int y = y_lo; y <= y_hi; ++y) {
    // Span from edge crossings, widened by one pixel; the half-plane
    // predicate decides every candidate.
    double span_lo = std::numeric_limits<double>::infinity();
    double span_hi = -span_lo;
    for (const auto& [p, q] : edges) {
      const double lo = std::min(p.y, q.y);
      const double hi = std::max(p.y, q.y);
      if (y < lo || y > hi) continue;
      if (p.y == q.y) {
        span_lo = std::min({span_lo, p.x, q.x});
        span_hi = std::max({span_hi, p.x, q.x});
      } else {
        const double x = p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y);
        span_lo = std::min(span_lo, x);
        span_hi = std::max(span_hi, x);
      }
    }
    if (span_lo > span_hi) continue;
    const int x_lo = std::max(0, static_cast<int>(std::ceil(span_lo)) - 1);
    const int x_hi = std::min(width - 1, static_cast<int>(std::floor(span_hi)) + 1);
    for (int x = x_lo; x <= x_hi; ++x) {
      if (inside_triangle({double(x), double(y)}, a, b, c)) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<PixelCoord> bresenham_line(PixelCoord a, PixelCoord b) {
  std::vector<PixelCoord> out;
  const int dx = std::abs(b.x - a.x);
  const int dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1;
  const int sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  int x = a.x;
  int y = a.y;
  out.reserve(static_cast<std::size_t>(std::max(dx, -dy)) + 1);
  for (;;) {
    out.push_back({x, y});
    if (x == b.x && y == b.y) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
  return out;
}

std::vector<PixelCoord> leg_pixels(Point2D hip, Point2D knee, int width, int height) {
  const PixelCoord a{static_cast<int>(std::lround(hip.x)), static_cast<int>(std::lround(hip.y))};
  const PixelCoord b{static_cast<int>(std::lround(knee.x)), static_cast<int>(std::lround(knee.y))};
  if (a == b) throw Error(ErrorKind::DegenerateRegion, "hip and knee coincide");
  // Perpendicular neighbours follow the line's minor axis.
  const bool x_major = std::abs(b.x - a.x) > std::abs(b.y - a.y);
  const PixelCoord step = x_major ? PixelCoord{0, 1} : PixelCoord{1, 0};
  std::vector<PixelCoord> out;
  for (auto p : bresenham_line(a, b)) {
    for (int k = -(kLegLineWidth / 2); k <= kLegLineWidth / 2; ++k) {
      const PixelCoord q{p.x + k * step.x, p.y + k * step.y};
      if (q.x >= 0 && q.y >= 0 && q.x < width && q.y < height) out.push_back(q);
    }
  }
  return out;
}

std::vector<PixelCoord> head_square(Point2D left_ear, Point2D right_ear,
                                    std::optional<Point2D> neck, int width, int height) {
  const double side = norm(left_ear - right_ear);
  if (!(side > kAreaTolerance)) throw Error(ErrorKind::DegenerateRegion, "ears coincide");
  const Point2D mid = (left_ear + right_ear) * 0.5;
  const double x0 = mid.x - side / 2;
  const bool downward = neck && neck->y < mid.y;
  std::vector<PixelCoord> out;
  const int xs = std::max(0, static_cast<int>(std::ceil(x0)));
  const int xe = std::min(width - 1, static_cast<int>(std::ceil(x0 + side)) - 1);
  int ys = 0;
  int ye = 0;
  if (downward) {  // (mid.y, mid.y + side]
    ys = static_cast<int>(std::floor(mid.y)) + 1;
    ye = static_cast<int>(std::floor(mid.y + side));
  } else {  // [mid.y - side, mid.y)
    ys = static_cast<int>(std::ceil(mid.y - side));
    ye = static_cast<int>(std::ceil(mid.y)) - 1;
  }
  ys = std::max(ys, 0);
  ye = std::min(ye, height - 1);
  for (int y = ys; y <= ye; ++y) {
    for (int x = xs; x <= xe; ++x) out.push_back({x, y});
  }
  return out;
}

PixelRegion torso_region(const Skeleton& skeleton, const FrameRef& frame) {
  require(skeleton, Section::Torso, {PartKind::LeftHip, PartKind::RightHip, PartKind::Neck});
  auto coords = rasterize_triangle(at(skeleton, PartKind::LeftHip),
                                   at(skeleton, PartKind::RightHip), at(skeleton, PartKind::Neck),
                                   frame.width, frame.height);
  return make_region(Section::Torso, skeleton, frame, std::move(coords));
}

PixelRegion leg_region(const Skeleton& skeleton, const FrameRef& frame, Section side) {
  if (side != Section::LeftLeg && side != Section::RightLeg) {
    throw Error(ErrorKind::InvalidArgument, "leg_region needs a leg section");
  }
  const auto hip = side == Section::LeftLeg ? PartKind::LeftHip : PartKind::RightHip;
  const auto knee = side == Section::LeftLeg ? PartKind::LeftKnee : PartKind::RightKnee;
  require(skeleton, side, {hip, knee});
  auto coords = leg_pixels(at(skeleton, hip), at(skeleton, knee), frame.width, frame.height);
  return make_region(side, skeleton, frame, std::move(coords));
}

LegRegions leg_regions(const Skeleton& skeleton, const FrameRef& frame) {
  const bool has_left = skeleton.has(PartKind::LeftHip) && skeleton.has(PartKind::LeftKnee);
  const bool has_right = skeleton.has(PartKind::RightHip) && skeleton.has(PartKind::RightKnee);
  if (!has_left && !has_right) {
    throw Error(ErrorKind::MissingKeypoint, "no hip-knee pair present", "legs");
  }
  LegRegions out;
  std::optional<Error> failure;
  auto one = [&](Section side, bool present, std::optional<PixelRegion>& slot) {
    if (!present) {
      out.missing.push_back(side);
      return;
    }
    try {
      slot = leg_region(skeleton, frame, side);
    } catch (const Error& e) {
      failure = e;
      out.missing.push_back(side);
    }
  };
  one(Section::LeftLeg, has_left, out.left);
  one(Section::RightLeg, has_right, out.right);
  if (!out.left && !out.right && failure) throw *failure;
  return out;
}

PixelRegion face_region(const Skeleton& skeleton, const FrameRef& frame) {
  require(skeleton, Section::Face, {PartKind::LeftEar, PartKind::RightEar, PartKind::Neck});
  auto coords = rasterize_triangle(at(skeleton, PartKind::LeftEar),
                                   at(skeleton, PartKind::RightEar), at(skeleton, PartKind::Neck),
                                   frame.width, frame.height);
  return make_region(Section::Face, skeleton, frame, std::move(coords));
}

PixelRegion hair_region(const Skeleton& skeleton, const FrameRef& frame) {
  require(skeleton, Section::Hair, {PartKind::LeftEar, PartKind::RightEar});
  const auto left = at(skeleton, PartKind::LeftEar);
  const auto right = at(skeleton, PartKind::RightEar);
  std::optional<Point2D> neck;
  if (skeleton.has(PartKind::Neck)) neck = at(skeleton, PartKind::Neck);
  auto square = head_square(left, right, neck, frame.width, frame.height);
  if (neck && std::abs(orient(left, right, *neck)) > kAreaTolerance) {
    std::erase_if(square, [&](PixelCoord p) {
      return inside_triangle({double(p.x), double(p.y)}, left, right, *neck);
    });
  }
  return make_region(Section::Hair, skeleton, frame, std::move(square));
}

std::vector<RegionSet> extract_all(const PoseResult& pose, const FrameRef& frame) {
  std::vector<RegionSet> out;
  out.reserve(pose.skeletons.size());
  for (const auto& skeleton : pose.skeletons) {
    RegionSet set;
    set.person = {frame.camera_id, frame.sequence, skeleton.person_index};
    auto attempt = [&](Section section, auto&& fn) {
      try {
        set.regions.emplace(section, fn());
      } catch (const Error&) {
        set.missing.push_back(section);
      }
    };
    attempt(Section::Torso, [&] { return torso_region(skeleton, frame); });
    try {
      auto legs = leg_regions(skeleton, frame);
      if (legs.left) set.regions.emplace(Section::LeftLeg, std::move(*legs.left));
      if (legs.right) set.regions.emplace(Section::RightLeg, std::move(*legs.right));
      set.missing.insert(set.missing.end(), legs.missing.begin(), legs.missing.end());
    } catch (const Error&) {
      set.missing.push_back(Section::LeftLeg);
      set.missing.push_back(Section::RightLeg);
    }
    attempt(Section::Face, [&] { return face_region(skeleton, frame); });
    attempt(Section::Hair, [&] { return hair_region(skeleton, frame); });
    out.push_back(std::move(set));
  }
  return out;
}

}  // namespace ivise::regions

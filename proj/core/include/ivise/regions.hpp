#pragma once

#include <map>
#include <optional>
#include <vector>

#include "ivise/common.hpp"

// Frame preprocessing and cropping of the body sections used for color
// description: torso triangle, hip-to-knee leg lines, face triangle and the
// head square above the ears (hair).
namespace ivise::regions {

inline constexpr int kInferenceSize = 160;
inline constexpr int kLegLineWidth = 3;

struct PixelRegion {
  Section section = Section::Torso;
  std::vector<Rgb> pixels;
  // Frame coordinates of `pixels`, index-aligned. Present on the edge; a
  // region rebuilt from the wire carries only pixels and the bounding box.
  std::vector<PixelCoord> coords;
  PersonRef source;
  BoundingBox bounding_box;
};

struct RegionSet {
  PersonRef person;
  std::map<Section, PixelRegion> regions;
  std::vector<Section> missing;
};

struct Preprocessed {
  FrameRef frame;
  // native = inference * scale
  double scale_x = 1.0;
  double scale_y = 1.0;
};

// 3x3 box blur (edge-clamped) followed by bilinear resampling to
// target x target. Throws EmptyFrame when the frame has no pixels.
Preprocessed preprocess(const FrameRef& frame, int target = kInferenceSize);

// Maps keypoints from inference space back to native resolution, clamped
// inside the native frame.
PoseResult scale_pose(PoseResult pose, double scale_x, double scale_y, int native_width,
                      int native_height);

// Integer pixel centers inside or on triangle (a, b, c), clipped to
// [0,width) x [0,height), row-major. Throws DegenerateRegion for zero area.
std::vector<PixelCoord> rasterize_triangle(Point2D a, Point2D b, Point2D c, int width, int height);

bool inside_triangle(Point2D p, Point2D a, Point2D b, Point2D c);

// Bresenham line from a to b inclusive.
std::vector<PixelCoord> bresenham_line(PixelCoord a, PixelCoord b);

// Bresenham hip->knee line with each pixel's two perpendicular neighbours,
// clipped to the frame. Throws DegenerateRegion when the endpoints round to
// the same pixel.
std::vector<PixelCoord> leg_pixels(Point2D hip, Point2D knee, int width, int height);

// Axis-aligned square of side |E_l - E_r| centred on the ear midpoint,
// extending away from the neck (upward when no neck is known).
std::vector<PixelCoord> head_square(Point2D left_ear, Point2D right_ear,
                                    std::optional<Point2D> neck, int width, int height);

PixelRegion torso_region(const Skeleton& skeleton, const FrameRef& frame);
PixelRegion leg_region(const Skeleton& skeleton, const FrameRef& frame, Section side);

struct LegRegions {
  std::optional<PixelRegion> left;
  std::optional<PixelRegion> right;
  std::vector<Section> missing;
};

// Throws MissingKeypoint when neither hip-knee pair is present; a
// degenerate single present leg rethrows DegenerateRegion.
LegRegions leg_regions(const Skeleton& skeleton, const FrameRef& frame);

PixelRegion face_region(const Skeleton& skeleton, const FrameRef& frame);
PixelRegion hair_region(const Skeleton& skeleton, const FrameRef& frame);

// One RegionSet per skeleton; failed sections are listed as missing.
std::vector<RegionSet> extract_all(const PoseResult& pose, const FrameRef& frame);

}  // namespace ivise::regions

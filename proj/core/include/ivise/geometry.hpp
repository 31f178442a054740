#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ivise/common.hpp"

// Part-affinity geometry and bottom-up grouping of candidate keypoints into
// per-person skeletons.
namespace ivise::geometry {

// Limb lookups use this distance below which two points coincide.
inline constexpr double kDegenerateTolerance = 1e-9;

struct LimbSpec {
  PartKind part_a = PartKind::Neck;
  PartKind part_b = PartKind::Nose;
  double width = 4.0;  // transverse half-band, pixels
  friend bool operator==(const LimbSpec&, const LimbSpec&) = default;
};

double limb_length(Point2D a, Point2D b);

// COCO-18 body tree (17 limbs); every part reachable from the neck.
const std::vector<LimbSpec>& default_limb_catalog();

// Throws InvalidArgument unless the catalog is a connected tree over the parts
// it mentions, with positive widths and distinct endpoints.
void validate_limb_catalog(std::span<const LimbSpec> catalog);

// (b - a) / |b - a|. Throws DegenerateLimb when a and b coincide.
Vec2 limb_unit_vector(Point2D a, Point2D b);

// 0 <= v.(p-a) <= |b-a| and |v_perp.(p-a)| <= width.
bool point_on_limb(Point2D p, Point2D a, Point2D b, double width);

// The unit limb vector on the limb band, zero elsewhere.
Vec2 field_value(Point2D p, Point2D a, Point2D b, double width);

// Dense affinity field for one limb type, sampled on the integer pixel grid
// [origin_x, origin_x + cols) x [origin_y, origin_y + rows).
class AffinityField {
 public:
  AffinityField() = default;
  AffinityField(PartKind part_a, PartKind part_b, int origin_x, int origin_y, int cols, int rows);

  PartKind part_a() const { return part_a_; }
  PartKind part_b() const { return part_b_; }
  int origin_x() const { return origin_x_; }
  int origin_y() const { return origin_y_; }
  int cols() const { return cols_; }
  int rows() const { return rows_; }
  bool empty() const { return samples_.empty(); }

  Vec2 at(int x, int y) const;
  void set(int x, int y, Vec2 v);

  // Value of the nearest stored sample (round half away from zero, then
  // clamp to the grid). Throws EmptyField.
  Vec2 lookup(Point2D p) const;

  std::span<const Vec2> samples() const { return samples_; }

 private:
  PartKind part_a_ = PartKind::Neck;
  PartKind part_b_ = PartKind::Nose;
  int origin_x_ = 0;
  int origin_y_ = 0;
  int cols_ = 0;
  int rows_ = 0;
  std::vector<Vec2> samples_;
};

// Ground-truth field for one limb type over a cols x rows grid at the origin.
// Where several persons' bands overlap, the unit vectors are averaged.
AffinityField synthesize_field(const LimbSpec& limb,
                               std::span<const std::pair<Point2D, Point2D>> segments, int cols,
                               int rows);

// One field per catalog limb, from every skeleton that holds both endpoints.
std::vector<AffinityField> synthesize_fields(std::span<const Skeleton> persons,
                                             std::span<const LimbSpec> catalog, int cols,
                                             int rows);

// Mean of field(q) . v over n_samples evenly spaced points q on a->b,
// endpoints included. Throws DegenerateLimb, EmptyField, InvalidArgument.
double limb_affinity_score(Point2D a, Point2D b, const AffinityField& field, int n_samples);

struct GroupingOptions {
  double score_threshold = 0.05;
  // Candidates without any accepted limb survive as one-keypoint skeletons
  // only above this confidence.
  double keypoint_threshold = 0.1;
  int n_samples = 10;
};

// Greedy per-limb matching in catalog order, then connected components.
// Skeletons are ordered by their lowest candidate index.
std::vector<Skeleton> group_keypoints(std::span<const CandidateKeypoint> candidates,
                                      std::span<const AffinityField> fields,
                                      std::span<const LimbSpec> limb_catalog,
                                      const GroupingOptions& options = {});

}  // namespace ivise::geometry

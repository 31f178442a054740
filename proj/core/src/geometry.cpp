#include "ivise/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "ivise/error.hpp"

namespace ivise::geometry {

namespace {

// Minimal union-find over dense indices.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

double limb_length(Point2D a, Point2D b) { return norm(b - a); }

const std::vector<LimbSpec>& default_limb_catalog() {
  using P = PartKind;
  static const std::vector<LimbSpec> catalog = {
      {P::Neck, P::RightShoulder, 4.0}, {P::Neck, P::LeftShoulder, 4.0},
      {P::RightShoulder, P::RightElbow, 4.0}, {P::RightElbow, P::RightWrist, 4.0},
      {P::LeftShoulder, P::LeftElbow, 4.0}, {P::LeftElbow, P::LeftWrist, 4.0},
      {P::Neck, P::RightHip, 4.0},        {P::RightHip, P::RightKnee, 4.0},
      {P::RightKnee, P::RightAnkle, 4.0}, {P::Neck, P::LeftHip, 4.0},
      {P::LeftHip, P::LeftKnee, 4.0},     {P::LeftKnee, P::LeftAnkle, 4.0},
      {P::Neck, P::Nose, 4.0},            {P::Nose, P::RightEye, 4.0},
      {P::RightEye, P::RightEar, 4.0},    {P::Nose, P::LeftEye, 4.0},
      {P::LeftEye, P::LeftEar, 4.0},
  };
  return catalog;
}

void validate_limb_catalog(std::span<const LimbSpec> catalog) {
  DisjointSets sets(kPartCount);
  std::array<bool, kPartCount> used{};
  for (const auto& limb : catalog) {
    if (limb.part_a == limb.part_b) {
      throw Error(ErrorKind::InvalidArgument, "limb endpoints must differ",
                  std::string(to_string(limb.part_a)));
    }
    if (!(limb.width > 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "limb width must be positive");
    }
    const auto a = static_cast<std::size_t>(limb.part_a);
    const auto b = static_cast<std::size_t>(limb.part_b);
    used[a] = used[b] = true;
    if (!sets.unite(a, b)) {
      throw Error(ErrorKind::InvalidArgument, "limb catalog contains a cycle",
                  std::string(to_string(limb.part_a)) + "-" + std::string(to_string(limb.part_b)));
    }
  }
  std::optional<std::size_t> root;
  for (std::size_t i = 0; i < kPartCount; ++i) {
    if (!used[i]) continue;
    const auto r = sets.find(i);
    if (root && *root != r) {
      throw Error(ErrorKind::InvalidArgument, "limb catalog is not connected");
    }
    root = r;
  }
}

Vec2 limb_unit_vector(Point2D a, Point2D b) {
  const Vec2 d = b - a;
  const double len = norm(d);
  if (!(len > kDegenerateTolerance)) {
    throw Error(ErrorKind::DegenerateLimb, "limb endpoints coincide");
  }
  return {d.x / len, d.y / len};
}

bool point_on_limb(Point2D p, Point2D a, Point2D b, double width) {
  if (!(width > 0.0)) throw Error(ErrorKind::InvalidArgument, "limb width must be positive");
  const Vec2 v = limb_unit_vector(a, b);
  const Vec2 v_perp{-v.y, v.x};
  const Vec2 rel = p - a;
  const double along = dot(v, rel);
  const double across = dot(v_perp, rel);
  return along >= 0.0 && along <= limb_length(a, b) && std::abs(across) <= width;
}

Vec2 field_value(Point2D p, Point2D a, Point2D b, double width) {
  return point_on_limb(p, a, b, width) ? limb_unit_vector(a, b) : Vec2{0.0, 0.0};
}

AffinityField::AffinityField(PartKind part_a, PartKind part_b, int origin_x, int origin_y,
                             int cols, int rows)
    : part_a_(part_a),
      part_b_(part_b),
      origin_x_(origin_x),
      origin_y_(origin_y),
      cols_(std::max(cols, 0)),
      rows_(std::max(rows, 0)),
      samples_(static_cast<std::size_t>(cols_) * rows_) {}

Vec2 AffinityField::at(int x, int y) const {
  return samples_[static_cast<std::size_t>(y - origin_y_) * cols_ + (x - origin_x_)];
}

void AffinityField::set(int x, int y, Vec2 v) {
  samples_[static_cast<std::size_t>(y - origin_y_) * cols_ + (x - origin_x_)] = v;
}

Vec2 AffinityField::lookup(Point2D p) const {
  if (empty()) throw Error(ErrorKind::EmptyField, "affinity field has no samples");
  const auto gx = std::clamp<long>(std::lround(p.x) - origin_x_, 0, cols_ - 1);
  const auto gy = std::clamp<long>(std::lround(p.y) - origin_y_, 0, rows_ - 1);
  return samples_[static_cast<std::size_t>(gy) * cols_ + static_cast<std::size_t>(gx)];
}

AffinityField synthesize_field(const LimbSpec& limb,
                               std::span<const std::pair<Point2D, Point2D>> segments, int cols,
                               int rows) {
  AffinityField field(limb.part_a, limb.part_b, 0, 0, cols, rows);
  std::vector<int> counts(field.samples().size(), 0);
  std::vector<Vec2> sums(field.samples().size());
  for (const auto& [a, b] : segments) {
    const Vec2 v = limb_unit_vector(a, b);
    const double pad = limb.width + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - pad)));
    const int x1 = std::min(cols - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + pad)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - pad)));
    const int y1 = std::min(rows - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + pad)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (point_on_limb({double(x), double(y)}, a, b, limb.width)) {
          const auto i = static_cast<std::size_t>(y) * cols + x;
          sums[i] = sums[i] + v;
          ++counts[i];
        }
      }
    }
  }
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const auto i = static_cast<std::size_t>(y) * cols + x;
      if (counts[i] == 1) {
        field.set(x, y, sums[i]);
      } else if (counts[i] > 1) {
        field.set(x, y, sums[i] * (1.0 / counts[i]));
      }
    }
  }
  return field;
}

std::vector<AffinityField> synthesize_fields(std::span<const Skeleton> persons,
                                             std::span<const LimbSpec> catalog, int cols,
                                             int rows) {
  std::vector<AffinityField> fields;
  fields.reserve(catalog.size());
  for (const auto& limb : catalog) {
    std::vector<std::pair<Point2D, Point2D>> segments;
    for (const auto& person : persons) {
      const auto* a = person.find(limb.part_a);
      const auto* b = person.find(limb.part_b);
      if (a && b && limb_length(a->position, b->position) > kDegenerateTolerance) {
        segments.emplace_back(a->position, b->position);
      }
    }
    fields.push_back(synthesize_field(limb, segments, cols, rows));
  }
  return fields;
}

double limb_affinity_score(Point2D a, Point2D b, const AffinityField& field, int n_samples) {
  if (n_samples < 2) throw Error(ErrorKind::InvalidArgument, "n_samples must be >= 2");
  const Vec2 v = limb_unit_vector(a, b);
  if (field.empty()) throw Error(ErrorKind::EmptyField, "affinity field has no samples");
  const Vec2 d = b - a;
  double sum = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i) / (n_samples - 1);
    sum += dot(field.lookup(a + d * t), v);
  }
  return sum / n_samples;
}

std::vector<Skeleton> group_keypoints(std::span<const CandidateKeypoint> candidates,
                                      std::span<const AffinityField> fields,
                                      std::span<const LimbSpec> limb_catalog,
                                      const GroupingOptions& options) {
  if (candidates.empty()) return {};
  validate_limb_catalog(limb_catalog);

  std::array<std::vector<std::size_t>, kPartCount> by_kind;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    by_kind[static_cast<std::size_t>(candidates[i].kind)].push_back(i);
  }

  DisjointSets components(candidates.size());
  std::vector<bool> linked(candidates.size(), false);

  struct Pair {
    double score;
    std::size_t a;
    std::size_t b;
  };

  for (const auto& limb : limb_catalog) {
    const auto field = std::find_if(fields.begin(), fields.end(), [&](const AffinityField& f) {
      return f.part_a() == limb.part_a && f.part_b() == limb.part_b;
    });
    if (field == fields.end() || field->empty()) continue;

    const auto& as = by_kind[static_cast<std::size_t>(limb.part_a)];
    const auto& bs = by_kind[static_cast<std::size_t>(limb.part_b)];
    std::vector<Pair> pairs;
    pairs.reserve(as.size() * bs.size());
    for (auto ia : as) {
      for (auto ib : bs) {
        const auto& pa = candidates[ia].position;
        const auto& pb = candidates[ib].position;
        if (limb_length(pa, pb) <= kDegenerateTolerance) continue;
        const double score = limb_affinity_score(pa, pb, *field, options.n_samples);
        if (score >= options.score_threshold) pairs.push_back({score, ia, ib});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& l, const Pair& r) {
      return std::tie(r.score, l.a, l.b) < std::tie(l.score, r.a, r.b);
    });

    std::vector<bool> used_a(candidates.size(), false);
    std::vector<bool> used_b(candidates.size(), false);
    for (const auto& p : pairs) {
      if (used_a[p.a] || used_b[p.b]) continue;
      used_a[p.a] = used_b[p.b] = true;
      components.unite(p.a, p.b);
      linked[p.a] = linked[p.b] = true;
    }
  }

  std::vector<Skeleton> skeletons;
  std::vector<std::ptrdiff_t> slot(candidates.size(), -1);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!linked[i] && !(candidates[i].confidence > options.keypoint_threshold)) continue;
    const auto root = components.find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<std::ptrdiff_t>(skeletons.size());
      skeletons.push_back(Skeleton{static_cast<int>(skeletons.size()), {}});
    }
    skeletons[slot[root]].keypoints[candidates[i].kind] = candidates[i];
  }
  return skeletons;
}

}  // namespace ivise::geometry

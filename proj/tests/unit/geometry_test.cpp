#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ivise/geometry.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace ivise {
namespace {

using geometry::AffinityField;
using geometry::LimbSpec;

TEST(LimbVector, UnitLengthAndDirection) {
  const auto v = geometry::limb_unit_vector({1, 1}, {4, 5});
  EXPECT_DOUBLE_EQ(v.x, 0.6);
  EXPECT_DOUBLE_EQ(v.y, 0.8);
}

TEST(LimbVector, CoincidentEndpointsThrow) {
  EXPECT_IVISE_ERROR(geometry::limb_unit_vector({3, 3}, {3, 3}), ErrorKind::DegenerateLimb);
  EXPECT_IVISE_ERROR(geometry::field_value({0, 0}, {2, 2}, {2, 2}, 4), ErrorKind::DegenerateLimb);
}

TEST(LimbVector, RandomPropertiesHold) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-500, 500);
  for (int i = 0; i < 2000; ++i) {
    const Point2D a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const auto v = geometry::limb_unit_vector(a, b);
    EXPECT_NEAR(norm(v), 1.0, 1e-9);
    const auto w = geometry::limb_unit_vector(b, a);
    EXPECT_NEAR(v.x, -w.x, 1e-12);
    EXPECT_NEAR(v.y, -w.y, 1e-12);
  }
}

TEST(PointOnLimb, BandEdges) {
  const Point2D a{0, 0}, b{10, 0};
  EXPECT_TRUE(geometry::point_on_limb({0, 0}, a, b, 4));
  EXPECT_TRUE(geometry::point_on_limb({10, 4}, a, b, 4));
  EXPECT_TRUE(geometry::point_on_limb({5, -4}, a, b, 4));
  EXPECT_FALSE(geometry::point_on_limb({5, 4.01}, a, b, 4));
  EXPECT_FALSE(geometry::point_on_limb({-0.01, 0}, a, b, 4));
  EXPECT_FALSE(geometry::point_on_limb({10.01, 0}, a, b, 4));
}

TEST(FieldValue, ZeroOffBand) {
  const auto on = geometry::field_value({5, 1}, {0, 0}, {10, 0}, 4);
  EXPECT_EQ(on, (Vec2{1, 0}));
  const auto off = geometry::field_value({5, 6}, {0, 0}, {10, 0}, 4);
  EXPECT_EQ(off, (Vec2{0, 0}));
}

TEST(Catalog, DefaultIsValidTree) {
  const auto& cat = geometry::default_limb_catalog();
  EXPECT_EQ(cat.size(), 17u);
  EXPECT_NO_THROW(geometry::validate_limb_catalog(cat));
}

TEST(Catalog, RejectsCycleAndBadWidth) {
  std::vector<LimbSpec> cyc{{PartKind::Neck, PartKind::Nose, 4},
                            {PartKind::Nose, PartKind::RightEye, 4},
                            {PartKind::RightEye, PartKind::Neck, 4}};
  EXPECT_IVISE_ERROR(geometry::validate_limb_catalog(cyc), ErrorKind::InvalidArgument);
  std::vector<LimbSpec> bad{{PartKind::Neck, PartKind::Nose, 0}};
  EXPECT_IVISE_ERROR(geometry::validate_limb_catalog(bad), ErrorKind::InvalidArgument);
  std::vector<LimbSpec> disjoint{{PartKind::Neck, PartKind::Nose, 4},
                                 {PartKind::RightHip, PartKind::RightKnee, 4}};
  EXPECT_IVISE_ERROR(geometry::validate_limb_catalog(disjoint), ErrorKind::InvalidArgument);
}

TEST(AffinityFieldTest, LookupRoundsAndClamps) {
  AffinityField f(PartKind::Neck, PartKind::Nose, 10, 20, 3, 2);
  f.set(10, 20, {1, 0});
  f.set(12, 21, {0, 1});
  EXPECT_EQ(f.lookup({9.6, 20.4}), (Vec2{1, 0}));
  EXPECT_EQ(f.lookup({-50, -50}), (Vec2{1, 0}));
  EXPECT_EQ(f.lookup({11.5, 20.5}), (Vec2{0, 1}));
  EXPECT_EQ(f.lookup({100, 100}), (Vec2{0, 1}));
}

TEST(AffinityFieldTest, EmptyFieldThrows) {
  AffinityField f;
  EXPECT_IVISE_ERROR(f.lookup({0, 0}), ErrorKind::EmptyField);
  EXPECT_IVISE_ERROR(geometry::limb_affinity_score({0, 0}, {5, 0}, f, 10), ErrorKind::EmptyField);
}

TEST(AffinityFieldTest, OverlappingBandsAverage) {
  const LimbSpec limb{PartKind::Neck, PartKind::Nose, 4};
  std::vector<std::pair<Point2D, Point2D>> segs{{{10, 10}, {30, 10}}, {{20, 0}, {20, 30}}};
  const auto f = geometry::synthesize_field(limb, segs, 40, 40);
  EXPECT_EQ(f.at(20, 10), (Vec2{0.5, 0.5}));
  EXPECT_EQ(f.at(12, 10), (Vec2{1, 0}));
  EXPECT_EQ(f.at(20, 25), (Vec2{0, 1}));
  EXPECT_EQ(f.at(35, 35), (Vec2{0, 0}));
}

TEST(AffinityScore, PerfectAlignmentScoresOne) {
  const LimbSpec limb{PartKind::Neck, PartKind::Nose, 4};
  std::vector<std::pair<Point2D, Point2D>> segs{{{5, 5}, {25, 17}}};
  const auto f = geometry::synthesize_field(limb, segs, 40, 40);
  EXPECT_NEAR(geometry::limb_affinity_score({5, 5}, {25, 17}, f, 10), 1.0, 1e-9);
  EXPECT_NEAR(geometry::limb_affinity_score({25, 17}, {5, 5}, f, 10), -1.0, 1e-9);
  EXPECT_IVISE_ERROR(geometry::limb_affinity_score({5, 5}, {25, 17}, f, 1),
                     ErrorKind::InvalidArgument);
}

TEST(AffinityScore, MatchesIndependentSampler) {
  std::mt19937_64 rng(11);
  const LimbSpec limb{PartKind::Neck, PartKind::Nose, 4};
  std::uniform_real_distribution<double> u(0, 60);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::pair<Point2D, Point2D>> segs{{{u(rng), u(rng)}, {u(rng), u(rng)}}};
    const auto f = geometry::synthesize_field(limb, segs, 60, 60);
    const Point2D a{u(rng), u(rng)}, b{u(rng), u(rng)};
    EXPECT_NEAR(geometry::limb_affinity_score(a, b, f, 10), oracle::affinity(f, a, b, 10), 1e-9);
  }
}

TEST(Grouping, EmptyInputGivesNoSkeletons) {
  EXPECT_TRUE(geometry::group_keypoints({}, {}, geometry::default_limb_catalog()).empty());
}

TEST(Grouping, TwoSeparatedPersons) {
  Skeleton a, b;
  a.person_index = 0;
  a.set(PartKind::Neck, {50, 50});
  a.set(PartKind::Nose, {50, 35});
  a.set(PartKind::RightShoulder, {38, 52});
  b.person_index = 1;
  b.set(PartKind::Neck, {150, 60});
  b.set(PartKind::Nose, {151, 44});
  b.set(PartKind::RightShoulder, {138, 61});
  std::vector<Skeleton> truth{a, b};
  const auto& cat = geometry::default_limb_catalog();
  const auto fields = geometry::synthesize_fields(truth, cat, 200, 100);
  std::vector<CandidateKeypoint> cands;
  for (const auto& s : {b, a}) {
    for (const auto& [p, kp] : s.keypoints) cands.push_back(kp);
  }
  const auto out = geometry::group_keypoints(cands, fields, cat);
  ASSERT_EQ(out.size(), 2u);
  // Lowest candidate index first: b's keypoints came first.
  EXPECT_EQ(out[0].keypoints, b.keypoints);
  EXPECT_EQ(out[1].keypoints, a.keypoints);
  EXPECT_EQ(out[0].person_index, 0);
  EXPECT_EQ(out[1].person_index, 1);
}

TEST(Grouping, LowConfidenceSingletonDropped) {
  std::vector<CandidateKeypoint> cands{{PartKind::Nose, {5, 5}, 0.05},
                                      {PartKind::LeftKnee, {20, 20}, 0.9}};
  std::vector<Skeleton> none;
  const auto& cat = geometry::default_limb_catalog();
  const auto fields = geometry::synthesize_fields(none, cat, 30, 30);
  const auto out = geometry::group_keypoints(cands, fields, cat);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].has(PartKind::LeftKnee));
}

TEST(Grouping, AgreesWithExhaustiveOracle) {
  std::mt19937_64 rng(3);
  const auto& cat = geometry::default_limb_catalog();
  const geometry::GroupingOptions opt;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + int(rng() % 3);
    const auto scene = oracle::random_grouping_scene(rng, n, cat);
    const auto fields = geometry::synthesize_fields(scene.truth, cat, scene.cols, scene.rows);
    const auto expected = oracle::exhaustive_grouping(scene.candidates, fields, cat,
                                                      opt.score_threshold, opt.n_samples,
                                                      opt.keypoint_threshold);
    const auto got = geometry::group_keypoints(scene.candidates, fields, cat, opt);
    std::set<std::set<std::size_t>> got_sets;
    for (const auto& sk : got) {
      std::set<std::size_t> g;
      for (const auto& [part, kp] : sk.keypoints) {
        for (std::size_t i = 0; i < scene.candidates.size(); ++i) {
          if (scene.candidates[i] == kp) g.insert(i);
        }
      }
      got_sets.insert(g);
    }
    EXPECT_EQ(got_sets, expected) << "trial " << trial;
    EXPECT_EQ(got.size(), std::size_t(n));
  }
}

}  // namespace
}  // namespace ivise

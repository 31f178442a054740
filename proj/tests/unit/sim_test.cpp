#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "ivise/color.hpp"
#include "ivise/sim.hpp"
#include "support.hpp"

namespace ivise {
namespace {

using namespace sim;

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(Scene, RenderPaintsPaletteColors) {
  SceneSpec s;
  s.width = 400;
  s.height = 400;
  PersonSpec p;
  p.position = {200.5, 80.5};
  p.scale = 0.9;
  p.torso_color = "red";
  p.leg_color = "blue";
  s.persons.push_back(p);
  const auto r = render_scene(s, "cam1", 3);
  EXPECT_EQ(r.frame.camera_id, "cam1");
  EXPECT_EQ(r.frame.sequence, 3u);
  EXPECT_EQ(r.frame.timestamp, frame_timestamp(s, 3));
  EXPECT_EQ(r.frame.at({0, 0}), s.background);
  // Middle of the torso.
  EXPECT_EQ(r.frame.at({200, 140}), (Rgb{255, 0, 0}));
  ASSERT_EQ(r.truth.skeletons.size(), 1u);
  ASSERT_EQ(r.expected.size(), 1u);
  EXPECT_EQ(r.expected[0].sections.at(Section::Torso)[0].name, "red");
  EXPECT_EQ(r.expected[0].sections.at(Section::LeftLeg)[0].name, "blue");
}

TEST(Scene, SkeletonFollowsTemplate) {
  PersonSpec p;
  p.position = {500, 300};
  p.scale = 0.5;
  const auto s = standing_skeleton(p, 2);
  EXPECT_EQ(s.person_index, 2);
  EXPECT_EQ(s.keypoints.size(), kPartCount);
  EXPECT_EQ(s.find(PartKind::Neck)->position, (Point2D{500, 300}));
  EXPECT_EQ(s.find(PartKind::LeftHip)->position, (Point2D{512.5, 375}));
  EXPECT_EQ(s.find(PartKind::RightKnee)->position, (Point2D{486.5, 420}));
  EXPECT_EQ(s.find(PartKind::LeftEar)->position, (Point2D{510, 285}));
}

TEST(Scene, ValidationErrors) {
  SceneSpec s;
  PersonSpec a, b;
  a.position = {300.5, 300.5};
  b.position = {320.5, 300.5};
  s.persons = {a, b};
  EXPECT_IVISE_ERROR(validate_scene(s), ErrorKind::OverlapError);
  s.persons = {a};
  s.persons[0].torso_color = "mauve";
  EXPECT_IVISE_ERROR(validate_scene(s), ErrorKind::UnknownColor);
  s.persons = {a};
  s.persons[0].position = {5, 5};
  EXPECT_IVISE_ERROR(validate_scene(s), ErrorKind::InvalidArgument);
}

TEST(Scene, RandomScenesAreValidAndDeterministic) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = random_scene(seed, 4);
    EXPECT_EQ(s.persons.size(), 4u);
    EXPECT_NO_THROW(validate_scene(s));
    const auto again = random_scene(seed, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_EQ(again.persons[i].position, s.persons[i].position);
      EXPECT_EQ(again.persons[i].torso_color, s.persons[i].torso_color);
    }
  }
}

TEST(Scene, FourPersonsFourTruths) {
  const auto s = random_scene(9, 4);
  const auto r = render_scene(s, "cam1", 0);
  EXPECT_EQ(r.truth.skeletons.size(), 4u);
  EXPECT_EQ(r.expected.size(), 4u);
}

TEST(Scene, NoiseIsDeterministicPerFrame) {
  auto s = random_scene(4, 1, 1920, 1080, 20);
  const auto a = render_scene(s, "cam1", 1);
  const auto b = render_scene(s, "cam1", 1);
  const auto c = render_scene(s, "cam1", 2);
  EXPECT_EQ(a.frame.pixels, b.frame.pixels);
  EXPECT_NE(a.frame.pixels, c.frame.pixels);
}

TEST(Scene, FromConfig) {
  const auto s = scene_from_config(Config::parse(
      "scene.seed = 5\nscene.width = 640\nscene.height = 480\nscene.noise = 3\n"
      "scene.persons = 100.5,50.5,0.5,red,black,brown,white; 400.5,50.5,0.5,grey,blue,black,black\n"));
  EXPECT_EQ(s.seed, 5u);
  EXPECT_EQ(s.width, 640);
  EXPECT_EQ(s.noise_level, 3);
  ASSERT_EQ(s.persons.size(), 2u);
  EXPECT_EQ(s.persons[1].torso_color, "grey");
  EXPECT_EQ(s.persons[0].hair_color, "brown");
  EXPECT_IVISE_ERROR(scene_from_config(Config::parse("scene.persons = 1,2,3\n")), ErrorKind::ParseError);
  EXPECT_EQ(scene_from_config(Config{}).persons.size(), 1u);
}

TopologyOptions small_run(int edges, int frames) {
  TopologyOptions o;
  o.edges = edges;
  o.frames = frames;
  o.queries = {"grey shirt"};
  o.scene_for_edge = [](int i) {
    SceneSpec s;
    s.width = 480;
    s.height = 270;
    s.seed = 10 + std::uint64_t(i);
    PersonSpec p;
    p.position = {240.5, 60.5};
    p.scale = 0.5;
    p.torso_color = i % 2 == 0 ? "grey" : "red";
    s.persons.push_back(p);
    return s;
  };
  return o;
}

TEST(Topology, MetricsRowsAndCounters) {
  const auto m = run_topology(small_run(3, 10));
  EXPECT_EQ(m.rows.size(), 30u);
  std::size_t processed = 0, sent = 0;
  for (const auto& r : m.rows) {
    processed += r.processed;
    sent += r.sent_bytes;
    EXPECT_EQ(r.raw_bytes, 480u * 270 * 3);
  }
  EXPECT_EQ(processed, 15u);
  EXPECT_EQ(m.bytes_per_edge.size(), 3u);
  std::size_t total = 0;
  for (const auto& [cam, b] : m.bytes_per_edge) {
    EXPECT_GT(b, 0u) << cam;
    total += b;
  }
  EXPECT_EQ(total, sent);
  // Grey shirts on cam1 and cam3, 5 processed frames each.
  EXPECT_EQ(m.expected, 10u);
  EXPECT_EQ(m.true_positives, 10u);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_GE(m.first_report_ms, 0.0);
  EXPECT_GT(m.mean_reduction_ratio, 0.0);
}

TEST(Topology, DeterministicReports) {
  const auto a = run_topology(small_run(2, 6));
  const auto b = run_topology(small_run(2, 6));
  EXPECT_EQ(a.reports, b.reports);
}

TEST(Topology, OfflineMatchesLive) {
  const auto run = run_topology_full(small_run(2, 6));
  ASSERT_EQ(run.offline.size(), 1u);
  auto offline = run.offline[0];
  for (auto& r : offline) r.query_id = run.query_ids[0];
  EXPECT_EQ(offline, run.metrics.reports);
}

TEST(Metrics, FileHasHeaderRowsAndSummary) {
  testing::TempDir dir;
  const auto m = run_topology(small_run(1, 4));
  const auto path = emit_metrics(m, dir.path());
  const auto lines = lines_of(path);
  ASSERT_EQ(lines.size(), 1u + 4 + 1);
  EXPECT_EQ(lines[0], kMetricsHeader);
  EXPECT_EQ(lines.back().rfind("summary,", 0), 0u);
  EXPECT_EQ(lines[1].rfind("cam1,0,1,1,", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "summary.txt"));
}

TEST(Metrics, EmptyRunIsHeaderOnly) {
  testing::TempDir dir;
  RunMetrics empty;
  const auto lines = lines_of(emit_metrics(empty, dir.path()));
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0], kMetricsHeader);
}

}  // namespace
}  // namespace ivise

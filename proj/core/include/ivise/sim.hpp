#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ivise/color.hpp"
#include "ivise/common.hpp"
#include "ivise/config.hpp"
#include "ivise/query.hpp"

// Synthetic scenes with ground truth, an in-process topology runner and
// metric capture.
namespace ivise::sim {

// One standing person. `position` is the neck in native pixels; the
// template is about 400 px tall at scale 1. The person's left is +x.
struct PersonSpec {
  Point2D position;
  double scale = 1.0;
  std::string torso_color = "grey";
  std::string leg_color = "blue";
  std::string hair_color = "black";
  std::string face_color = "white";
};

struct SceneSpec {
  std::uint64_t seed = 1;
  int width = 1920;
  int height = 1080;
  std::vector<PersonSpec> persons;
  Rgb background{70, 90, 70};
  int noise_level = 0;  // uniform per-channel jitter, +-noise_level
  TimestampMs base_timestamp = 1'700'000'000'000;
  int frame_interval_ms = 33;
};

Skeleton standing_skeleton(const PersonSpec& person, int person_index);
// Everything the renderer may touch for this person, inclusive.
BoundingBox person_bounds(const PersonSpec& person);

// Throws OverlapError for intersecting person boxes, UnknownColor for names
// outside the palettes and InvalidArgument for persons leaving the frame.
void validate_scene(const SceneSpec& spec, const color::PaletteSet& palettes = {});

std::vector<Skeleton> scene_skeletons(const SceneSpec& spec);
TimestampMs frame_timestamp(const SceneSpec& spec, std::uint64_t sequence);

struct RenderedScene {
  FrameRef frame;
  PoseResult truth;
  std::vector<query::PersonDescription> expected;
};

RenderedScene render_scene(const SceneSpec& spec, const std::string& camera_id,
                           std::uint64_t sequence, const color::PaletteSet& palettes = {});

// Places `persons` non-overlapping people with random palette colors.
SceneSpec random_scene(std::uint64_t seed, int persons, int width = 1920, int height = 1080,
                       int noise_level = 0, const color::PaletteSet& palettes = {});

// scene.seed, scene.width, scene.height, scene.noise, scene.persons
// ("x,y,scale,torso,legs,hair,face" entries separated by ';'). Without
// scene.persons one default person is centred in the frame.
SceneSpec scene_from_config(const Config& config);

struct FrameRow {
  std::string camera_id;
  std::uint64_t sequence = 0;
  bool processed = false;
  std::size_t persons = 0;
  double preprocess_ms = 0.0;
  double infer_ms = 0.0;
  double extract_ms = 0.0;
  double encode_send_ms = 0.0;
  std::size_t raw_bytes = 0;      // w * h * 3
  double raw_reference_bytes = 0.0;  // 100 KB per 1080p frame, scaled by area
  std::size_t sent_bytes = 0;
  std::size_t matches = 0;
  std::size_t expected_matches = 0;
};

struct RunMetrics {
  std::vector<FrameRow> rows;
  std::vector<query::MatchReport> reports;
  std::size_t true_positives = 0;
  std::size_t expected = 0;
  double precision = 1.0;  // vacuous when nothing was reported
  double recall = 1.0;     // vacuous when nothing was expected
  double mean_reduction_ratio = 0.0;  // mean sent / raw reference, processed frames
  std::map<std::string, std::size_t> bytes_per_edge;
  double first_report_ms = -1.0;  // query submission to first report
};

struct TopologyOptions {
  int edges = 1;
  int frames = 1;
  std::vector<std::string> queries;
  std::uint64_t seed = 1;
  double drop_ratio = 0.5;
  // Scene for edge i (0-based). Defaults to random_scene(seed + i, 1).
  std::function<SceneSpec(int edge_index)> scene_for_edge;
  color::PaletteSet palettes;
  std::filesystem::path index_log;  // empty: in-memory index only
};

struct TopologyRun {
  RunMetrics metrics;
  std::vector<std::string> query_ids;
  // Offline reruns of each query over the index built by this run.
  std::vector<std::vector<query::MatchReport>> offline;
};

// Camera ids are cam1..camN.
TopologyRun run_topology_full(const TopologyOptions& options);
RunMetrics run_topology(const TopologyOptions& options);

// Column order of the per-frame metrics file.
inline constexpr const char* kMetricsHeader =
    "camera_id,sequence,processed,persons,preprocess_ms,infer_ms,extract_ms,encode_send_ms,"
    "raw_bytes,raw_reference_bytes,sent_bytes,reduction_ratio,matches,expected_matches";

// Writes <dir>/frames.csv: header, one row per frame, then a `summary` row
// when there is at least one row. Returns the file path.
std::filesystem::path emit_metrics(const RunMetrics& metrics, const std::filesystem::path& dir);

}  // namespace ivise::sim

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ivise/common.hpp"
#include "ivise/geometry.hpp"

// Pluggable sources of per-frame keypoints: fixture playback, synthetic
// ground truth, or a remote inference endpoint.
namespace ivise::pose {

// Coordinates returned by a provider are in the space of the frame passed to
// infer() (the preprocessed frame on the edge).
class PoseProvider {
 public:
  virtual ~PoseProvider() = default;
  virtual PoseResult infer(const FrameRef& frame) = 0;
  virtual std::string_view backend() const = 0;
};

// Throws InvalidArgument when a keypoint lies outside the frame bounds or a
// skeleton repeats a person index.
void check_pose_in_bounds(const PoseResult& pose, int width, int height);

struct FixtureBounds {
  int width = 160;
  int height = 160;
};

// Recorded pose results keyed by (camera_id, sequence).
class Fixture {
 public:
  using Key = std::pair<std::string, std::uint64_t>;

  void add(PoseResult result);
  const PoseResult* find(const std::string& camera_id, std::uint64_t sequence) const;
  std::size_t size() const { return entries_.size(); }
  const std::map<Key, PoseResult>& entries() const { return entries_; }

 private:
  std::map<Key, PoseResult> entries_;
};

// `ivise-pose v1` header, then one
// `camera_id sequence person_index part_kind x y confidence` line per keypoint.
// Throws ParseError naming the line and field.
Fixture parse_fixture(std::string_view text, FixtureBounds bounds = {});
Fixture load_fixture(const std::filesystem::path& path, FixtureBounds bounds = {});

// Canonical rendering: entries by (camera, sequence), persons by index, parts
// in catalog order, shortest round-trip decimals.
std::string format_fixture(const Fixture& fixture);
void save_fixture(const Fixture& fixture, const std::filesystem::path& path);

class FixtureProvider final : public PoseProvider {
 public:
  explicit FixtureProvider(Fixture fixture) : fixture_(std::move(fixture)) {}
  PoseResult infer(const FrameRef& frame) override;  // throws FixtureMiss
  std::string_view backend() const override { return "fixture"; }

 private:
  Fixture fixture_;
};

// Replays ground-truth skeletons supplied by a scene source. The source
// reports skeletons at native resolution; they are scaled into the space of
// the frame passed to infer().
class SyntheticProvider final : public PoseProvider {
 public:
  struct Truth {
    int native_width = 0;
    int native_height = 0;
    std::vector<Skeleton> skeletons;
  };
  using Source = std::function<Truth(const std::string& camera_id, std::uint64_t sequence)>;

  explicit SyntheticProvider(Source source) : source_(std::move(source)) {}
  PoseResult infer(const FrameRef& frame) override;
  std::string_view backend() const override { return "synthetic"; }

 private:
  Source source_;
};

struct RemoteOptions {
  std::string url;  // http://host:port/path
  int timeout_ms = 5000;
  geometry::GroupingOptions grouping;
  std::vector<geometry::LimbSpec> limb_catalog = geometry::default_limb_catalog();
};

// Parses an `ivise-pose-response v1` body. Grouped responses carry a person
// index per keypoint; ungrouped ones carry bare candidates plus `paf` lines
// and are grouped here. Throws MalformedResponse.
PoseResult parse_remote_response(std::string_view body, const FrameRef& frame,
                                 const RemoteOptions& options);

// Renders a grouped response body (used by test endpoints and tooling).
std::string format_remote_response(const std::vector<Skeleton>& skeletons,
                                   double inference_millis = 0.0);

// POSTs the frame as a binary PPM and parses the key-value response.
// Throws RemoteUnavailable when the endpoint is unreachable or the deadline
// passes; the call never outlives timeout_ms by more than scheduling slack.
class RemoteProvider final : public PoseProvider {
 public:
  explicit RemoteProvider(RemoteOptions options);
  PoseResult infer(const FrameRef& frame) override;
  std::string_view backend() const override { return "remote"; }

 private:
  RemoteOptions options_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace ivise::pose

#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "ivise/config.hpp"
#include "ivise/pose_provider.hpp"
#include "ivise/wire.hpp"

// Per-camera edge service: drop policy, preprocess -> infer -> extract, and
// feature transmission while at least one query is active.
namespace ivise::edge {

struct EdgeConfig {
  std::string camera_id;
  // "dir:<path>" (numbered PPM files), "synthetic" (scene.* keys) or
  // "device:<n>" (not supported by this build).
  std::string source = "synthetic";
  double drop_ratio = 0.5;
  std::string fog_address = "127.0.0.1:7700";
  std::string pose_backend = "synthetic";  // fixture | synthetic | remote
  std::string fixture_path;
  std::string remote_url;
  int remote_timeout_ms = 5000;
  std::string status_addr;  // empty: no status endpoint
  double fps = 0.0;         // 0: as fast as frames arrive
  long long max_frames = -1;
  int heartbeat_interval_ms = 5000;

  // Keys: edge.camera_id, edge.source, edge.drop_ratio, fog.address,
  // pose.backend, pose.fixture, pose.remote_url, pose.remote_timeout_ms,
  // edge.status_addr, edge.fps, edge.max_frames, edge.heartbeat_interval_ms.
  static EdgeConfig from_config(const Config& config);
  void validate() const;
};

// Deterministic frame dropping: frame i is processed iff
// floor(i * keep) != floor((i - 1) * keep), keep = 1 - drop_ratio.
class DropPolicy {
 public:
  explicit DropPolicy(double drop_ratio);
  bool process(std::uint64_t frame_index) const;
  double drop_ratio() const { return drop_ratio_; }

 private:
  double drop_ratio_;
};

enum class Stage { Preprocess, Infer, Extract, EncodeSend };
inline constexpr std::size_t kStageCount = 4;
std::string_view to_string(Stage stage);

// Lock-free latency histogram; bucket upper bounds in milliseconds.
class LatencyHistogram {
 public:
  static constexpr std::array<double, 12> kBounds = {0.1, 0.5, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000};

  void record(double millis);
  std::uint64_t count() const { return count_.load(); }
  double mean_millis() const;
  std::array<std::uint64_t, kBounds.size() + 1> buckets() const;

 private:
  std::array<std::atomic<std::uint64_t>, kBounds.size() + 1> buckets_{};
  std::atomic<std::uint64_t> count_{0};
  std::atomic<std::uint64_t> total_micros_{0};
};

struct StageSummary {
  std::uint64_t count = 0;
  double mean_millis = 0.0;
  std::array<std::uint64_t, LatencyHistogram::kBounds.size() + 1> buckets{};
};

struct EdgeStats {
  std::uint64_t frames_seen = 0;
  std::uint64_t frames_processed = 0;
  std::uint64_t persons_detected = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t provider_errors = 0;
  std::array<StageSummary, kStageCount> stages{};
};

// `ivise-edge-stats v1` followed by `key value` lines.
std::string render_stats(const std::string& camera_id, const EdgeStats& stats);

class FeatureSink {
 public:
  virtual ~FeatureSink() = default;
  virtual void send(std::vector<std::uint8_t> bytes) = 0;
};

struct StageTimes {
  double preprocess_ms = 0.0;
  double infer_ms = 0.0;
  double extract_ms = 0.0;
  double encode_send_ms = 0.0;
};

struct FrameOutcome {
  bool processed = false;
  bool transmitted = false;
  std::size_t persons = 0;
  std::size_t bytes_sent = 0;
  StageTimes times;
  std::optional<std::string> error;
};

using Clock = std::function<TimestampMs()>;

class EdgeAgent {
 public:
  EdgeAgent(EdgeConfig config, std::unique_ptr<pose::PoseProvider> provider, FeatureSink& sink,
            Clock clock = wall_clock_ms);

  // Counts the frame; when a query is active and the drop policy keeps it,
  // runs the pipeline and transmits features for frames with persons.
  FrameOutcome on_frame(const FrameRef& frame);

  // Activate (until TTL) or cancel one query. Returns whether any query is
  // active afterwards.
  bool handle_query_dispatch(const wire::QueryDispatch& dispatch);
  bool active() const;
  std::vector<std::string> active_queries() const;

  void count_dropped_message() { messages_dropped_.fetch_add(1); }

  EdgeStats stats() const;
  const EdgeConfig& config() const { return config_; }
  std::uint64_t sender_id() const { return sender_id_; }
  wire::Heartbeat heartbeat() const;

 private:
  EdgeConfig config_;
  std::unique_ptr<pose::PoseProvider> provider_;
  FeatureSink& sink_;
  Clock clock_;
  DropPolicy drop_;
  std::uint64_t sender_id_;

  mutable std::mutex queries_mutex_;
  std::map<std::string, TimestampMs> query_expiry_;

  std::atomic<std::uint64_t> frames_seen_{0};
  std::atomic<std::uint64_t> frames_processed_{0};
  std::atomic<std::uint64_t> persons_detected_{0};
  std::atomic<std::uint64_t> messages_sent_{0};
  std::atomic<std::uint64_t> bytes_sent_{0};
  std::atomic<std::uint64_t> messages_dropped_{0};
  std::atomic<std::uint64_t> provider_errors_{0};
  std::array<LatencyHistogram, kStageCount> latency_;
};

// Bounded FIFO in front of the network sender. When full, the oldest message
// is discarded and counted.
class OutboundQueue final : public FeatureSink {
 public:
  explicit OutboundQueue(std::size_t capacity = 100) : capacity_(capacity) {}

  void send(std::vector<std::uint8_t> bytes) override;
  std::optional<std::vector<std::uint8_t>> pop(std::chrono::milliseconds timeout);
  // Puts a message back at the head after a failed write.
  void requeue_front(std::vector<std::uint8_t> bytes);
  void close();

  std::size_t size() const;
  std::uint64_t dropped() const { return dropped_.load(); }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::vector<std::uint8_t>> queue_;
  std::atomic<std::uint64_t> dropped_{0};
  bool closed_ = false;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<FrameRef> next() = 0;
};

// Numbered PPM files in a directory; sequence follows file order.
class DirectorySource final : public FrameSource {
 public:
  DirectorySource(std::string camera_id, const std::filesystem::path& dir);
  std::optional<FrameRef> next() override;

 private:
  std::string camera_id_;
  std::vector<std::filesystem::path> files_;
  std::size_t pos_ = 0;
};

std::unique_ptr<pose::PoseProvider> make_provider(const EdgeConfig& config, const Config& raw);
std::unique_ptr<FrameSource> make_source(const EdgeConfig& config, const Config& raw);

// Runs the edge service until the source is exhausted or stop is requested:
// connects to the fog (reconnecting on failure), forwards dispatches, sends
// heartbeats and serves the status endpoint.
void run_pipeline(const Config& raw_config, std::stop_token stop);

}  // namespace ivise::edge

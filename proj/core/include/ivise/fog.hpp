#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "ivise/color.hpp"
#include "ivise/config.hpp"
#include "ivise/index.hpp"
#include "ivise/query.hpp"
#include "ivise/wire.hpp"

// Fog coordinator: edge registry, query sessions, ingest (describe, index,
// match) and report delivery.
namespace ivise::fog {

using Clock = std::function<TimestampMs()>;

struct FogOptions {
  int heartbeat_interval_ms = 5000;
  int missed_heartbeats = 3;
  std::uint32_t default_ttl_seconds = 300;
  std::uint64_t cluster_seed = 0x5eed;
  color::ClusterOptions cluster;
  color::PaletteSet palettes;
  std::filesystem::path index_log;  // empty: in-memory only

  // Keys: fog.heartbeat_interval_ms, fog.query_ttl_seconds, fog.index_log,
  // fog.cluster_seed, plus the palette keys.
  static FogOptions from_config(const Config& config);
};

// Fog -> edge channel for dispatches.
class EdgeLink {
 public:
  virtual ~EdgeLink() = default;
  virtual void send(std::vector<std::uint8_t> bytes) = 0;
};

enum class EdgeState { Connected, Disconnected };
std::string_view to_string(EdgeState state);

struct EdgeEntry {
  std::string camera_id;
  std::string address;
  query::GeoLocation location;
  TimestampMs last_heartbeat = 0;
  EdgeState state = EdgeState::Disconnected;
  std::uint64_t frames_seen = 0;
  std::uint64_t frames_processed = 0;
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
  std::uint64_t persons = 0;
};

enum class SessionState { Active, Cancelled, Expired };
std::string_view to_string(SessionState state);

// Ordered, independently consumed view of one session's reports.
class ReportFeed {
 public:
  enum class Status { Report, Timeout, Closed };
  struct Item {
    Status status = Status::Timeout;
    std::optional<query::MatchReport> report;
  };

  // Next report in processing order, waiting up to `timeout`.
  Item next(std::chrono::milliseconds timeout);

 private:
  friend class FogNode;
  struct Shared;
  explicit ReportFeed(std::shared_ptr<Shared> shared) : shared_(std::move(shared)) {}
  std::shared_ptr<Shared> shared_;
  std::size_t cursor_ = 0;
};

struct SubmitResult {
  std::string query_id;
  std::vector<std::string> dispatched;  // camera ids that received the query
  std::vector<std::string> warnings;    // e.g. "NoEdgesInScope"
};

struct SessionInfo {
  std::string query_id;
  std::string text;
  SessionState state = SessionState::Active;
  std::vector<std::string> dispatched;
  std::size_t reports = 0;
  TimestampMs issued_at = 0;
  TimestampMs expires_at = 0;
};

struct FogStats {
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
  std::uint64_t persons = 0;
  std::uint64_t reports = 0;
  std::uint64_t unknown_edge_drops = 0;
  std::size_t index_records = 0;
  std::size_t active_sessions = 0;
};

class FogNode {
 public:
  FogNode(query::CameraRegistry registry, FogOptions options = {}, Clock clock = wall_clock_ms);
  ~FogNode();
  FogNode(const FogNode&) = delete;
  FogNode& operator=(const FogNode&) = delete;

  // Edge registry. Throws UnknownEdge for cameras not in the registry.
  void attach_edge(const std::string& camera_id, std::shared_ptr<EdgeLink> link,
                   std::string address = {});
  void detach_edge(const std::string& camera_id);
  void on_heartbeat(const wire::Heartbeat& heartbeat);
  // Marks stale edges disconnected and expires sessions past their TTL.
  void sweep();
  std::vector<EdgeEntry> edges() const;

  // Parses and registers a session, then dispatches it to every in-scope
  // connected edge. Parse errors propagate unchanged.
  SubmitResult submit_query(const std::string& text, const std::vector<std::string>& scope = {},
                            std::optional<std::uint32_t> ttl_seconds = std::nullopt);
  void cancel_query(const std::string& query_id);
  ReportFeed operator_feed(const std::string& query_id);  // throws UnknownQuery
  std::vector<query::MatchReport> session_reports(const std::string& query_id) const;
  SessionInfo session(const std::string& query_id) const;
  std::vector<SessionInfo> sessions() const;

  // Describe, index and match every person. Returns the number of persons
  // processed. Throws UnknownEdge for unregistered senders.
  std::size_t ingest_features(const wire::FrameFeaturesMsg& msg, std::uint64_t sender_id);
  // Decodes one envelope and routes it. Returns the message kind.
  wire::Kind ingest_bytes(std::span<const std::uint8_t> bytes);

  std::vector<query::MatchReport> offline_query(const std::string& text,
                                                const index::TimeRange& range = {}) const;

  // Called once per delivered report, on the ingest thread.
  void set_report_observer(std::function<void(const query::MatchReport&)> observer);

  FogStats stats() const;
  const query::CameraRegistry& registry() const { return registry_; }
  const index::FeatureIndex& feature_index() const { return index_; }
  const FogOptions& options() const { return options_; }

 private:
  struct Session;
  struct EdgeSlot {
    EdgeEntry entry;
    std::shared_ptr<EdgeLink> link;
  };

  void expire_locked(TimestampMs now);
  void dispatch_locked(const wire::QueryDispatch& dispatch, const std::vector<std::string>& cameras);
  std::map<Section, int> requested_k_locked(std::string_view camera_id) const;

  query::CameraRegistry registry_;
  FogOptions options_;
  Clock clock_;
  index::FeatureIndex index_;

  mutable std::mutex mutex_;  // registry state and sessions
  std::map<std::string, EdgeSlot, std::less<>> edges_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
  std::uint64_t next_query_ = 1;
  std::function<void(const query::MatchReport&)> observer_;

  std::atomic<std::uint64_t> messages_{0};
  std::atomic<std::uint64_t> bytes_{0};
  std::atomic<std::uint64_t> persons_{0};
  std::atomic<std::uint64_t> reports_{0};
  std::atomic<std::uint64_t> unknown_edge_drops_{0};
};

// Network front end: accepts edge connections on fog.listen_addr (one
// ingest worker per connection) and operator clients on fog.operator_addr.
class FogServer {
 public:
  FogServer(FogNode& node, const HostPort& edge_addr, const HostPort& operator_addr);
  ~FogServer();

  int edge_port() const;
  int operator_port() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Builds a registry, node and server from a config file and serves until
// stop is requested. Keys: fog.listen_addr, fog.operator_addr, fog.cameras.
void run_fog(const Config& config, std::stop_token stop);

}  // namespace ivise::fog

#pragma once

#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ivise/query.hpp"

// Append-only store of person descriptions on the fog node; replaying a query
// over it gives the same reports as running the query live.
namespace ivise::index {

struct IndexRecord {
  query::PersonDescription person;
  TimestampMs inserted_at = 0;
  friend bool operator==(const IndexRecord&, const IndexRecord&) = default;
};

// Inclusive range over frame timestamps.
struct TimeRange {
  TimestampMs from = std::numeric_limits<TimestampMs>::min();
  TimestampMs to = std::numeric_limits<TimestampMs>::max();
  bool contains(TimestampMs t) const { return t >= from && t <= to; }
};

// One log line, no trailing newline:
//   rec <inserted_at> <camera> <sequence> <person> <timestamp> [section:name=n,...@x0,y0,x1,y1]... [missing:s,...]
std::string format_record(const IndexRecord& record);
IndexRecord parse_record(std::string_view line);

inline constexpr std::string_view kIndexHeader = "ivise-index v1";

// Single writer, many readers. With a log path the existing log is replayed
// on construction and every insert is appended and flushed.
class FeatureIndex {
 public:
  FeatureIndex() = default;
  explicit FeatureIndex(const std::filesystem::path& log_path);

  FeatureIndex(const FeatureIndex&) = delete;
  FeatureIndex& operator=(const FeatureIndex&) = delete;

  // Throws InvalidArgument if the record's sequence precedes the last one
  // stored for its camera.
  void insert(IndexRecord record);

  std::vector<query::MatchReport> scan(const query::Query& query, const TimeRange& range,
                                       const query::CameraRegistry& registry) const;

  std::size_t size() const;
  std::vector<IndexRecord> snapshot() const;

 private:
  void check_order(const IndexRecord& record) const;

  mutable std::shared_mutex mutex_;
  std::vector<IndexRecord> records_;
  std::map<std::string, std::uint64_t, std::less<>> last_sequence_;
  std::optional<std::ofstream> log_;
};

}  // namespace ivise::index

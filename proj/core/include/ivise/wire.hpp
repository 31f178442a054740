#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ivise/common.hpp"
#include "ivise/net.hpp"
#include "ivise/query.hpp"
#include "ivise/regions.hpp"

// Edge <-> fog message schemas and byte accounting.
//
// Envelope (big-endian):
//   u8 version | u8 kind | u64 sender_id | u32 payload_length | payload
namespace ivise::wire {

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 14;
inline constexpr std::uint32_t kMaxPayload = 64u << 20;

enum class Kind : std::uint8_t {
  QueryDispatch = 1,
  FrameFeatures = 2,
  MatchReportMsg = 3,
  Heartbeat = 4,
  Ack = 5,
};

std::string_view to_string(Kind kind);

struct EnvelopeHeader {
  std::uint8_t version = kVersion;
  Kind kind = Kind::Heartbeat;
  std::uint64_t sender_id = 0;
  std::uint32_t payload_length = 0;
};

struct Envelope {
  std::uint8_t version = kVersion;
  Kind kind = Kind::Heartbeat;
  std::uint64_t sender_id = 0;
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_envelope(const Envelope& envelope);
// Throws VersionMismatch, UnknownKind.
EnvelopeHeader decode_header(std::span<const std::uint8_t> bytes);
// Throws VersionMismatch, UnknownKind, TruncatedPayload, MalformedPayload
// (trailing bytes).
Envelope decode_envelope(std::span<const std::uint8_t> bytes);

struct QueryDispatch {
  enum class Action : std::uint8_t { Activate = 0, Cancel = 1 };
  Action action = Action::Activate;
  std::string query_id;
  std::uint32_t ttl_seconds = 300;
  std::string query_text;
  friend bool operator==(const QueryDispatch&, const QueryDispatch&) = default;
};

struct WireKeypoint {
  PartKind part = PartKind::Nose;
  float x = 0.0f;
  float y = 0.0f;
  float confidence = 0.0f;
  friend bool operator==(const WireKeypoint&, const WireKeypoint&) = default;
};

// Pixels travel run-length encoded: (u8 run, r, g, b) per run.
struct WireRegion {
  Section section = Section::Torso;
  BoundingBox box;
  std::vector<Rgb> pixels;
  friend bool operator==(const WireRegion&, const WireRegion&) = default;
};

struct WirePerson {
  std::uint16_t person_index = 0;
  std::vector<WireKeypoint> keypoints;
  std::vector<WireRegion> regions;
  friend bool operator==(const WirePerson&, const WirePerson&) = default;
};

struct FrameFeaturesMsg {
  std::string camera_id;
  std::uint64_t sequence = 0;
  TimestampMs timestamp = 0;
  std::vector<WirePerson> persons;
  friend bool operator==(const FrameFeaturesMsg&, const FrameFeaturesMsg&) = default;
};

struct MatchReportMsg {
  query::MatchReport report;
  friend bool operator==(const MatchReportMsg&, const MatchReportMsg&) = default;
};

struct Heartbeat {
  std::string camera_id;
  TimestampMs timestamp = 0;
  std::uint64_t frames_seen = 0;
  std::uint64_t frames_processed = 0;
  friend bool operator==(const Heartbeat&, const Heartbeat&) = default;
};

struct Ack {
  std::uint64_t sequence = 0;
  std::uint8_t status = 0;
  friend bool operator==(const Ack&, const Ack&) = default;
};

using Message = std::variant<QueryDispatch, FrameFeaturesMsg, MatchReportMsg, Heartbeat, Ack>;

Kind kind_of(const Message& message);

std::vector<std::uint8_t> encode_payload(const Message& message);
Message decode_payload(Kind kind, std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode(std::uint64_t sender_id, const Message& message);

struct Decoded {
  std::uint64_t sender_id = 0;
  Message message;
};
Decoded decode(std::span<const std::uint8_t> bytes);

// Exact encoded length, header included.
std::size_t byte_size(const Message& message);

std::vector<std::uint8_t> encode_rle(std::span<const Rgb> pixels);
// Throws MalformedPayload unless the runs expand to exactly `count` pixels.
std::vector<Rgb> decode_rle(std::span<const std::uint8_t> bytes, std::size_t count);

// Frames without a person are never transmitted.
// Reads one whole envelope from a stream socket. Returns nullopt on a clean
// close before the first byte.
std::optional<std::vector<std::uint8_t>> read_envelope(net::Socket& socket, int timeout_ms = -1);

bool should_transmit(const PoseResult& pose);

// Stable 64-bit sender id for a camera (FNV-1a).
std::uint64_t sender_id_for(std::string_view camera_id);

// Packs a processed frame: native-resolution keypoints plus each region.
FrameFeaturesMsg make_features(const FrameRef& frame, const PoseResult& native_pose,
                               const std::vector<regions::RegionSet>& region_sets);

// Fog-side reconstruction of a transmitted region.
regions::PixelRegion to_pixel_region(const WireRegion& region, const PersonRef& source);

// Raw-frame baseline: uncompressed RGB scaled so a 1080p frame counts as
// 100 KB, the typical size of a transmitted raw video frame.
inline constexpr double kRawReferenceBytes1080p = 100'000.0;
std::size_t raw_rgb_bytes(int width, int height);
double raw_reference_bytes(int width, int height);

}  // namespace ivise::wire

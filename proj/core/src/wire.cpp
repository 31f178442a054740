#include "ivise/wire.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "ivise/error.hpp"

namespace ivise::wire {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void i64(std::int64_t v) { be(static_cast<std::uint64_t>(v), 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    if (s.size() > 0xFFFF) throw Error(ErrorKind::InvalidArgument, "string field too long");
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(be(8)); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u16();
    auto b = take(n);
    return std::string(b.begin(), b.end());
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorKind::TruncatedPayload, "payload ends early");
  }
  std::uint64_t be(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

Section read_section(Reader& r) {
  const auto v = r.u8();
  if (v >= kSectionCount) throw Error(ErrorKind::MalformedPayload, "bad section id");
  return static_cast<Section>(v);
}

PartKind read_part(Reader& r) {
  const auto v = r.u8();
  if (v >= kPartCount) throw Error(ErrorKind::MalformedPayload, "bad part id");
  return static_cast<PartKind>(v);
}

void write_box16(Writer& w, const BoundingBox& b) {
  for (int v : {b.min_x, b.min_y, b.max_x, b.max_y}) {
    if (v < 0 || v > 0xFFFF) throw Error(ErrorKind::InvalidArgument, "bounding box outside u16 range");
    w.u16(static_cast<std::uint16_t>(v));
  }
}

BoundingBox read_box16(Reader& r) {
  BoundingBox b;
  b.min_x = r.u16();
  b.min_y = r.u16();
  b.max_x = r.u16();
  b.max_y = r.u16();
  return b;
}

void check_count(std::size_t n, std::size_t max, const char* what) {
  if (n > max) throw Error(ErrorKind::InvalidArgument, std::string("too many ") + what);
}

void write_report(Writer& w, const query::MatchReport& rep) {
  w.str(rep.query_id);
  w.str(rep.camera_id);
  w.u64(rep.sequence);
  w.i64(rep.timestamp);
  w.f64(rep.location.latitude);
  w.f64(rep.location.longitude);
  w.u32(static_cast<std::uint32_t>(rep.person_index));
  check_count(rep.matched.size(), 0xFF, "clauses");
  w.u8(static_cast<std::uint8_t>(rep.matched.size()));
  for (const auto& c : rep.matched) {
    w.u8(static_cast<std::uint8_t>(c.section));
    w.str(c.color);
    w.u32(static_cast<std::uint32_t>(c.k));
  }
  check_count(rep.evidence.size(), 0xFF, "evidence boxes");
  w.u8(static_cast<std::uint8_t>(rep.evidence.size()));
  for (const auto& e : rep.evidence) {
    w.u8(static_cast<std::uint8_t>(e.section));
    for (int v : {e.box.min_x, e.box.min_y, e.box.max_x, e.box.max_y}) {
      w.u32(static_cast<std::uint32_t>(v));
    }
  }
}

query::MatchReport read_report(Reader& r) {
  query::MatchReport rep;
  rep.query_id = r.str();
  rep.camera_id = r.str();
  rep.sequence = r.u64();
  rep.timestamp = r.i64();
  rep.location.latitude = r.f64();
  rep.location.longitude = r.f64();
  rep.person_index = static_cast<int>(r.u32());
  const auto nc = r.u8();
  for (int i = 0; i < nc; ++i) {
    query::Clause c;
    c.section = read_section(r);
    c.color = r.str();
    c.k = static_cast<int>(r.u32());
    rep.matched.push_back(std::move(c));
  }
  const auto ne = r.u8();
  for (int i = 0; i < ne; ++i) {
    query::Evidence e;
    e.section = read_section(r);
    e.box.min_x = static_cast<int>(r.u32());
    e.box.min_y = static_cast<int>(r.u32());
    e.box.max_x = static_cast<int>(r.u32());
    e.box.max_y = static_cast<int>(r.u32());
    rep.evidence.push_back(e);
  }
  return rep;
}

}  // namespace

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::QueryDispatch: return "QueryDispatch";
    case Kind::FrameFeatures: return "FrameFeatures";
    case Kind::MatchReportMsg: return "MatchReportMsg";
    case Kind::Heartbeat: return "Heartbeat";
    case Kind::Ack: return "Ack";
  }
  return "Unknown";
}

std::vector<std::uint8_t> encode_envelope(const Envelope& envelope) {
  if (envelope.payload.size() > kMaxPayload) {
    throw Error(ErrorKind::InvalidArgument, "payload exceeds maximum size");
  }
  Writer w;
  w.u8(envelope.version);
  w.u8(static_cast<std::uint8_t>(envelope.kind));
  w.u64(envelope.sender_id);
  w.u32(static_cast<std::uint32_t>(envelope.payload.size()));
  w.bytes(envelope.payload);
  return w.take();
}

EnvelopeHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw Error(ErrorKind::TruncatedPayload, "short envelope header");
  Reader r(bytes.first(kHeaderSize));
  EnvelopeHeader h;
  h.version = r.u8();
  if (h.version != kVersion) {
    throw Error(ErrorKind::VersionMismatch, "unsupported protocol version",
                std::to_string(h.version));
  }
  const auto kind = r.u8();
  if (kind < 1 || kind > 5) throw Error(ErrorKind::UnknownKind, "unknown message kind", std::to_string(kind));
  h.kind = static_cast<Kind>(kind);
  h.sender_id = r.u64();
  h.payload_length = r.u32();
  if (h.payload_length > kMaxPayload) {
    throw Error(ErrorKind::MalformedPayload, "payload length exceeds maximum");
  }
  return h;
}

Envelope decode_envelope(std::span<const std::uint8_t> bytes) {
  const auto h = decode_header(bytes);
  const auto body = bytes.subspan(kHeaderSize);
  if (body.size() < h.payload_length) {
    throw Error(ErrorKind::TruncatedPayload, "payload shorter than declared length");
  }
  if (body.size() > h.payload_length) {
    throw Error(ErrorKind::MalformedPayload, "trailing bytes after payload");
  }
  return {h.version, h.kind, h.sender_id, std::vector<std::uint8_t>(body.begin(), body.end())};
}

Kind kind_of(const Message& message) {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, QueryDispatch>) return Kind::QueryDispatch;
        else if constexpr (std::is_same_v<T, FrameFeaturesMsg>) return Kind::FrameFeatures;
        else if constexpr (std::is_same_v<T, MatchReportMsg>) return Kind::MatchReportMsg;
        else if constexpr (std::is_same_v<T, Heartbeat>) return Kind::Heartbeat;
        else return Kind::Ack;
      },
      message);
}

std::vector<std::uint8_t> encode_rle(std::span<const Rgb> pixels) {
  std::vector<std::uint8_t> out;
  std::size_t i = 0;
  while (i < pixels.size()) {
    std::size_t run = 1;
    while (i + run < pixels.size() && run < 255 && pixels[i + run] == pixels[i]) ++run;
    out.push_back(static_cast<std::uint8_t>(run));
    out.push_back(pixels[i].r);
    out.push_back(pixels[i].g);
    out.push_back(pixels[i].b);
    i += run;
  }
  return out;
}

std::vector<Rgb> decode_rle(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (bytes.size() % 4 != 0) throw Error(ErrorKind::MalformedPayload, "RLE length not a multiple of 4");
  std::vector<Rgb> out;
  out.reserve(count);
  for (std::size_t i = 0; i < bytes.size(); i += 4) {
    const auto run = bytes[i];
    if (run == 0 || out.size() + run > count) {
      throw Error(ErrorKind::MalformedPayload, "RLE run overflows pixel count");
    }
    out.insert(out.end(), run, Rgb{bytes[i + 1], bytes[i + 2], bytes[i + 3]});
  }
  if (out.size() != count) throw Error(ErrorKind::MalformedPayload, "RLE expands to wrong pixel count");
  return out;
}

std::vector<std::uint8_t> encode_payload(const Message& message) {
  Writer w;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, QueryDispatch>) {
          w.u8(static_cast<std::uint8_t>(m.action));
          w.str(m.query_id);
          w.u32(m.ttl_seconds);
          w.str(m.query_text);
        } else if constexpr (std::is_same_v<T, FrameFeaturesMsg>) {
          w.str(m.camera_id);
          w.u64(m.sequence);
          w.i64(m.timestamp);
          check_count(m.persons.size(), 0xFFFF, "persons");
          w.u16(static_cast<std::uint16_t>(m.persons.size()));
          for (const auto& p : m.persons) {
            w.u16(p.person_index);
            check_count(p.keypoints.size(), 0xFF, "keypoints");
            w.u8(static_cast<std::uint8_t>(p.keypoints.size()));
            for (const auto& kp : p.keypoints) {
              w.u8(static_cast<std::uint8_t>(kp.part));
              w.f32(kp.x);
              w.f32(kp.y);
              w.f32(kp.confidence);
            }
            check_count(p.regions.size(), 0xFF, "regions");
            w.u8(static_cast<std::uint8_t>(p.regions.size()));
            for (const auto& region : p.regions) {
              w.u8(static_cast<std::uint8_t>(region.section));
              write_box16(w, region.box);
              const auto rle = encode_rle(region.pixels);
              w.u32(static_cast<std::uint32_t>(region.pixels.size()));
              w.u32(static_cast<std::uint32_t>(rle.size()));
              w.bytes(rle);
            }
          }
        } else if constexpr (std::is_same_v<T, MatchReportMsg>) {
          write_report(w, m.report);
        } else if constexpr (std::is_same_v<T, Heartbeat>) {
          w.str(m.camera_id);
          w.i64(m.timestamp);
          w.u64(m.frames_seen);
          w.u64(m.frames_processed);
        } else {
          w.u64(m.sequence);
          w.u8(m.status);
        }
      },
      message);
  return w.take();
}

Message decode_payload(Kind kind, std::span<const std::uint8_t> payload) {
  Reader r(payload);
  Message out;
  switch (kind) {
    case Kind::QueryDispatch: {
      QueryDispatch m;
      const auto action = r.u8();
      if (action > 1) throw Error(ErrorKind::MalformedPayload, "bad dispatch action");
      m.action = static_cast<QueryDispatch::Action>(action);
      m.query_id = r.str();
      m.ttl_seconds = r.u32();
      m.query_text = r.str();
      out = std::move(m);
      break;
    }
    case Kind::FrameFeatures: {
      FrameFeaturesMsg m;
      m.camera_id = r.str();
      m.sequence = r.u64();
      m.timestamp = r.i64();
      const auto persons = r.u16();
      for (int i = 0; i < persons; ++i) {
        WirePerson p;
        p.person_index = r.u16();
        const auto nk = r.u8();
        for (int k = 0; k < nk; ++k) {
          WireKeypoint kp;
          kp.part = read_part(r);
          kp.x = r.f32();
          kp.y = r.f32();
          kp.confidence = r.f32();
          p.keypoints.push_back(kp);
        }
        const auto nr = r.u8();
        for (int k = 0; k < nr; ++k) {
          WireRegion region;
          region.section = read_section(r);
          region.box = read_box16(r);
          const auto count = r.u32();
          const auto rle_len = r.u32();
          region.pixels = decode_rle(r.take(rle_len), count);
          p.regions.push_back(std::move(region));
        }
        m.persons.push_back(std::move(p));
      }
      out = std::move(m);
      break;
    }
    case Kind::MatchReportMsg:
      out = MatchReportMsg{read_report(r)};
      break;
    case Kind::Heartbeat: {
      Heartbeat m;
      m.camera_id = r.str();
      m.timestamp = r.i64();
      m.frames_seen = r.u64();
      m.frames_processed = r.u64();
      out = std::move(m);
      break;
    }
    case Kind::Ack: {
      Ack m;
      m.sequence = r.u64();
      m.status = r.u8();
      out = m;
      break;
    }
    default:
      throw Error(ErrorKind::UnknownKind, "unknown message kind");
  }
  if (!r.done()) throw Error(ErrorKind::MalformedPayload, "trailing bytes in payload");
  return out;
}

std::vector<std::uint8_t> encode(std::uint64_t sender_id, const Message& message) {
  return encode_envelope({kVersion, kind_of(message), sender_id, encode_payload(message)});
}

Decoded decode(std::span<const std::uint8_t> bytes) {
  auto env = decode_envelope(bytes);
  return {env.sender_id, decode_payload(env.kind, env.payload)};
}

std::size_t byte_size(const Message& message) { return kHeaderSize + encode_payload(message).size(); }

std::optional<std::vector<std::uint8_t>> read_envelope(net::Socket& socket, int timeout_ms) {
  std::vector<std::uint8_t> bytes(kHeaderSize);
  if (!socket.read_exact(bytes, timeout_ms)) return std::nullopt;
  auto header = decode_header(bytes);
  bytes.resize(kHeaderSize + header.payload_length);
  if (header.payload_length > 0 &&
      !socket.read_exact(std::span(bytes).subspan(kHeaderSize), timeout_ms)) {
    throw Error(ErrorKind::TruncatedPayload, "stream closed inside payload");
  }
  return bytes;
}

bool should_transmit(const PoseResult& pose) { return !pose.skeletons.empty(); }

std::uint64_t sender_id_for(std::string_view camera_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : camera_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

FrameFeaturesMsg make_features(const FrameRef& frame, const PoseResult& native_pose,
                               const std::vector<regions::RegionSet>& region_sets) {
  FrameFeaturesMsg msg;
  msg.camera_id = frame.camera_id;
  msg.sequence = frame.sequence;
  msg.timestamp = frame.timestamp;
  for (const auto& skeleton : native_pose.skeletons) {
    WirePerson person;
    person.person_index = static_cast<std::uint16_t>(skeleton.person_index);
    for (const auto& [part, kp] : skeleton.keypoints) {
      person.keypoints.push_back({part, static_cast<float>(kp.position.x),
                                  static_cast<float>(kp.position.y),
                                  static_cast<float>(kp.confidence)});
    }
    auto set = std::find_if(region_sets.begin(), region_sets.end(), [&](const regions::RegionSet& s) {
      return s.person.person_index == skeleton.person_index;
    });
    if (set != region_sets.end()) {
      for (const auto& [section, region] : set->regions) {
        person.regions.push_back({section, region.bounding_box, region.pixels});
      }
    }
    msg.persons.push_back(std::move(person));
  }
  return msg;
}

regions::PixelRegion to_pixel_region(const WireRegion& region, const PersonRef& source) {
  regions::PixelRegion out;
  out.section = region.section;
  out.pixels = region.pixels;
  out.source = source;
  out.bounding_box = region.box;
  return out;
}

std::size_t raw_rgb_bytes(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
}

double raw_reference_bytes(int width, int height) {
  return static_cast<double>(raw_rgb_bytes(width, height)) *
         (kRawReferenceBytes1080p / static_cast<double>(raw_rgb_bytes(1920, 1080)));
}

}  // namespace ivise::wire

#include "ivise/pose_provider.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "ivise/error.hpp"
#include "ivise/image.hpp"

namespace ivise::pose {

namespace {

bool parse_double(std::string_view text, double& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

Skeleton& person_slot(PoseResult& result, int person_index) {
  auto it = std::find_if(result.skeletons.begin(), result.skeletons.end(),
                         [&](const Skeleton& s) { return s.person_index == person_index; });
  if (it != result.skeletons.end()) return *it;
  auto pos = std::lower_bound(
      result.skeletons.begin(), result.skeletons.end(), person_index,
      [](const Skeleton& s, int idx) { return s.person_index < idx; });
  return *result.skeletons.insert(pos, Skeleton{person_index, {}});
}

}  // namespace

void check_pose_in_bounds(const PoseResult& pose, int width, int height) {
  std::set<int> seen;
  for (const auto& skeleton : pose.skeletons) {
    if (!seen.insert(skeleton.person_index).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate person index",
                  std::to_string(skeleton.person_index));
    }
    for (const auto& [part, kp] : skeleton.keypoints) {
      const auto& p = kp.position;
      if (!(p.x >= 0.0 && p.y >= 0.0 && p.x < width && p.y < height)) {
        throw Error(ErrorKind::InvalidArgument, "keypoint outside frame bounds",
                    std::string(to_string(part)));
      }
    }
  }
}

void Fixture::add(PoseResult result) {
  Key key{result.camera_id, result.sequence};
  entries_[std::move(key)] = std::move(result);
}

const PoseResult* Fixture::find(const std::string& camera_id, std::uint64_t sequence) const {
  auto it = entries_.find(Key{camera_id, sequence});
  return it == entries_.end() ? nullptr : &it->second;
}

Fixture parse_fixture(std::string_view text, FixtureBounds bounds) {
  const auto lines = split_lines(text);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw Error(ErrorKind::ParseError, "empty fixture");
  if (trim(lines[first]) != "ivise-pose v1") {
    throw Error(ErrorKind::ParseError,
                "line " + std::to_string(first + 1) + ": expected header 'ivise-pose v1'",
                "header");
  }

  Fixture fixture;
  std::map<Fixture::Key, PoseResult> pending;
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    const auto body = trim(lines[i]);
    if (body.empty()) continue;
    const auto where = "line " + std::to_string(i + 1) + ": ";
    const auto fields = split_whitespace(body);
    if (fields.size() != 7) {
      throw Error(ErrorKind::ParseError, where + "expected 7 fields, got " +
                                             std::to_string(fields.size()));
    }
    std::uint64_t sequence = 0;
    int person = 0;
    double x = 0, y = 0, conf = 0;
    if (!parse_int(fields[1], sequence)) {
      throw Error(ErrorKind::ParseError, where + "bad sequence", "sequence");
    }
    if (!parse_int(fields[2], person) || person < 0) {
      throw Error(ErrorKind::ParseError, where + "bad person_index", "person_index");
    }
    const auto part = parse_part(fields[3]);
    if (!part) {
      throw Error(ErrorKind::ParseError, where + "unknown part_kind '" + std::string(fields[3]) + "'",
                  "part_kind");
    }
    if (!parse_double(fields[4], x)) throw Error(ErrorKind::ParseError, where + "bad x", "x");
    if (!parse_double(fields[5], y)) throw Error(ErrorKind::ParseError, where + "bad y", "y");
    if (!parse_double(fields[6], conf) || conf < 0.0 || conf > 1.0) {
      throw Error(ErrorKind::ParseError, where + "confidence must be in [0,1]", "confidence");
    }
    if (!(x >= 0.0 && y >= 0.0 && x < bounds.width && y < bounds.height)) {
      throw Error(ErrorKind::ParseError, where + "keypoint outside frame bounds", "x/y");
    }
    Fixture::Key key{std::string(fields[0]), sequence};
    auto& result = pending[key];
    result.camera_id = key.first;
    result.sequence = sequence;
    auto& skeleton = person_slot(result, person);
    if (skeleton.has(*part)) {
      throw Error(ErrorKind::ParseError, where + "duplicate keypoint for person", "part_kind");
    }
    skeleton.set(*part, {x, y}, conf);
  }
  for (auto& [key, result] : pending) fixture.add(std::move(result));
  return fixture;
}

Fixture load_fixture(const std::filesystem::path& path, FixtureBounds bounds) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open fixture " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_fixture(ss.str(), bounds);
}

std::string format_fixture(const Fixture& fixture) {
  std::string out = "ivise-pose v1\n";
  for (const auto& [key, result] : fixture.entries()) {
    auto skeletons = result.skeletons;
    std::sort(skeletons.begin(), skeletons.end(),
              [](const Skeleton& a, const Skeleton& b) { return a.person_index < b.person_index; });
    for (const auto& skeleton : skeletons) {
      for (const auto& [part, kp] : skeleton.keypoints) {
        out += key.first;
        out += ' ';
        out += std::to_string(key.second);
        out += ' ';
        out += std::to_string(skeleton.person_index);
        out += ' ';
        out += to_string(part);
        out += ' ';
        out += format_decimal(kp.position.x);
        out += ' ';
        out += format_decimal(kp.position.y);
        out += ' ';
        out += format_decimal(kp.confidence);
        out += '\n';
      }
    }
  }
  return out;
}

void save_fixture(const Fixture& fixture, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write fixture " + path.string());
  out << format_fixture(fixture);
}

PoseResult FixtureProvider::infer(const FrameRef& frame) {
  const auto* hit = fixture_.find(frame.camera_id, frame.sequence);
  if (hit == nullptr) {
    throw Error(ErrorKind::FixtureMiss,
                "no recorded pose for " + frame.camera_id + "#" + std::to_string(frame.sequence));
  }
  return *hit;
}

PoseResult SyntheticProvider::infer(const FrameRef& frame) {
  const auto start = std::chrono::steady_clock::now();
  auto truth = source_(frame.camera_id, frame.sequence);
  PoseResult result;
  result.camera_id = frame.camera_id;
  result.sequence = frame.sequence;
  const double sx = truth.native_width > 0 ? double(frame.width) / truth.native_width : 1.0;
  const double sy = truth.native_height > 0 ? double(frame.height) / truth.native_height : 1.0;
  for (auto& skeleton : truth.skeletons) {
    for (auto& [part, kp] : skeleton.keypoints) {
      kp.position = {std::min(kp.position.x * sx, std::nextafter(double(frame.width), 0.0)),
                     std::min(kp.position.y * sy, std::nextafter(double(frame.height), 0.0))};
    }
    result.skeletons.push_back(std::move(skeleton));
  }
  result.inference_millis =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

namespace {

struct KeyValues {
  std::map<std::string_view, std::string_view> values;

  std::string_view need(std::string_view key, const std::string& where) const {
    auto it = values.find(key);
    if (it == values.end()) {
      throw Error(ErrorKind::MalformedResponse, where + "missing key '" + std::string(key) + "'",
                  std::string(key));
    }
    return it->second;
  }
  double number(std::string_view key, const std::string& where) const {
    double v = 0;
    if (!parse_double(need(key, where), v)) {
      throw Error(ErrorKind::MalformedResponse, where + "bad number for '" + std::string(key) + "'",
                  std::string(key));
    }
    return v;
  }
  bool has(std::string_view key) const { return values.contains(key); }
};

KeyValues parse_key_values(std::span<const std::string_view> tokens, const std::string& where) {
  KeyValues kv;
  for (auto token : tokens) {
    auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw Error(ErrorKind::MalformedResponse, where + "expected key=value",
                  std::string(token));
    }
    kv.values[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return kv;
}

std::pair<double, double> number_pair(std::string_view text, const std::string& where) {
  auto comma = text.find(',');
  double a = 0, b = 0;
  if (comma == std::string_view::npos || !parse_double(text.substr(0, comma), a) ||
      !parse_double(text.substr(comma + 1), b)) {
    throw Error(ErrorKind::MalformedResponse, where + "expected a,b pair", std::string(text));
  }
  return {a, b};
}

}  // namespace

PoseResult parse_remote_response(std::string_view body, const FrameRef& frame,
                                 const RemoteOptions& options) {
  const auto lines = split_lines(body);
  std::size_t i = 0;
  while (i < lines.size() && trim(lines[i]).empty()) ++i;
  if (i == lines.size() || trim(lines[i]) != "ivise-pose-response v1") {
    throw Error(ErrorKind::MalformedResponse, "missing 'ivise-pose-response v1' header");
  }

  PoseResult result;
  result.camera_id = frame.camera_id;
  result.sequence = frame.sequence;
  std::vector<CandidateKeypoint> loose;
  std::vector<geometry::AffinityField> fields;
  bool grouped = false;

  for (++i; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto where = "response line " + std::to_string(i + 1) + ": ";
    const auto tokens = split_whitespace(line);
    const auto kv = parse_key_values(std::span(tokens).subspan(1), where);
    if (tokens[0] == "inference_ms" || tokens[0].starts_with("inference_ms=")) {
      const auto all = parse_key_values(tokens, where);
      result.inference_millis = all.number("inference_ms", where);
    } else if (tokens[0] == "kp") {
      const auto part = parse_part(kv.need("part", where));
      if (!part) throw Error(ErrorKind::MalformedResponse, where + "unknown part", "part");
      CandidateKeypoint kp{*part, {kv.number("x", where), kv.number("y", where)},
                           kv.number("conf", where)};
      if (kp.confidence < 0.0 || kp.confidence > 1.0) {
        throw Error(ErrorKind::MalformedResponse, where + "confidence outside [0,1]", "conf");
      }
      if (!frame.contains(kp.position)) {
        throw Error(ErrorKind::MalformedResponse, where + "keypoint outside frame", "x/y");
      }
      if (kv.has("person")) {
        grouped = true;
        int person = 0;
        if (!parse_int(kv.need("person", where), person) || person < 0) {
          throw Error(ErrorKind::MalformedResponse, where + "bad person index", "person");
        }
        person_slot(result, person).keypoints[kp.kind] = kp;
      } else {
        loose.push_back(kp);
      }
    } else if (tokens[0] == "paf") {
      const auto a = parse_part(kv.need("part_a", where));
      const auto b = parse_part(kv.need("part_b", where));
      if (!a || !b) throw Error(ErrorKind::MalformedResponse, where + "unknown part", "part");
      const auto [ox, oy] = number_pair(kv.need("origin", where), where);
      const auto [cols, rows] = number_pair(kv.need("size", where), where);
      geometry::AffinityField field(*a, *b, int(ox), int(oy), int(cols), int(rows));
      const auto data = kv.need("data", where);
      std::vector<double> values;
      std::size_t start = 0;
      while (start < data.size()) {
        auto comma = data.find(',', start);
        if (comma == std::string_view::npos) comma = data.size();
        double v = 0;
        if (!parse_double(data.substr(start, comma - start), v)) {
          throw Error(ErrorKind::MalformedResponse, where + "bad field value", "data");
        }
        values.push_back(v);
        start = comma + 1;
      }
      if (values.size() != field.samples().size() * 2) {
        throw Error(ErrorKind::MalformedResponse, where + "field data length mismatch", "data");
      }
      for (int y = 0; y < field.rows(); ++y) {
        for (int x = 0; x < field.cols(); ++x) {
          const auto k = (static_cast<std::size_t>(y) * field.cols() + x) * 2;
          field.set(field.origin_x() + x, field.origin_y() + y, {values[k], values[k + 1]});
        }
      }
      fields.push_back(std::move(field));
    } else {
      throw Error(ErrorKind::MalformedResponse, where + "unknown record", std::string(tokens[0]));
    }
  }

  if (grouped && !loose.empty()) {
    throw Error(ErrorKind::MalformedResponse, "response mixes grouped and ungrouped keypoints");
  }
  if (!grouped) {
    result.skeletons =
        geometry::group_keypoints(loose, fields, options.limb_catalog, options.grouping);
  }
  return result;
}

std::string format_remote_response(const std::vector<Skeleton>& skeletons,
                                   double inference_millis) {
  std::string out = "ivise-pose-response v1\ninference_ms=" + format_decimal(inference_millis) + "\n";
  for (const auto& s : skeletons) {
    for (const auto& [part, kp] : s.keypoints) {
      out += "kp person=" + std::to_string(s.person_index) + " part=" + std::string(to_string(part)) +
             " x=" + format_decimal(kp.position.x) + " y=" + format_decimal(kp.position.y) +
             " conf=" + format_decimal(kp.confidence) + "\n";
    }
  }
  return out;
}

RemoteProvider::RemoteProvider(RemoteOptions options) : options_(std::move(options)) {
  const std::string_view url = options_.url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorKind::InvalidArgument, "pose.remote_url must be http://host:port/path",
                options_.url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = std::string(url.substr(0, path_start));
  path_ = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
}

PoseResult RemoteProvider::infer(const FrameRef& frame) {
  if (!frame.has_pixels()) throw Error(ErrorKind::EmptyFrame, "remote inference needs pixels");
  const auto start = std::chrono::steady_clock::now();
  const auto timeout = std::chrono::milliseconds(options_.timeout_ms);

  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  // Watchdog: stop() aborts the in-flight request once the deadline passes,
  // which bounds the total even when a server drips bytes.
  std::mutex mu;
  std::condition_variable cv;
  bool done = false;
  bool fired = false;
  std::thread watchdog([&] {
    std::unique_lock lock(mu);
    if (!cv.wait_for(lock, timeout, [&] { return done; })) {
      fired = true;
      client.stop();
    }
  });

  const auto ppm = encode_ppm(frame.width, frame.height, frame.pixels);
  auto response = client.Post(path_, reinterpret_cast<const char*>(ppm.data()), ppm.size(),
                              "image/x-portable-pixmap");
  {
    std::lock_guard lock(mu);
    done = true;
  }
  cv.notify_all();
  watchdog.join();

  if (fired || !response) {
    throw Error(ErrorKind::RemoteUnavailable,
                fired ? "pose endpoint exceeded timeout"
                      : "pose endpoint unreachable: " + httplib::to_string(response.error()),
                options_.url);
  }
  if (response->status != 200) {
    throw Error(ErrorKind::RemoteUnavailable,
                "pose endpoint returned HTTP " + std::to_string(response->status), options_.url);
  }
  auto result = parse_remote_response(response->body, frame, options_);
  if (result.inference_millis == 0.0) {
    result.inference_millis =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return result;
}

}  // namespace ivise::pose

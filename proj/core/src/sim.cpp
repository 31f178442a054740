#include "ivise/sim.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <thread>
#include <tuple>

#include "ivise/edge.hpp"
#include "ivise/error.hpp"
#include "ivise/fog.hpp"
#include "ivise/regions.hpp"
#include "ivise/wire.hpp"

namespace ivise::sim {

namespace {

struct TemplatePoint {
  PartKind part;
  double x;
  double y;
};

// Neck-relative offsets at scale 1.
constexpr TemplatePoint kStanding[] = {
    {PartKind::Nose, 0, -30},        {PartKind::Neck, 0, 0},
    {PartKind::RightShoulder, -40, 5}, {PartKind::RightElbow, -50, 60},
    {PartKind::RightWrist, -55, 110}, {PartKind::LeftShoulder, 40, 5},
    {PartKind::LeftElbow, 50, 60},    {PartKind::LeftWrist, 55, 110},
    {PartKind::RightHip, -25, 150},   {PartKind::RightKnee, -27, 240},
    {PartKind::RightAnkle, -28, 330}, {PartKind::LeftHip, 25, 150},
    {PartKind::LeftKnee, 27, 240},    {PartKind::LeftAnkle, 28, 330},
    {PartKind::RightEye, -8, -36},    {PartKind::LeftEye, 8, -36},
    {PartKind::RightEar, -20, -30},   {PartKind::LeftEar, 20, -30},
};

constexpr double kLegHalfWidth = 9.0;
constexpr double kHairTop = -72.0;
constexpr double kHairHalfWidth = 22.0;

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

Rgb anchor_of(const color::ColorDictionary& dict, const std::string& name) {
  for (const auto& e : dict.entries()) {
    if (e.name == name) return e.anchor;
  }
  throw Error(ErrorKind::UnknownColor, "color is not a palette anchor", name);
}

double segment_distance(Point2D p, Point2D a, Point2D b) {
  const Point2D ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + ab * t));
}

template <typename Pred>
void paint(FrameRef& frame, BoundingBox box, Rgb c, Pred inside) {
  box.min_x = std::max(box.min_x, 0);
  box.min_y = std::max(box.min_y, 0);
  box.max_x = std::min(box.max_x, frame.width - 1);
  box.max_y = std::min(box.max_y, frame.height - 1);
  for (int y = box.min_y; y <= box.max_y; ++y) {
    for (int x = box.min_x; x <= box.max_x; ++x) {
      if (inside(Point2D{double(x), double(y)})) frame.set({x, y}, c);
    }
  }
}

BoundingBox box_around(std::initializer_list<Point2D> pts, double pad) {
  BoundingBox b;
  for (auto p : pts) {
    b.extend({static_cast<int>(std::floor(p.x - pad)), static_cast<int>(std::floor(p.y - pad))});
    b.extend({static_cast<int>(std::ceil(p.x + pad)), static_cast<int>(std::ceil(p.y + pad))});
  }
  return b;
}

void draw_person(FrameRef& frame, const PersonSpec& person, const Skeleton& sk,
                 const color::PaletteSet& palettes) {
  const double s = person.scale;
  auto kp = [&](PartKind p) { return sk.find(p)->position; };
  const Rgb torso = anchor_of(palettes.clothing, person.torso_color);
  const Rgb legs = anchor_of(palettes.clothing, person.leg_color);
  const Rgb hair = anchor_of(palettes.hair, person.hair_color);
  const Rgb face = anchor_of(palettes.skin, person.face_color);

  for (auto [hip, knee, ankle] : {std::tuple{PartKind::LeftHip, PartKind::LeftKnee, PartKind::LeftAnkle},
                                  std::tuple{PartKind::RightHip, PartKind::RightKnee, PartKind::RightAnkle}}) {
    const auto h = kp(hip), k = kp(knee), a = kp(ankle);
    const double w = kLegHalfWidth * s;
    paint(frame, box_around({h, k, a}, w + 1), legs, [&](Point2D p) {
      return segment_distance(p, h, k) <= w || segment_distance(p, k, a) <= w;
    });
  }

  const auto neck = kp(PartKind::Neck);
  const auto lh = kp(PartKind::LeftHip), rh = kp(PartKind::RightHip);
  const auto ls = kp(PartKind::LeftShoulder), rs = kp(PartKind::RightShoulder);
  paint(frame, box_around({neck, lh, rh, ls, rs}, 1), torso, [&](Point2D p) {
    return regions::inside_triangle(p, lh, rh, neck) || regions::inside_triangle(p, ls, rs, rh) ||
           regions::inside_triangle(p, ls, rh, lh);
  });

  const auto le = kp(PartKind::LeftEar), re = kp(PartKind::RightEar);
  const double ear_y = (le.y + re.y) / 2;
  const double mid_x = (le.x + re.x) / 2;
  const Point2D top_left{mid_x - kHairHalfWidth * s, neck.y + kHairTop * s};
  const Point2D bottom_right{mid_x + kHairHalfWidth * s, ear_y};
  paint(frame, box_around({top_left, bottom_right}, 1), hair, [&](Point2D p) {
    return p.x >= top_left.x && p.x <= bottom_right.x && p.y >= top_left.y && p.y < ear_y;
  });
  paint(frame, box_around({le, re, neck}, 1), face,
        [&](Point2D p) { return regions::inside_triangle(p, le, re, neck); });
}

}  // namespace

Skeleton standing_skeleton(const PersonSpec& person, int person_index) {
  Skeleton sk;
  sk.person_index = person_index;
  for (const auto& t : kStanding) {
    sk.set(t.part, {person.position.x + t.x * person.scale, person.position.y + t.y * person.scale}, 1.0);
  }
  return sk;
}

BoundingBox person_bounds(const PersonSpec& person) {
  const double s = person.scale;
  const auto& p = person.position;
  BoundingBox b;
  b.min_x = static_cast<int>(std::floor(p.x - 56 * s - 2));
  b.max_x = static_cast<int>(std::ceil(p.x + 56 * s + 2));
  b.min_y = static_cast<int>(std::floor(p.y + kHairTop * s - 2));
  b.max_y = static_cast<int>(std::ceil(p.y + (330 + kLegHalfWidth) * s + 2));
  return b;
}

void validate_scene(const SceneSpec& spec, const color::PaletteSet& palettes) {
  if (spec.width <= 0 || spec.height <= 0) throw Error(ErrorKind::InvalidArgument, "scene needs a positive frame size");
  if (spec.noise_level < 0 || spec.noise_level > 255) {
    throw Error(ErrorKind::InvalidArgument, "noise level must be in [0, 255]");
  }
  std::vector<BoundingBox> boxes;
  for (std::size_t i = 0; i < spec.persons.size(); ++i) {
    const auto& p = spec.persons[i];
    if (!(p.scale > 0.2)) throw Error(ErrorKind::InvalidArgument, "person scale too small");
    anchor_of(palettes.clothing, p.torso_color);
    anchor_of(palettes.clothing, p.leg_color);
    anchor_of(palettes.hair, p.hair_color);
    anchor_of(palettes.skin, p.face_color);
    const auto b = person_bounds(p);
    if (b.min_x < 0 || b.min_y < 0 || b.max_x >= spec.width || b.max_y >= spec.height) {
      throw Error(ErrorKind::InvalidArgument, "person " + std::to_string(i) + " leaves the frame");
    }
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      const auto& o = boxes[j];
      if (b.min_x <= o.max_x && o.min_x <= b.max_x && b.min_y <= o.max_y && o.min_y <= b.max_y) {
        throw Error(ErrorKind::OverlapError,
                    "persons " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
      }
    }
    boxes.push_back(b);
  }
}

std::vector<Skeleton> scene_skeletons(const SceneSpec& spec) {
  std::vector<Skeleton> out;
  for (std::size_t i = 0; i < spec.persons.size(); ++i) {
    out.push_back(standing_skeleton(spec.persons[i], static_cast<int>(i)));
  }
  return out;
}

TimestampMs frame_timestamp(const SceneSpec& spec, std::uint64_t sequence) {
  return spec.base_timestamp + static_cast<TimestampMs>(sequence) * spec.frame_interval_ms;
}

RenderedScene render_scene(const SceneSpec& spec, const std::string& camera_id,
                           std::uint64_t sequence, const color::PaletteSet& palettes) {
  validate_scene(spec, palettes);
  RenderedScene out;
  auto& f = out.frame;
  f.camera_id = camera_id;
  f.sequence = sequence;
  f.timestamp = frame_timestamp(spec, sequence);
  f.width = spec.width;
  f.height = spec.height;
  f.pixels.resize(static_cast<std::size_t>(spec.width) * spec.height * 3);
  for (std::size_t i = 0; i < f.pixels.size(); i += 3) {
    f.pixels[i] = spec.background.r;
    f.pixels[i + 1] = spec.background.g;
    f.pixels[i + 2] = spec.background.b;
  }

  out.truth.camera_id = camera_id;
  out.truth.sequence = sequence;
  out.truth.skeletons = scene_skeletons(spec);
  for (std::size_t i = 0; i < spec.persons.size(); ++i) {
    const auto& p = spec.persons[i];
    draw_person(f, p, out.truth.skeletons[i], palettes);

    query::PersonDescription d;
    d.source = {camera_id, sequence, static_cast<int>(i)};
    d.timestamp = f.timestamp;
    d.sections[Section::Torso] = {{p.torso_color, 1}};
    d.sections[Section::LeftLeg] = {{p.leg_color, 1}};
    d.sections[Section::RightLeg] = {{p.leg_color, 1}};
    d.sections[Section::Face] = {{p.face_color, 1}};
    d.sections[Section::Hair] = {{p.hair_color, 1}};
    out.expected.push_back(std::move(d));
  }

  if (spec.noise_level > 0) {
    std::uint64_t seed = mix(spec.seed, wire::sender_id_for(camera_id));
    seed = mix(seed, sequence);
    std::mt19937_64 rng(seed);
    const int span = 2 * spec.noise_level + 1;
    for (auto& v : f.pixels) {
      const int jitter = static_cast<int>(rng() % static_cast<std::uint64_t>(span)) - spec.noise_level;
      v = static_cast<std::uint8_t>(std::clamp(int(v) + jitter, 0, 255));
    }
  }
  return out;
}

SceneSpec random_scene(std::uint64_t seed, int persons, int width, int height, int noise_level,
                       const color::PaletteSet& palettes) {
  if (persons < 0) throw Error(ErrorKind::InvalidArgument, "person count must be >= 0");
  SceneSpec spec;
  spec.seed = seed;
  spec.width = width;
  spec.height = height;
  spec.noise_level = noise_level;
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& names) { return names[rng() % names.size()]; };
  auto anchors = [](const color::ColorDictionary& d) {
    std::vector<std::string> names;
    for (const auto& e : d.entries()) names.push_back(e.name);
    return names;
  };
  const auto clothing = anchors(palettes.clothing);
  const auto hair = anchors(palettes.hair);
  const auto skin = anchors(palettes.skin);

  PersonSpec probe;
  const auto pb = person_bounds(probe);
  const int pw = pb.max_x - pb.min_x + 1;
  const int ph = pb.max_y - pb.min_y + 1;
  if (persons > 0 && (width / persons < pw + 2 || height < ph + 2)) {
    throw Error(ErrorKind::InvalidArgument, "frame too small for " + std::to_string(persons) + " persons");
  }
  for (int i = 0; i < persons; ++i) {
    const int slot = width / persons;
    // Neck positions sit on pixel centres plus one half so edges never pass
    // exactly through a pixel centre.
    const int x_lo = i * slot - pb.min_x + 1;
    const int x_hi = (i + 1) * slot - 2 - pb.max_x;
    const int y_lo = -pb.min_y + 1;
    const int y_hi = height - 2 - pb.max_y;
    PersonSpec p;
    p.position.x = x_lo + double(rng() % static_cast<std::uint64_t>(std::max(1, x_hi - x_lo))) + 0.5;
    p.position.y = y_lo + double(rng() % static_cast<std::uint64_t>(std::max(1, y_hi - y_lo))) + 0.5;
    p.torso_color = pick(clothing);
    p.leg_color = pick(clothing);
    p.hair_color = pick(hair);
    p.face_color = pick(skin);
    spec.persons.push_back(std::move(p));
  }
  validate_scene(spec, palettes);
  return spec;
}

SceneSpec scene_from_config(const Config& config) {
  SceneSpec spec;
  spec.seed = static_cast<std::uint64_t>(config.get_int("scene.seed", 1));
  spec.width = static_cast<int>(config.get_int("scene.width", spec.width));
  spec.height = static_cast<int>(config.get_int("scene.height", spec.height));
  spec.noise_level = static_cast<int>(config.get_int("scene.noise", 0));
  const auto persons = config.get("scene.persons");
  if (!persons) {
    PersonSpec p;
    p.position = {std::floor(spec.width / 2.0) + 0.5, std::floor(spec.height / 2.0 - 130) + 0.5};
    spec.persons.push_back(p);
    return spec;
  }
  std::string_view rest = *persons;
  while (!rest.empty()) {
    const auto semi = rest.find(';');
    const auto entry = trim(rest.substr(0, semi));
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    if (entry.empty()) continue;
    std::vector<std::string> f;
    std::string_view e = entry;
    while (true) {
      const auto comma = e.find(',');
      f.emplace_back(trim(e.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      e = e.substr(comma + 1);
    }
    if (f.size() != 7) {
      throw Error(ErrorKind::ParseError, "scene.persons entry needs 7 fields", std::string(entry));
    }
    PersonSpec p;
    try {
      p.position = {std::stod(f[0]), std::stod(f[1])};
      p.scale = std::stod(f[2]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "bad number in scene.persons", std::string(entry));
    }
    p.torso_color = f[3];
    p.leg_color = f[4];
    p.hair_color = f[5];
    p.face_color = f[6];
    spec.persons.push_back(std::move(p));
  }
  return spec;
}

// ---------------------------------------------------------------------------

namespace {

// Unbounded FIFO between an in-process edge and its fog ingest worker; the
// harness must not lose messages or results stop being reproducible.
class IngestChannel final : public edge::FeatureSink {
 public:
  void send(std::vector<std::uint8_t> bytes) override {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(bytes));
    }
    cv_.notify_one();
  }
  std::optional<std::vector<std::uint8_t>> pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    auto b = std::move(queue_.front());
    queue_.pop_front();
    return b;
  }
  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::vector<std::uint8_t>> queue_;
  bool closed_ = false;
};

class AgentLink final : public fog::EdgeLink {
 public:
  explicit AgentLink(edge::EdgeAgent& agent) : agent_(agent) {}
  void send(std::vector<std::uint8_t> bytes) override {
    auto decoded = wire::decode(bytes);
    if (auto* d = std::get_if<wire::QueryDispatch>(&decoded.message)) agent_.handle_query_dispatch(*d);
  }

 private:
  edge::EdgeAgent& agent_;
};

using MatchKey = std::tuple<std::size_t, std::string, std::uint64_t, int>;

}  // namespace

TopologyRun run_topology_full(const TopologyOptions& options) {
  if (options.edges < 1 || options.frames < 0) {
    throw Error(ErrorKind::InvalidArgument, "topology needs at least one edge");
  }
  const auto n = static_cast<std::size_t>(options.edges);

  query::CameraRegistry registry;
  std::vector<std::string> cameras;
  std::vector<SceneSpec> scenes;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = "cam" + std::to_string(i + 1);
    cameras.push_back(id);
    registry.add({id, "127.0.0.1", 0, {40.0 + 0.01 * double(i), -74.0 - 0.01 * double(i)}});
    scenes.push_back(options.scene_for_edge
                         ? options.scene_for_edge(static_cast<int>(i))
                         : random_scene(options.seed + i, 1, 1920, 1080, 0, options.palettes));
    validate_scene(scenes.back(), options.palettes);
  }

  fog::FogOptions fog_options;
  fog_options.palettes = options.palettes;
  fog_options.index_log = options.index_log;
  fog::FogNode fog(registry, fog_options);

  std::vector<std::unique_ptr<IngestChannel>> channels;
  std::vector<std::unique_ptr<edge::EdgeAgent>> agents;
  for (std::size_t i = 0; i < n; ++i) {
    channels.push_back(std::make_unique<IngestChannel>());
    edge::EdgeConfig cfg;
    cfg.camera_id = cameras[i];
    cfg.drop_ratio = options.drop_ratio;
    const auto scene = scenes[i];
    auto provider = std::make_unique<pose::SyntheticProvider>([scene](const std::string&, std::uint64_t) {
      return pose::SyntheticProvider::Truth{scene.width, scene.height, scene_skeletons(scene)};
    });
    agents.push_back(std::make_unique<edge::EdgeAgent>(cfg, std::move(provider), *channels.back()));
    fog.attach_edge(cameras[i], std::make_shared<AgentLink>(*agents.back()), "in-process");
  }

  // Parse every query up front so a bad query fails before any thread starts.
  std::vector<query::Query> parsed;
  for (const auto& text : options.queries) parsed.push_back(query::parse_query(text, options.palettes));

  using Steady = std::chrono::steady_clock;
  std::mutex first_mutex;
  std::optional<Steady::time_point> first_report;
  fog.set_report_observer([&](const query::MatchReport&) {
    std::lock_guard lock(first_mutex);
    if (!first_report) first_report = Steady::now();
  });

  std::vector<std::jthread> workers;
  for (std::size_t i = 0; i < n; ++i) {
    workers.emplace_back([&fog, ch = channels[i].get()] {
      while (auto bytes = ch->pop()) {
        try {
          fog.ingest_bytes(*bytes);
        } catch (const Error& e) {
          spdlog::warn("sim: fog rejected message: {}", e.what());
        }
      }
    });
  }

  TopologyRun run;
  const auto submitted = Steady::now();
  for (const auto& text : options.queries) run.query_ids.push_back(fog.submit_query(text).query_id);

  std::vector<std::vector<FrameRow>> rows(n);
  std::vector<std::set<MatchKey>> expected(n);
  {
    std::vector<std::jthread> edges;
    for (std::size_t i = 0; i < n; ++i) {
      edges.emplace_back([&, i] {
        for (int seq = 0; seq < options.frames; ++seq) {
          auto scene = render_scene(scenes[i], cameras[i], static_cast<std::uint64_t>(seq), options.palettes);
          const auto outcome = agents[i]->on_frame(scene.frame);
          FrameRow row;
          row.camera_id = cameras[i];
          row.sequence = static_cast<std::uint64_t>(seq);
          row.processed = outcome.processed;
          row.persons = outcome.persons;
          row.preprocess_ms = outcome.times.preprocess_ms;
          row.infer_ms = outcome.times.infer_ms;
          row.extract_ms = outcome.times.extract_ms;
          row.encode_send_ms = outcome.times.encode_send_ms;
          row.raw_bytes = wire::raw_rgb_bytes(scene.frame.width, scene.frame.height);
          row.raw_reference_bytes = wire::raw_reference_bytes(scene.frame.width, scene.frame.height);
          row.sent_bytes = outcome.bytes_sent;
          if (outcome.processed && !outcome.error) {
            for (std::size_t q = 0; q < parsed.size(); ++q) {
              for (const auto& d : scene.expected) {
                if (query::match(parsed[q], d)) {
                  expected[i].insert({q, cameras[i], row.sequence, d.source.person_index});
                  ++row.expected_matches;
                }
              }
            }
          }
          rows[i].push_back(std::move(row));
        }
      });
    }
  }
  for (auto& ch : channels) ch->close();
  workers.clear();

  auto& m = run.metrics;
  std::set<MatchKey> reported;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> per_frame;
  for (std::size_t q = 0; q < run.query_ids.size(); ++q) {
    for (auto& r : fog.session_reports(run.query_ids[q])) {
      reported.insert({q, r.camera_id, r.sequence, r.person_index});
      ++per_frame[{r.camera_id, r.sequence}];
      m.reports.push_back(std::move(r));
    }
  }
  std::set<MatchKey> all_expected;
  for (const auto& e : expected) all_expected.insert(e.begin(), e.end());

  double ratio_sum = 0.0;
  std::size_t ratio_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& row : rows[i]) {
      auto it = per_frame.find({row.camera_id, row.sequence});
      row.matches = it == per_frame.end() ? 0 : it->second;
      m.bytes_per_edge[row.camera_id] += row.sent_bytes;
      if (row.processed) {
        ratio_sum += double(row.sent_bytes) / row.raw_reference_bytes;
        ++ratio_n;
      }
      m.rows.push_back(std::move(row));
    }
  }
  for (const auto& k : reported) m.true_positives += all_expected.count(k);
  m.expected = all_expected.size();
  m.precision = reported.empty() ? 1.0 : double(m.true_positives) / double(reported.size());
  m.recall = all_expected.empty() ? 1.0 : double(m.true_positives) / double(all_expected.size());
  m.mean_reduction_ratio = ratio_n == 0 ? 0.0 : ratio_sum / double(ratio_n);
  if (first_report) {
    m.first_report_ms = std::chrono::duration<double, std::milli>(*first_report - submitted).count();
  }

  for (const auto& text : options.queries) run.offline.push_back(fog.offline_query(text));
  return run;
}

RunMetrics run_topology(const TopologyOptions& options) { return run_topology_full(options).metrics; }

std::filesystem::path emit_metrics(const RunMetrics& metrics, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / "frames.csv";
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write metrics file", path.string());
  auto ratio = [](double sent, double raw) { return raw > 0 ? sent / raw : 0.0; };
  out << kMetricsHeader << "\n";
  std::size_t processed = 0, persons = 0, raw = 0, sent = 0, matches = 0, expected = 0;
  double raw_ref = 0.0;
  std::array<double, 4> stage{};
  for (const auto& r : metrics.rows) {
    out << r.camera_id << ',' << r.sequence << ',' << (r.processed ? 1 : 0) << ',' << r.persons << ','
        << format_decimal(r.preprocess_ms) << ',' << format_decimal(r.infer_ms) << ','
        << format_decimal(r.extract_ms) << ',' << format_decimal(r.encode_send_ms) << ','
        << r.raw_bytes << ',' << format_decimal(r.raw_reference_bytes) << ',' << r.sent_bytes << ','
        << format_decimal(r.processed ? ratio(double(r.sent_bytes), r.raw_reference_bytes) : 0.0) << ','
        << r.matches << ',' << r.expected_matches << "\n";
    processed += r.processed ? 1 : 0;
    persons += r.persons;
    raw += r.raw_bytes;
    raw_ref += r.raw_reference_bytes;
    sent += r.sent_bytes;
    matches += r.matches;
    expected += r.expected_matches;
    if (r.processed) {
      stage[0] += r.preprocess_ms;
      stage[1] += r.infer_ms;
      stage[2] += r.extract_ms;
      stage[3] += r.encode_send_ms;
    }
  }
  if (!metrics.rows.empty()) {
    // Summary: counts and totals, mean stage latencies over processed frames,
    // and the mean reduction ratio.
    auto mean = [&](double v) { return processed ? v / double(processed) : 0.0; };
    out << "summary," << metrics.rows.size() << ',' << processed << ',' << persons << ','
        << format_decimal(mean(stage[0])) << ',' << format_decimal(mean(stage[1])) << ','
        << format_decimal(mean(stage[2])) << ',' << format_decimal(mean(stage[3])) << ',' << raw << ','
        << format_decimal(raw_ref) << ',' << sent << ',' << format_decimal(metrics.mean_reduction_ratio)
        << ',' << matches << ',' << expected << "\n";
  }
  if (!out) throw Error(ErrorKind::IoError, "failed writing metrics file", path.string());

  std::ofstream summary(dir / "summary.txt");
  summary << "precision " << format_decimal(metrics.precision) << "\n"
          << "recall " << format_decimal(metrics.recall) << "\n"
          << "reports " << metrics.reports.size() << "\n"
          << "true_positives " << metrics.true_positives << "\n"
          << "expected " << metrics.expected << "\n"
          << "mean_reduction_ratio " << format_decimal(metrics.mean_reduction_ratio) << "\n"
          << "first_report_ms " << format_decimal(metrics.first_report_ms) << "\n";
  for (const auto& [cam, bytes] : metrics.bytes_per_edge) summary << "bytes_sent." << cam << " " << bytes << "\n";
  return path;
}

}  // namespace ivise::sim

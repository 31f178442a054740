#include "ivise/edge.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <sstream>
#include <thread>

#include "ivise/error.hpp"
#include "ivise/image.hpp"
#include "ivise/net.hpp"
#include "ivise/regions.hpp"
#include "ivise/sim.hpp"

namespace ivise::edge {

namespace {

using SteadyClock = std::chrono::steady_clock;

double elapsed_ms(SteadyClock::time_point since) {
  return std::chrono::duration<double, std::milli>(SteadyClock::now() - since).count();
}

}  // namespace

EdgeConfig EdgeConfig::from_config(const Config& config) {
  EdgeConfig c;
  c.camera_id = config.get_or("edge.camera_id", "");
  c.source = config.get_or("edge.source", c.source);
  c.drop_ratio = config.get_double("edge.drop_ratio", c.drop_ratio);
  c.fog_address = config.get_or("fog.address", c.fog_address);
  c.pose_backend = config.get_or("pose.backend", c.pose_backend);
  c.fixture_path = config.get_or("pose.fixture", "");
  c.remote_url = config.get_or("pose.remote_url", "");
  c.remote_timeout_ms = static_cast<int>(config.get_int("pose.remote_timeout_ms", c.remote_timeout_ms));
  c.status_addr = config.get_or("edge.status_addr", "");
  c.fps = config.get_double("edge.fps", c.fps);
  c.max_frames = config.get_int("edge.max_frames", c.max_frames);
  c.heartbeat_interval_ms =
      static_cast<int>(config.get_int("edge.heartbeat_interval_ms", c.heartbeat_interval_ms));
  c.validate();
  return c;
}

void EdgeConfig::validate() const {
  if (camera_id.empty()) throw Error(ErrorKind::InvalidArgument, "edge.camera_id is required");
  if (!(drop_ratio >= 0.0 && drop_ratio < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "drop_ratio must be in [0, 1)", format_decimal(drop_ratio));
  }
  if (pose_backend != "fixture" && pose_backend != "synthetic" && pose_backend != "remote") {
    throw Error(ErrorKind::InvalidArgument, "unknown pose backend", pose_backend);
  }
  if (heartbeat_interval_ms <= 0) throw Error(ErrorKind::InvalidArgument, "heartbeat interval must be positive");
}

DropPolicy::DropPolicy(double drop_ratio) : drop_ratio_(drop_ratio) {
  if (!(drop_ratio >= 0.0 && drop_ratio < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "drop_ratio must be in [0, 1)", format_decimal(drop_ratio));
  }
}

bool DropPolicy::process(std::uint64_t frame_index) const {
  const double keep = 1.0 - drop_ratio_;
  const auto i = static_cast<double>(frame_index);
  return std::floor(i * keep) != std::floor((i - 1.0) * keep);
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Preprocess: return "preprocess";
    case Stage::Infer: return "infer";
    case Stage::Extract: return "extract";
    case Stage::EncodeSend: return "encode_send";
  }
  return "?";
}

void LatencyHistogram::record(double millis) {
  std::size_t b = 0;
  while (b < kBounds.size() && millis > kBounds[b]) ++b;
  buckets_[b].fetch_add(1);
  count_.fetch_add(1);
  total_micros_.fetch_add(static_cast<std::uint64_t>(std::llround(std::max(0.0, millis) * 1000.0)));
}

double LatencyHistogram::mean_millis() const {
  const auto n = count_.load();
  return n == 0 ? 0.0 : double(total_micros_.load()) / 1000.0 / double(n);
}

std::array<std::uint64_t, LatencyHistogram::kBounds.size() + 1> LatencyHistogram::buckets() const {
  std::array<std::uint64_t, kBounds.size() + 1> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = buckets_[i].load();
  return out;
}

std::string render_stats(const std::string& camera_id, const EdgeStats& stats) {
  std::ostringstream os;
  os << "ivise-edge-stats v1\n";
  os << "camera_id " << camera_id << "\n";
  os << "frames_seen " << stats.frames_seen << "\n";
  os << "frames_processed " << stats.frames_processed << "\n";
  os << "persons_detected " << stats.persons_detected << "\n";
  os << "messages_sent " << stats.messages_sent << "\n";
  os << "bytes_sent " << stats.bytes_sent << "\n";
  os << "messages_dropped " << stats.messages_dropped << "\n";
  os << "provider_errors " << stats.provider_errors << "\n";
  for (std::size_t s = 0; s < kStageCount; ++s) {
    const auto& st = stats.stages[s];
    const auto name = to_string(static_cast<Stage>(s));
    os << "latency." << name << ".count " << st.count << "\n";
    os << "latency." << name << ".mean_ms " << format_decimal(st.mean_millis) << "\n";
    os << "latency." << name << ".buckets";
    for (auto b : st.buckets) os << ' ' << b;
    os << "\n";
  }
  return os.str();
}

EdgeAgent::EdgeAgent(EdgeConfig config, std::unique_ptr<pose::PoseProvider> provider,
                     FeatureSink& sink, Clock clock)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      sink_(sink),
      clock_(std::move(clock)),
      drop_(config_.drop_ratio),
      sender_id_(wire::sender_id_for(config_.camera_id)) {
  if (!provider_) throw Error(ErrorKind::InvalidArgument, "edge agent needs a pose provider");
}

FrameOutcome EdgeAgent::on_frame(const FrameRef& frame) {
  FrameOutcome out;
  const auto index = frames_seen_.fetch_add(1);
  if (!active() || !drop_.process(index)) return out;
  out.processed = true;
  frames_processed_.fetch_add(1);

  try {
    auto t = SteadyClock::now();
    // Frames without pixels (fixture-only runs) go to the provider as-is.
    regions::Preprocessed pre{frame, 1.0, 1.0};
    if (frame.has_pixels()) pre = regions::preprocess(frame);
    out.times.preprocess_ms = elapsed_ms(t);

    t = SteadyClock::now();
    auto pose = provider_->infer(pre.frame);
    pose = regions::scale_pose(std::move(pose), pre.scale_x, pre.scale_y, frame.width, frame.height);
    pose.camera_id = frame.camera_id;
    pose.sequence = frame.sequence;
    out.times.infer_ms = elapsed_ms(t);
    out.persons = pose.skeletons.size();
    persons_detected_.fetch_add(out.persons);

    t = SteadyClock::now();
    std::vector<regions::RegionSet> sets;
    if (wire::should_transmit(pose)) sets = regions::extract_all(pose, frame);
    out.times.extract_ms = elapsed_ms(t);

    if (wire::should_transmit(pose)) {
      t = SteadyClock::now();
      auto bytes = wire::encode(sender_id_, wire::make_features(frame, pose, sets));
      out.bytes_sent = bytes.size();
      sink_.send(std::move(bytes));
      out.times.encode_send_ms = elapsed_ms(t);
      out.transmitted = true;
      messages_sent_.fetch_add(1);
      bytes_sent_.fetch_add(out.bytes_sent);
    }
  } catch (const Error& e) {
    provider_errors_.fetch_add(1);
    out.error = e.what();
    spdlog::warn("edge {}: frame {} skipped: {}", config_.camera_id, frame.sequence, e.what());
    return out;
  }

  latency_[0].record(out.times.preprocess_ms);
  latency_[1].record(out.times.infer_ms);
  latency_[2].record(out.times.extract_ms);
  if (out.transmitted) latency_[3].record(out.times.encode_send_ms);
  return out;
}

bool EdgeAgent::handle_query_dispatch(const wire::QueryDispatch& dispatch) {
  {
    std::lock_guard lock(queries_mutex_);
    if (dispatch.action == wire::QueryDispatch::Action::Cancel) {
      query_expiry_.erase(dispatch.query_id);
    } else {
      query_expiry_[dispatch.query_id] =
          clock_() + static_cast<TimestampMs>(dispatch.ttl_seconds) * 1000;
    }
  }
  return active();
}

bool EdgeAgent::active() const {
  const auto now = clock_();
  std::lock_guard lock(queries_mutex_);
  for (const auto& [id, expiry] : query_expiry_) {
    if (now < expiry) return true;
  }
  return false;
}

std::vector<std::string> EdgeAgent::active_queries() const {
  const auto now = clock_();
  std::lock_guard lock(queries_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, expiry] : query_expiry_) {
    if (now < expiry) ids.push_back(id);
  }
  return ids;
}

EdgeStats EdgeAgent::stats() const {
  EdgeStats s;
  s.frames_seen = frames_seen_.load();
  s.frames_processed = frames_processed_.load();
  s.persons_detected = persons_detected_.load();
  s.messages_sent = messages_sent_.load();
  s.bytes_sent = bytes_sent_.load();
  s.messages_dropped = messages_dropped_.load();
  s.provider_errors = provider_errors_.load();
  for (std::size_t i = 0; i < kStageCount; ++i) {
    s.stages[i].count = latency_[i].count();
    s.stages[i].mean_millis = latency_[i].mean_millis();
    s.stages[i].buckets = latency_[i].buckets();
  }
  return s;
}

wire::Heartbeat EdgeAgent::heartbeat() const {
  return {config_.camera_id, clock_(), frames_seen_.load(), frames_processed_.load()};
}

void OutboundQueue::send(std::vector<std::uint8_t> bytes) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    if (queue_.size() >= capacity_) {
      queue_.pop_front();
      dropped_.fetch_add(1);
    }
    queue_.push_back(std::move(bytes));
  }
  cv_.notify_one();
}

std::optional<std::vector<std::uint8_t>> OutboundQueue::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) return std::nullopt;
  auto bytes = std::move(queue_.front());
  queue_.pop_front();
  return bytes;
}

void OutboundQueue::requeue_front(std::vector<std::uint8_t> bytes) {
  std::lock_guard lock(mutex_);
  if (queue_.size() >= capacity_) {
    // The requeued message is the oldest one.
    dropped_.fetch_add(1);
    return;
  }
  queue_.push_front(std::move(bytes));
}

void OutboundQueue::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::size_t OutboundQueue::size() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

DirectorySource::DirectorySource(std::string camera_id, const std::filesystem::path& dir)
    : camera_id_(std::move(camera_id)), files_(list_frame_files(dir)) {}

std::optional<FrameRef> DirectorySource::next() {
  if (pos_ >= files_.size()) return std::nullopt;
  auto image = read_ppm(files_[pos_]);
  FrameRef frame;
  frame.camera_id = camera_id_;
  frame.sequence = pos_;
  frame.timestamp = wall_clock_ms();
  frame.width = image.width;
  frame.height = image.height;
  frame.pixels = std::move(image.pixels);
  ++pos_;
  return frame;
}

namespace {

class SceneSource final : public FrameSource {
 public:
  SceneSource(std::string camera_id, sim::SceneSpec spec)
      : camera_id_(std::move(camera_id)), spec_(std::move(spec)) {}

  std::optional<FrameRef> next() override {
    return sim::render_scene(spec_, camera_id_, sequence_++).frame;
  }

 private:
  std::string camera_id_;
  sim::SceneSpec spec_;
  std::uint64_t sequence_ = 0;
};

}  // namespace

std::unique_ptr<pose::PoseProvider> make_provider(const EdgeConfig& config, const Config& raw) {
  if (config.pose_backend == "fixture") {
    return std::make_unique<pose::FixtureProvider>(pose::load_fixture(config.fixture_path));
  }
  if (config.pose_backend == "remote") {
    pose::RemoteOptions options;
    options.url = config.remote_url;
    options.timeout_ms = config.remote_timeout_ms;
    return std::make_unique<pose::RemoteProvider>(std::move(options));
  }
  auto spec = sim::scene_from_config(raw);
  return std::make_unique<pose::SyntheticProvider>(
      [spec](const std::string&, std::uint64_t) {
        return pose::SyntheticProvider::Truth{spec.width, spec.height, sim::scene_skeletons(spec)};
      });
}

std::unique_ptr<FrameSource> make_source(const EdgeConfig& config, const Config& raw) {
  const auto& src = config.source;
  if (src.rfind("dir:", 0) == 0) {
    return std::make_unique<DirectorySource>(config.camera_id, src.substr(4));
  }
  if (src == "synthetic") {
    auto spec = sim::scene_from_config(raw);
    sim::validate_scene(spec, color::PaletteSet::from_config(raw));
    return std::make_unique<SceneSource>(config.camera_id, std::move(spec));
  }
  if (src.rfind("device:", 0) == 0) {
    throw Error(ErrorKind::InvalidArgument, "camera devices are not supported by this build", src);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown frame source", src);
}

namespace {

// Keeps one connection to the fog alive: registration heartbeat, queued
// feature messages, periodic heartbeats, inbound dispatches.
void fog_link(EdgeAgent& agent, OutboundQueue& queue, const HostPort& fog, std::stop_token stop) {
  const auto interval = std::chrono::milliseconds(agent.config().heartbeat_interval_ms);
  while (!stop.stop_requested()) {
    net::Socket sock;
    try {
      sock = net::connect_tcp(fog.host, fog.port, 2000);
      sock.write_all(wire::encode(agent.sender_id(), agent.heartbeat()));
      spdlog::info("edge {}: connected to fog {}:{}", agent.config().camera_id, fog.host, fog.port);
    } catch (const Error& e) {
      spdlog::warn("edge {}: fog unreachable: {}", agent.config().camera_id, e.what());
      for (int i = 0; i < 10 && !stop.stop_requested(); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
      continue;
    }

    std::atomic<bool> broken{false};
    std::jthread reader([&](std::stop_token rstop) {
      try {
        while (!rstop.stop_requested() && !broken.load()) {
          if (!sock.wait_readable(100)) continue;
          auto bytes = wire::read_envelope(sock, 2000);
          if (!bytes) break;
          auto decoded = wire::decode(*bytes);
          if (auto* d = std::get_if<wire::QueryDispatch>(&decoded.message)) {
            const bool on = agent.handle_query_dispatch(*d);
            spdlog::info("edge {}: dispatch {} -> active={}", agent.config().camera_id, d->query_id, on);
          }
        }
      } catch (const std::exception& e) {
        spdlog::warn("edge {}: fog read failed: {}", agent.config().camera_id, e.what());
      }
      broken.store(true);
    });

    auto next_heartbeat = SteadyClock::now() + interval;
    while (!stop.stop_requested() && !broken.load()) {
      auto msg = queue.pop(std::chrono::milliseconds(100));
      try {
        if (msg) sock.write_all(*msg);
        if (SteadyClock::now() >= next_heartbeat) {
          sock.write_all(wire::encode(agent.sender_id(), agent.heartbeat()));
          next_heartbeat += interval;
        }
      } catch (const Error& e) {
        spdlog::warn("edge {}: {}", agent.config().camera_id,
                     Error(ErrorKind::FogDisconnected, e.what()).what());
        if (msg) queue.requeue_front(std::move(*msg));
        broken.store(true);
      }
    }
    sock.shutdown();
    reader.request_stop();
    reader.join();
  }
}

void status_server(EdgeAgent& agent, OutboundQueue& queue, const HostPort& addr, std::stop_token stop) {
  net::TcpListener listener(addr.host, addr.port);
  spdlog::info("edge {}: status endpoint on port {}", agent.config().camera_id, listener.port());
  while (!stop.stop_requested()) {
    auto client = listener.accept(200);
    if (!client) continue;
    auto stats = agent.stats();
    stats.messages_dropped += queue.dropped();
    try {
      client->write_all(render_stats(agent.config().camera_id, stats));
    } catch (const Error&) {
    }
  }
}

}  // namespace

void run_pipeline(const Config& raw_config, std::stop_token stop) {
  auto config = EdgeConfig::from_config(raw_config);
  auto source = make_source(config, raw_config);
  OutboundQueue queue(100);
  EdgeAgent agent(config, make_provider(config, raw_config), queue);

  const auto fog = parse_host_port(config.fog_address);
  std::jthread link([&](std::stop_token s) { fog_link(agent, queue, fog, s); });
  std::jthread status;
  if (!config.status_addr.empty()) {
    const auto addr = parse_host_port(config.status_addr);
    status = std::jthread([&, addr](std::stop_token s) { status_server(agent, queue, addr, s); });
  }

  const auto period = config.fps > 0 ? std::chrono::duration<double>(1.0 / config.fps)
                                     : std::chrono::duration<double>(0);
  auto next = SteadyClock::now();
  long long count = 0;
  while (!stop.stop_requested() && (config.max_frames < 0 || count < config.max_frames)) {
    std::optional<FrameRef> frame;
    try {
      frame = source->next();
    } catch (const Error& e) {
      spdlog::error("edge {}: frame source failed: {}", config.camera_id, e.what());
      break;
    }
    if (!frame) break;
    agent.on_frame(*frame);
    ++count;
    if (period.count() > 0) {
      next += std::chrono::duration_cast<SteadyClock::duration>(period);
      std::this_thread::sleep_until(next);
    }
  }

  // Give the sender a moment to flush what is queued.
  for (int i = 0; i < 50 && queue.size() > 0 && !stop.stop_requested(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  auto stats = agent.stats();
  stats.messages_dropped += queue.dropped();
  spdlog::info("edge {}: done\n{}", config.camera_id, render_stats(config.camera_id, stats));
  queue.close();
}

}  // namespace ivise::edge

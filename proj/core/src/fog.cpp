#include "ivise/fog.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <list>
#include <thread>

#include "ivise/error.hpp"
#include "ivise/net.hpp"
#include "ivise/operator_api.hpp"

namespace ivise::fog {

FogOptions FogOptions::from_config(const Config& config) {
  FogOptions o;
  o.heartbeat_interval_ms = static_cast<int>(config.get_int("fog.heartbeat_interval_ms", o.heartbeat_interval_ms));
  o.default_ttl_seconds = static_cast<std::uint32_t>(config.get_int("fog.query_ttl_seconds", o.default_ttl_seconds));
  o.cluster_seed = static_cast<std::uint64_t>(config.get_int("fog.cluster_seed", static_cast<long long>(o.cluster_seed)));
  o.index_log = config.get_or("fog.index_log", "");
  o.palettes = color::PaletteSet::from_config(config);
  return o;
}

std::string_view to_string(EdgeState state) {
  return state == EdgeState::Connected ? "connected" : "disconnected";
}

std::string_view to_string(SessionState state) {
  switch (state) {
    case SessionState::Active: return "active";
    case SessionState::Cancelled: return "cancelled";
    case SessionState::Expired: return "expired";
  }
  return "?";
}

struct ReportFeed::Shared {
  std::mutex mutex;
  std::condition_variable cv;
  std::vector<query::MatchReport> reports;
  bool closed = false;

  void close() {
    {
      std::lock_guard lock(mutex);
      closed = true;
    }
    cv.notify_all();
  }
};

ReportFeed::Item ReportFeed::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(shared_->mutex);
  shared_->cv.wait_for(lock, timeout,
                       [&] { return shared_->closed || cursor_ < shared_->reports.size(); });
  if (cursor_ < shared_->reports.size()) return {Status::Report, shared_->reports[cursor_++]};
  if (shared_->closed) return {Status::Closed, std::nullopt};
  return {Status::Timeout, std::nullopt};
}

struct FogNode::Session {
  query::Query query;
  std::string text;
  SessionState state = SessionState::Active;
  std::vector<std::string> dispatched;
  TimestampMs expires_at = 0;
  std::shared_ptr<ReportFeed::Shared> feed = std::make_shared<ReportFeed::Shared>();
};

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

index::FeatureIndex open_index(const std::filesystem::path& path) {
  return path.empty() ? index::FeatureIndex() : index::FeatureIndex(path);
}

}  // namespace

FogNode::FogNode(query::CameraRegistry registry, FogOptions options, Clock clock)
    : registry_(std::move(registry)), options_(std::move(options)), clock_(std::move(clock)),
      index_(open_index(options_.index_log)) {
  const auto now = clock_();
  for (const auto& [id, info] : registry_.cameras()) {
    EdgeSlot slot;
    slot.entry.camera_id = id;
    slot.entry.address = info.host + ":" + std::to_string(info.port);
    slot.entry.location = info.location;
    slot.entry.last_heartbeat = now;
    edges_.emplace(id, std::move(slot));
  }
}

FogNode::~FogNode() {
  std::lock_guard lock(mutex_);
  for (auto& [id, s] : sessions_) s->feed->close();
}

void FogNode::attach_edge(const std::string& camera_id, std::shared_ptr<EdgeLink> link,
                          std::string address) {
  std::lock_guard lock(mutex_);
  auto it = edges_.find(camera_id);
  if (it == edges_.end()) throw Error(ErrorKind::UnknownEdge, "camera not registered", camera_id);
  auto& slot = it->second;
  slot.link = std::move(link);
  slot.entry.state = EdgeState::Connected;
  slot.entry.last_heartbeat = clock_();
  if (!address.empty()) slot.entry.address = std::move(address);

  // Late joiners pick up the sessions that are still running.
  const auto now = clock_();
  expire_locked(now);
  for (const auto& [id, s] : sessions_) {
    if (s->state != SessionState::Active || !s->query.in_scope(camera_id)) continue;
    const auto remaining = std::max<TimestampMs>(1, (s->expires_at - now + 999) / 1000);
    wire::QueryDispatch d{wire::QueryDispatch::Action::Activate, id,
                          static_cast<std::uint32_t>(remaining), s->text};
    dispatch_locked(d, {camera_id});
    if (std::find(s->dispatched.begin(), s->dispatched.end(), camera_id) == s->dispatched.end()) {
      s->dispatched.push_back(camera_id);
    }
  }
}

void FogNode::detach_edge(const std::string& camera_id) {
  std::lock_guard lock(mutex_);
  auto it = edges_.find(camera_id);
  if (it == edges_.end()) return;
  it->second.link.reset();
  it->second.entry.state = EdgeState::Disconnected;
}

void FogNode::on_heartbeat(const wire::Heartbeat& heartbeat) {
  std::lock_guard lock(mutex_);
  auto it = edges_.find(heartbeat.camera_id);
  if (it == edges_.end()) {
    unknown_edge_drops_.fetch_add(1);
    throw Error(ErrorKind::UnknownEdge, "heartbeat from unregistered camera", heartbeat.camera_id);
  }
  auto& e = it->second.entry;
  e.last_heartbeat = clock_();
  e.frames_seen = heartbeat.frames_seen;
  e.frames_processed = heartbeat.frames_processed;
  if (it->second.link) e.state = EdgeState::Connected;
}

void FogNode::sweep() {
  std::lock_guard lock(mutex_);
  const auto now = clock_();
  const auto stale = static_cast<TimestampMs>(options_.heartbeat_interval_ms) * options_.missed_heartbeats;
  for (auto& [id, slot] : edges_) {
    if (slot.entry.state == EdgeState::Connected && now - slot.entry.last_heartbeat > stale) {
      slot.entry.state = EdgeState::Disconnected;
      spdlog::warn("fog: edge {} missed {} heartbeats", id, options_.missed_heartbeats);
    }
  }
  expire_locked(now);
}

void FogNode::expire_locked(TimestampMs now) {
  for (auto& [id, s] : sessions_) {
    if (s->state == SessionState::Active && now >= s->expires_at) {
      s->state = SessionState::Expired;
      s->feed->close();
    }
  }
}

std::vector<EdgeEntry> FogNode::edges() const {
  std::lock_guard lock(mutex_);
  std::vector<EdgeEntry> out;
  for (const auto& [id, slot] : edges_) out.push_back(slot.entry);
  return out;
}

void FogNode::dispatch_locked(const wire::QueryDispatch& dispatch,
                              const std::vector<std::string>& cameras) {
  const auto bytes = wire::encode(0, dispatch);
  for (const auto& cam : cameras) {
    auto it = edges_.find(cam);
    if (it == edges_.end() || !it->second.link) continue;
    try {
      it->second.link->send(bytes);
    } catch (const std::exception& e) {
      spdlog::warn("fog: dispatch to {} failed: {}", cam, e.what());
    }
  }
}

SubmitResult FogNode::submit_query(const std::string& text, const std::vector<std::string>& scope,
                                   std::optional<std::uint32_t> ttl_seconds) {
  auto parsed = query::parse_query(text, options_.palettes);
  std::lock_guard lock(mutex_);
  const auto now = clock_();
  expire_locked(now);

  auto session = std::make_shared<Session>();
  SubmitResult result;
  result.query_id = "q" + std::to_string(next_query_++);
  parsed.query_id = result.query_id;
  parsed.issued_at = now;
  parsed.scope = scope;
  const auto ttl = ttl_seconds.value_or(options_.default_ttl_seconds);
  session->query = std::move(parsed);
  session->text = text;
  session->expires_at = now + static_cast<TimestampMs>(ttl) * 1000;

  for (const auto& [id, slot] : edges_) {
    if (session->query.in_scope(id) && slot.entry.state == EdgeState::Connected && slot.link) {
      session->dispatched.push_back(id);
    }
  }
  if (session->dispatched.empty()) result.warnings.emplace_back(to_string(ErrorKind::NoEdgesInScope));
  dispatch_locked({wire::QueryDispatch::Action::Activate, result.query_id, ttl, text},
                  session->dispatched);
  result.dispatched = session->dispatched;
  sessions_.emplace(result.query_id, std::move(session));
  return result;
}

void FogNode::cancel_query(const std::string& query_id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(query_id);
  if (it == sessions_.end()) throw Error(ErrorKind::UnknownQuery, "no such query", query_id);
  auto& s = *it->second;
  if (s.state != SessionState::Active) return;
  s.state = SessionState::Cancelled;
  s.feed->close();
  dispatch_locked({wire::QueryDispatch::Action::Cancel, query_id, 0, s.text}, s.dispatched);
}

ReportFeed FogNode::operator_feed(const std::string& query_id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(query_id);
  if (it == sessions_.end()) throw Error(ErrorKind::UnknownQuery, "no such query", query_id);
  return ReportFeed(it->second->feed);
}

std::vector<query::MatchReport> FogNode::session_reports(const std::string& query_id) const {
  std::shared_ptr<ReportFeed::Shared> feed;
  {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(query_id);
    if (it == sessions_.end()) throw Error(ErrorKind::UnknownQuery, "no such query", query_id);
    feed = it->second->feed;
  }
  std::lock_guard lock(feed->mutex);
  return feed->reports;
}

namespace {

SessionInfo info_of(const std::string& id, const auto& s) {
  SessionInfo info;
  info.query_id = id;
  info.text = s.text;
  info.state = s.state;
  info.dispatched = s.dispatched;
  info.issued_at = s.query.issued_at;
  info.expires_at = s.expires_at;
  std::lock_guard lock(s.feed->mutex);
  info.reports = s.feed->reports.size();
  return info;
}

}  // namespace

SessionInfo FogNode::session(const std::string& query_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(query_id);
  if (it == sessions_.end()) throw Error(ErrorKind::UnknownQuery, "no such query", query_id);
  return info_of(it->first, *it->second);
}

std::vector<SessionInfo> FogNode::sessions() const {
  std::lock_guard lock(mutex_);
  std::vector<SessionInfo> out;
  for (const auto& [id, s] : sessions_) out.push_back(info_of(id, *s));
  return out;
}

std::map<Section, int> FogNode::requested_k_locked(std::string_view camera_id) const {
  std::map<Section, int> k;
  for (const auto& [id, s] : sessions_) {
    if (s->state != SessionState::Active || !s->query.in_scope(camera_id)) continue;
    for (const auto& c : s->query.clauses) k[c.section] = std::max(k[c.section], c.k);
  }
  return k;
}

std::size_t FogNode::ingest_features(const wire::FrameFeaturesMsg& msg, std::uint64_t sender_id) {
  std::map<Section, int> requested;
  {
    std::lock_guard lock(mutex_);
    if (!edges_.contains(msg.camera_id) || wire::sender_id_for(msg.camera_id) != sender_id) {
      unknown_edge_drops_.fetch_add(1);
      throw Error(ErrorKind::UnknownEdge, "features from unregistered sender", msg.camera_id);
    }
    expire_locked(clock_());
    requested = requested_k_locked(msg.camera_id);
  }
  messages_.fetch_add(1);

  std::vector<query::PersonDescription> people;
  for (const auto& person : msg.persons) {
    query::PersonDescription d;
    d.source = {msg.camera_id, msg.sequence, person.person_index};
    d.timestamp = msg.timestamp;
    for (const auto& region : person.regions) {
      const auto pixels = static_cast<int>(region.pixels.size());
      if (pixels == 0) continue;
      auto it = requested.find(region.section);
      const int k = std::min(it == requested.end() ? 1 : it->second, pixels);
      std::uint64_t seed = mix(options_.cluster_seed, wire::sender_id_for(msg.camera_id));
      seed = mix(seed, msg.sequence);
      seed = mix(seed, person.person_index);
      seed = mix(seed, static_cast<std::uint64_t>(region.section));
      try {
        d.sections[region.section] = color::describe_region(
            wire::to_pixel_region(region, d.source), k, options_.palettes, seed, options_.cluster);
        d.boxes[region.section] = region.box;
      } catch (const Error& e) {
        spdlog::warn("fog: {} seq {} person {}: {}", msg.camera_id, msg.sequence, person.person_index,
                     e.what());
      }
    }
    for (auto s : all_sections()) {
      if (!d.sections.contains(s)) d.missing.push_back(s);
    }
    people.push_back(std::move(d));
  }

  // Index before matching so observed descriptions survive a crash.
  const auto now = clock_();
  for (const auto& d : people) index_.insert({d, now});
  persons_.fetch_add(people.size());

  std::vector<std::pair<std::shared_ptr<Session>, query::MatchReport>> delivered;
  std::function<void(const query::MatchReport&)> observer;
  {
    std::lock_guard lock(mutex_);
    auto& entry = edges_.find(msg.camera_id)->second.entry;
    entry.messages += 1;
    entry.persons += people.size();
    entry.bytes += wire::byte_size(msg);
    for (const auto& [id, s] : sessions_) {
      if (s->state != SessionState::Active || !s->query.in_scope(msg.camera_id)) continue;
      for (const auto& d : people) {
        if (auto report = query::build_report(s->query, d, registry_)) {
          {
            std::lock_guard feed_lock(s->feed->mutex);
            s->feed->reports.push_back(*report);
          }
          s->feed->cv.notify_all();
          delivered.emplace_back(s, std::move(*report));
        }
      }
    }
    observer = observer_;
  }
  reports_.fetch_add(delivered.size());
  if (observer) {
    for (const auto& [s, r] : delivered) observer(r);
  }
  return people.size();
}

wire::Kind FogNode::ingest_bytes(std::span<const std::uint8_t> bytes) {
  auto decoded = wire::decode(bytes);
  bytes_.fetch_add(bytes.size());
  const auto kind = wire::kind_of(decoded.message);
  if (auto* f = std::get_if<wire::FrameFeaturesMsg>(&decoded.message)) {
    ingest_features(*f, decoded.sender_id);
  } else if (auto* h = std::get_if<wire::Heartbeat>(&decoded.message)) {
    if (wire::sender_id_for(h->camera_id) != decoded.sender_id) {
      unknown_edge_drops_.fetch_add(1);
      throw Error(ErrorKind::UnknownEdge, "heartbeat sender id does not match camera", h->camera_id);
    }
    on_heartbeat(*h);
  }
  return kind;
}

std::vector<query::MatchReport> FogNode::offline_query(const std::string& text,
                                                       const index::TimeRange& range) const {
  auto parsed = query::parse_query(text, options_.palettes);
  parsed.query_id = "offline";
  return index_.scan(parsed, range, registry_);
}

void FogNode::set_report_observer(std::function<void(const query::MatchReport&)> observer) {
  std::lock_guard lock(mutex_);
  observer_ = std::move(observer);
}

FogStats FogNode::stats() const {
  FogStats s;
  s.messages = messages_.load();
  s.bytes = bytes_.load();
  s.persons = persons_.load();
  s.reports = reports_.load();
  s.unknown_edge_drops = unknown_edge_drops_.load();
  s.index_records = index_.size();
  std::lock_guard lock(mutex_);
  for (const auto& [id, sess] : sessions_) {
    if (sess->state == SessionState::Active) ++s.active_sessions;
  }
  return s;
}

// ---------------------------------------------------------------------------

namespace {

class SocketLink final : public EdgeLink {
 public:
  explicit SocketLink(std::shared_ptr<net::Socket> socket) : socket_(std::move(socket)) {}
  void send(std::vector<std::uint8_t> bytes) override {
    std::lock_guard lock(mutex_);
    socket_->write_all(bytes);
  }

 private:
  std::mutex mutex_;
  std::shared_ptr<net::Socket> socket_;
};

}  // namespace

struct FogServer::Impl {
  FogNode& node;
  net::TcpListener edge_listener;
  net::TcpListener operator_listener;
  std::mutex workers_mutex;
  std::list<std::jthread> workers;
  std::jthread edge_acceptor;
  std::jthread operator_acceptor;
  std::jthread sweeper;

  Impl(FogNode& n, const HostPort& edge_addr, const HostPort& op_addr)
      : node(n), edge_listener(edge_addr.host, edge_addr.port),
        operator_listener(op_addr.host, op_addr.port) {}

  void spawn(std::function<void(std::stop_token)> fn) {
    std::lock_guard lock(workers_mutex);
    workers.emplace_back(std::move(fn));
  }

  // One ingest worker per edge connection keeps per-edge ordering.
  void edge_worker(std::shared_ptr<net::Socket> sock, std::stop_token stop) {
    std::string camera;
    try {
      while (!stop.stop_requested()) {
        if (!sock->wait_readable(200)) continue;
        auto bytes = wire::read_envelope(*sock, 5000);
        if (!bytes) break;
        if (camera.empty()) {
          auto decoded = wire::decode(*bytes);
          auto* hb = std::get_if<wire::Heartbeat>(&decoded.message);
          if (hb == nullptr) {
            spdlog::warn("fog: edge connection must open with a heartbeat");
            break;
          }
          node.attach_edge(hb->camera_id, std::make_shared<SocketLink>(sock));
          camera = hb->camera_id;
          spdlog::info("fog: edge {} attached", camera);
        }
        try {
          node.ingest_bytes(*bytes);
        } catch (const Error& e) {
          spdlog::warn("fog: message from {} dropped: {}", camera, e.what());
        }
      }
    } catch (const std::exception& e) {
      spdlog::warn("fog: edge connection {} failed: {}", camera, e.what());
    }
    if (!camera.empty()) {
      node.detach_edge(camera);
      spdlog::info("fog: edge {} detached", camera);
    }
  }

  void start() {
    edge_acceptor = std::jthread([this](std::stop_token stop) {
      while (!stop.stop_requested()) {
        auto client = edge_listener.accept(200);
        if (!client) continue;
        auto sock = std::make_shared<net::Socket>(std::move(*client));
        spawn([this, sock](std::stop_token s) { edge_worker(sock, s); });
      }
    });
    operator_acceptor = std::jthread([this](std::stop_token stop) {
      while (!stop.stop_requested()) {
        auto client = operator_listener.accept(200);
        if (!client) continue;
        auto sock = std::make_shared<net::Socket>(std::move(*client));
        spawn([this, sock](std::stop_token s) { serve_operator_connection(node, *sock, s); });
      }
    });
    sweeper = std::jthread([this](std::stop_token stop) {
      while (!stop.stop_requested()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(250));
        node.sweep();
      }
    });
  }

  void stop() {
    edge_acceptor = {};
    operator_acceptor = {};
    sweeper = {};
    std::list<std::jthread> taken;
    {
      std::lock_guard lock(workers_mutex);
      taken.swap(workers);
    }
    taken.clear();
    edge_listener.close();
    operator_listener.close();
  }
};

FogServer::FogServer(FogNode& node, const HostPort& edge_addr, const HostPort& operator_addr)
    : impl_(std::make_unique<Impl>(node, edge_addr, operator_addr)) {
  impl_->start();
}

FogServer::~FogServer() { stop(); }

int FogServer::edge_port() const { return impl_->edge_listener.port(); }
int FogServer::operator_port() const { return impl_->operator_listener.port(); }
void FogServer::stop() {
  if (impl_) impl_->stop();
}

void run_fog(const Config& config, std::stop_token stop) {
  const auto cameras = config.get("fog.cameras");
  if (!cameras) throw Error(ErrorKind::InvalidArgument, "fog.cameras is required");
  FogNode node(query::CameraRegistry::load(*cameras), FogOptions::from_config(config));
  FogServer server(node, parse_host_port(config.get_or("fog.listen_addr", "127.0.0.1:7700")),
                   parse_host_port(config.get_or("fog.operator_addr", "127.0.0.1:7701")));
  spdlog::info("fog: edges on port {}, operators on port {}", server.edge_port(), server.operator_port());
  while (!stop.stop_requested()) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
}

}  // namespace ivise::fog

#include "ivise/operator_api.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ivise/error.hpp"
#include "ivise/fog.hpp"

namespace ivise::fog {

namespace {

using nlohmann::json;

json box_json(const BoundingBox& b) { return json::array({b.min_x, b.min_y, b.max_x, b.max_y}); }

json report_json(const query::MatchReport& r) {
  json matched = json::array();
  for (const auto& c : r.matched) {
    matched.push_back({{"section", to_string(c.section)}, {"color", c.color}, {"k", c.k}});
  }
  json evidence = json::array();
  for (const auto& e : r.evidence) {
    evidence.push_back({{"section", to_string(e.section)}, {"box", box_json(e.box)}});
  }
  return {{"query_id", r.query_id},
          {"camera_id", r.camera_id},
          {"sequence", r.sequence},
          {"timestamp", r.timestamp},
          {"latitude", r.location.latitude},
          {"longitude", r.location.longitude},
          {"person_index", r.person_index},
          {"matched", matched},
          {"evidence", evidence}};
}

Section section_of(const json& j) {
  auto s = parse_section(j.get<std::string>());
  if (!s) throw Error(ErrorKind::MalformedPayload, "unknown section", j.get<std::string>());
  return *s;
}

json error_json(const Error& e) {
  return {{"ok", false}, {"error", to_string(e.kind())}, {"message", e.what()}, {"detail", e.detail()}};
}

std::string field(const json& req, const char* name) {
  if (!req.contains(name) || !req[name].is_string()) {
    throw Error(ErrorKind::InvalidArgument, std::string("missing string field ") + name, name);
  }
  return req[name].get<std::string>();
}

json handle(FogNode& node, const json& req) {
  const auto op = field(req, "op");
  if (op == "submit") {
    std::vector<std::string> scope;
    if (req.contains("scope")) scope = req["scope"].get<std::vector<std::string>>();
    std::optional<std::uint32_t> ttl;
    if (req.contains("ttl_seconds")) ttl = req["ttl_seconds"].get<std::uint32_t>();
    auto r = node.submit_query(field(req, "text"), scope, ttl);
    return {{"ok", true}, {"op", "submitted"}, {"query_id", r.query_id},
            {"dispatched", r.dispatched}, {"warnings", r.warnings}};
  }
  if (op == "cancel") {
    const auto id = field(req, "query_id");
    node.cancel_query(id);
    return {{"ok", true}, {"op", "cancelled"}, {"query_id", id}};
  }
  if (op == "offline") {
    index::TimeRange range;
    if (req.contains("from")) range.from = req["from"].get<TimestampMs>();
    if (req.contains("to")) range.to = req["to"].get<TimestampMs>();
    json reports = json::array();
    for (const auto& r : node.offline_query(field(req, "text"), range)) reports.push_back(report_json(r));
    return {{"ok", true}, {"op", "results"}, {"reports", reports}};
  }
  if (op == "edges") {
    json edges = json::array();
    for (const auto& e : node.edges()) {
      edges.push_back({{"camera_id", e.camera_id},
                       {"address", e.address},
                       {"latitude", e.location.latitude},
                       {"longitude", e.location.longitude},
                       {"state", to_string(e.state)},
                       {"last_heartbeat", e.last_heartbeat},
                       {"frames_seen", e.frames_seen},
                       {"frames_processed", e.frames_processed},
                       {"messages", e.messages},
                       {"bytes", e.bytes},
                       {"persons", e.persons}});
    }
    return {{"ok", true}, {"op", "edges"}, {"edges", edges}};
  }
  if (op == "sessions") {
    json sessions = json::array();
    for (const auto& s : node.sessions()) {
      sessions.push_back({{"query_id", s.query_id},
                          {"text", s.text},
                          {"state", to_string(s.state)},
                          {"dispatched", s.dispatched},
                          {"reports", s.reports},
                          {"issued_at", s.issued_at},
                          {"expires_at", s.expires_at}});
    }
    return {{"ok", true}, {"op", "sessions"}, {"sessions", sessions}};
  }
  if (op == "stats") {
    const auto s = node.stats();
    return {{"ok", true},          {"op", "stats"},
            {"messages", s.messages}, {"bytes", s.bytes},
            {"persons", s.persons},   {"reports", s.reports},
            {"unknown_edge_drops", s.unknown_edge_drops},
            {"index_records", s.index_records},
            {"active_sessions", s.active_sessions}};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown op", op);
}

json parse_request(const std::string& line) {
  try {
    auto req = json::parse(line);
    if (!req.is_object()) throw Error(ErrorKind::ParseError, "request must be a JSON object");
    return req;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("bad request: ") + e.what());
  }
}

}  // namespace

std::string handle_operator_request(FogNode& node, const std::string& line) {
  try {
    return handle(node, parse_request(line)).dump();
  } catch (const Error& e) {
    return error_json(e).dump();
  } catch (const json::exception& e) {
    return error_json(Error(ErrorKind::InvalidArgument, e.what())).dump();
  }
}

void serve_operator_connection(FogNode& node, net::Socket& socket, std::stop_token stop) {
  try {
    while (!stop.stop_requested()) {
      if (!socket.wait_readable(200)) continue;
      auto line = socket.read_line(5000);
      if (!line) break;
      if (trim(*line).empty()) continue;

      std::optional<ReportFeed> feed;
      std::string id;
      try {
        auto req = parse_request(*line);
        if (req.value("op", "") == "stream") {
          id = field(req, "query_id");
          feed = node.operator_feed(id);
        }
      } catch (const Error& e) {
        socket.write_all(error_json(e).dump() + "\n");
        continue;
      }
      if (!feed) {
        socket.write_all(handle_operator_request(node, *line) + "\n");
        continue;
      }

      socket.write_all(json{{"ok", true}, {"op", "streaming"}, {"query_id", id}}.dump() + "\n");
      while (!stop.stop_requested()) {
        auto item = feed->next(std::chrono::milliseconds(200));
        if (item.status == ReportFeed::Status::Report) {
          socket.write_all(json{{"event", "report"}, {"report", report_json(*item.report)}}.dump() + "\n");
        } else if (item.status == ReportFeed::Status::Closed) {
          socket.write_all(json{{"event", "closed"}, {"query_id", id},
                                {"state", to_string(node.session(id).state)}}.dump() + "\n");
          break;
        }
      }
    }
  } catch (const std::exception& e) {
    spdlog::info("fog: operator connection closed: {}", e.what());
  }
}

std::string report_to_json(const query::MatchReport& report) { return report_json(report).dump(); }

query::MatchReport report_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    query::MatchReport r;
    r.query_id = j.at("query_id").get<std::string>();
    r.camera_id = j.at("camera_id").get<std::string>();
    r.sequence = j.at("sequence").get<std::uint64_t>();
    r.timestamp = j.at("timestamp").get<TimestampMs>();
    r.location = {j.at("latitude").get<double>(), j.at("longitude").get<double>()};
    r.person_index = j.at("person_index").get<int>();
    for (const auto& c : j.at("matched")) {
      r.matched.push_back({section_of(c.at("section")), c.at("color").get<std::string>(), c.at("k").get<int>()});
    }
    for (const auto& e : j.at("evidence")) {
      const auto& b = e.at("box");
      BoundingBox box;
      box.min_x = b.at(0).get<int>();
      box.min_y = b.at(1).get<int>();
      box.max_x = b.at(2).get<int>();
      box.max_y = b.at(3).get<int>();
      r.evidence.push_back({section_of(e.at("section")), box});
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedPayload, std::string("bad report JSON: ") + e.what());
  }
}

}  // namespace ivise::fog

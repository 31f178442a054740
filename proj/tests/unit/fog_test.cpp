#include <gtest/gtest.h>

#include <json.hpp>
#include <thread>

#include "ivise/fog.hpp"
#include "ivise/operator_api.hpp"
#include "ivise/sim.hpp"
#include "support.hpp"

namespace ivise {
namespace {

using namespace fog;
using nlohmann::json;

struct CapturingLink final : EdgeLink {
  std::vector<wire::QueryDispatch> dispatches;
  void send(std::vector<std::uint8_t> bytes) override {
    dispatches.push_back(std::get<wire::QueryDispatch>(wire::decode(bytes).message));
  }
};

query::CameraRegistry three_cameras() {
  return query::CameraRegistry::parse(
      "cam1 127.0.0.1:1 40.1 -74.1\ncam2 127.0.0.1:2 40.2 -74.2\ncam3 127.0.0.1:3 40.3 -74.3\n");
}

sim::SceneSpec four_person_scene() {
  sim::SceneSpec s;
  s.width = 1920;
  s.height = 1080;
  const char* torso[] = {"grey", "red", "grey", "green"};
  const char* legs[] = {"blue", "black", "white", "blue"};
  for (int i = 0; i < 4; ++i) {
    sim::PersonSpec p;
    p.position = {240.5 + 480 * i, 300.5};
    p.torso_color = torso[i];
    p.leg_color = legs[i];
    s.persons.push_back(p);
  }
  return s;
}

wire::FrameFeaturesMsg features(const sim::SceneSpec& spec, const std::string& cam, std::uint64_t seq) {
  const auto scene = sim::render_scene(spec, cam, seq);
  const auto sets = regions::extract_all(scene.truth, scene.frame);
  return wire::make_features(scene.frame, scene.truth, sets);
}

struct Fixture {
  TimestampMs now = 1'000'000;
  FogNode node{three_cameras(), FogOptions{}, [this] { return now; }};
  std::map<std::string, std::shared_ptr<CapturingLink>> links;

  void attach_all() {
    for (auto cam : {"cam1", "cam2", "cam3"}) {
      links[cam] = std::make_shared<CapturingLink>();
      node.attach_edge(cam, links[cam]);
    }
  }
};

TEST(Fog, SubmitDispatchesToEveryConnectedEdge) {
  Fixture f;
  f.attach_all();
  const auto r = f.node.submit_query("grey shirt");
  EXPECT_EQ(r.query_id, "q1");
  EXPECT_EQ(r.dispatched, (std::vector<std::string>{"cam1", "cam2", "cam3"}));
  EXPECT_TRUE(r.warnings.empty());
  for (auto& [cam, link] : f.links) {
    ASSERT_EQ(link->dispatches.size(), 1u) << cam;
    EXPECT_EQ(link->dispatches[0].query_id, "q1");
    EXPECT_EQ(link->dispatches[0].action, wire::QueryDispatch::Action::Activate);
    EXPECT_EQ(link->dispatches[0].ttl_seconds, 300u);
  }
  EXPECT_EQ(f.node.submit_query("red shirt", {"cam2"}).dispatched, std::vector<std::string>{"cam2"});
}

TEST(Fog, UnknownGarmentRejectedWithoutDispatch) {
  Fixture f;
  f.attach_all();
  try {
    f.node.submit_query("red gizmo");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownGarment);
    EXPECT_EQ(e.detail(), "gizmo");
  }
  for (auto& [cam, link] : f.links) EXPECT_TRUE(link->dispatches.empty());
  EXPECT_TRUE(f.node.sessions().empty());
}

TEST(Fog, NoEdgesInScopeIsAWarning) {
  Fixture f;
  const auto r = f.node.submit_query("grey shirt");
  EXPECT_TRUE(r.dispatched.empty());
  EXPECT_EQ(r.warnings, std::vector<std::string>{"NoEdgesInScope"});
  EXPECT_EQ(f.node.session(r.query_id).state, SessionState::Active);
}

TEST(Fog, LateJoinerReceivesActiveSessions) {
  Fixture f;
  const auto r = f.node.submit_query("grey shirt", {}, 60);
  f.now += 20'000;
  auto link = std::make_shared<CapturingLink>();
  f.node.attach_edge("cam2", link);
  ASSERT_EQ(link->dispatches.size(), 1u);
  EXPECT_EQ(link->dispatches[0].query_id, r.query_id);
  EXPECT_EQ(link->dispatches[0].ttl_seconds, 40u);
  EXPECT_IVISE_ERROR(f.node.attach_edge("cam9", link), ErrorKind::UnknownEdge);
}

TEST(Fog, IngestMatchesOnlyTheGreyShirts) {
  Fixture f;
  f.attach_all();
  const auto q = f.node.submit_query("grey shirt").query_id;
  const auto msg = features(four_person_scene(), "cam2", 5);
  EXPECT_EQ(f.node.ingest_features(msg, wire::sender_id_for("cam2")), 4u);
  const auto reports = f.node.session_reports(q);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].person_index, 0);
  EXPECT_EQ(reports[1].person_index, 2);
  for (const auto& r : reports) {
    EXPECT_EQ(r.camera_id, "cam2");
    EXPECT_EQ(r.sequence, 5u);
    EXPECT_EQ(r.location, (query::GeoLocation{40.2, -74.2}));
    ASSERT_EQ(r.evidence.size(), 1u);
    EXPECT_EQ(r.evidence[0].section, Section::Torso);
  }
  EXPECT_EQ(f.node.stats().persons, 4u);
  EXPECT_EQ(f.node.stats().index_records, 4u);
  // Offline replay over the index gives the same matches.
  auto offline = f.node.offline_query("grey shirt");
  ASSERT_EQ(offline.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    offline[i].query_id = reports[i].query_id;
    EXPECT_EQ(offline[i], reports[i]);
  }
  EXPECT_EQ(f.node.offline_query("white jeans").size(), 1u);
  EXPECT_TRUE(f.node.offline_query("grey shirt", {0, 10}).empty());
}

TEST(Fog, IngestRejectsUnknownOrMismatchedSenders) {
  auto reg = query::CameraRegistry::parse("cam1 h:1 1 2\n");
  FogNode node(reg);
  auto msg = features(four_person_scene(), "cam7", 0);
  EXPECT_IVISE_ERROR(node.ingest_features(msg, wire::sender_id_for("cam7")), ErrorKind::UnknownEdge);
  msg.camera_id = "cam1";
  EXPECT_IVISE_ERROR(node.ingest_features(msg, 12345), ErrorKind::UnknownEdge);
  EXPECT_IVISE_ERROR(node.on_heartbeat({"camZ", 0, 0, 0}), ErrorKind::UnknownEdge);
  EXPECT_EQ(node.stats().index_records, 0u);
}

TEST(Fog, IngestBytesRoutesHeartbeatsAndFeatures) {
  Fixture f;
  f.attach_all();
  const auto hb = wire::encode(wire::sender_id_for("cam1"), wire::Heartbeat{"cam1", 1, 9, 4});
  EXPECT_EQ(f.node.ingest_bytes(hb), wire::Kind::Heartbeat);
  const auto edges = f.node.edges();
  EXPECT_EQ(edges[0].frames_seen, 9u);
  const auto msg = features(four_person_scene(), "cam1", 0);
  const auto bytes = wire::encode(wire::sender_id_for("cam1"), msg);
  EXPECT_EQ(f.node.ingest_bytes(bytes), wire::Kind::FrameFeatures);
  EXPECT_EQ(f.node.stats().bytes, hb.size() + bytes.size());
  EXPECT_EQ(f.node.edges()[0].bytes, bytes.size());  // feature bytes only
}

TEST(Fog, FeedsAreIndependentAndCloseOnCancel) {
  Fixture f;
  f.attach_all();
  const auto q = f.node.submit_query("grey shirt").query_id;
  auto a = f.node.operator_feed(q);
  auto b = f.node.operator_feed(q);
  f.node.ingest_features(features(four_person_scene(), "cam1", 0), wire::sender_id_for("cam1"));
  for (auto* feed : {&a, &b}) {
    auto first = feed->next(std::chrono::milliseconds(100));
    ASSERT_EQ(first.status, ReportFeed::Status::Report);
    EXPECT_EQ(first.report->person_index, 0);
    EXPECT_EQ(feed->next(std::chrono::milliseconds(100)).report->person_index, 2);
    EXPECT_EQ(feed->next(std::chrono::milliseconds(20)).status, ReportFeed::Status::Timeout);
  }
  f.node.cancel_query(q);
  EXPECT_EQ(a.next(std::chrono::milliseconds(100)).status, ReportFeed::Status::Closed);
  EXPECT_EQ(f.node.session(q).state, SessionState::Cancelled);
  for (auto& [cam, link] : f.links) {
    EXPECT_EQ(link->dispatches.back().action, wire::QueryDispatch::Action::Cancel);
  }
  EXPECT_IVISE_ERROR(f.node.operator_feed("q999"), ErrorKind::UnknownQuery);
  EXPECT_IVISE_ERROR(f.node.cancel_query("q999"), ErrorKind::UnknownQuery);
}

TEST(Fog, SessionsExpireAndEdgesGoStale) {
  Fixture f;
  f.attach_all();
  const auto q = f.node.submit_query("grey shirt", {}, 10).query_id;
  f.now += 9'000;
  f.node.on_heartbeat({"cam1", f.now, 0, 0});
  f.node.sweep();
  EXPECT_EQ(f.node.session(q).state, SessionState::Active);
  f.now += 7'000;
  f.node.sweep();
  EXPECT_EQ(f.node.session(q).state, SessionState::Expired);
  // cam1 heartbeat 7 s ago: fine; cam2/cam3 silent for 16 s > 3 intervals.
  for (const auto& e : f.node.edges()) {
    EXPECT_EQ(e.state, e.camera_id == "cam1" ? EdgeState::Connected : EdgeState::Disconnected)
        << e.camera_id;
  }
  // An expired session no longer produces reports.
  f.node.ingest_features(features(four_person_scene(), "cam1", 0), wire::sender_id_for("cam1"));
  EXPECT_TRUE(f.node.session_reports(q).empty());
}

TEST(Fog, OptionsFromConfig) {
  const auto o = FogOptions::from_config(Config::parse(
      "fog.heartbeat_interval_ms = 100\nfog.query_ttl_seconds = 7\nfog.cluster_seed = 9\n"));
  EXPECT_EQ(o.heartbeat_interval_ms, 100);
  EXPECT_EQ(o.default_ttl_seconds, 7u);
  EXPECT_EQ(o.cluster_seed, 9u);
}

TEST(Operator, JsonRequests) {
  Fixture f;
  f.attach_all();
  auto resp = json::parse(handle_operator_request(f.node, R"({"op":"submit","text":"grey shirt"})"));
  EXPECT_TRUE(resp["ok"].get<bool>());
  EXPECT_EQ(resp["query_id"], "q1");
  EXPECT_EQ(resp["dispatched"].size(), 3u);
  resp = json::parse(handle_operator_request(f.node, R"({"op":"submit","text":"red gizmo"})"));
  EXPECT_FALSE(resp["ok"].get<bool>());
  EXPECT_EQ(resp["error"], "UnknownGarment");
  EXPECT_EQ(resp["detail"], "gizmo");
  resp = json::parse(handle_operator_request(f.node, "not json"));
  EXPECT_FALSE(resp["ok"].get<bool>());
  resp = json::parse(handle_operator_request(f.node, R"({"op":"frobnicate"})"));
  EXPECT_FALSE(resp["ok"].get<bool>());

  f.node.ingest_features(features(four_person_scene(), "cam3", 1), wire::sender_id_for("cam3"));
  resp = json::parse(handle_operator_request(f.node, R"({"op":"offline","text":"grey shirt"})"));
  EXPECT_EQ(resp["reports"].size(), 2u);
  resp = json::parse(handle_operator_request(f.node, R"({"op":"edges"})"));
  EXPECT_EQ(resp["edges"].size(), 3u);
  resp = json::parse(handle_operator_request(f.node, R"({"op":"sessions"})"));
  EXPECT_EQ(resp["sessions"].size(), 1u);
  resp = json::parse(handle_operator_request(f.node, R"({"op":"stats"})"));
  EXPECT_TRUE(resp["ok"].get<bool>());
  resp = json::parse(handle_operator_request(f.node, R"({"op":"cancel","query_id":"q1"})"));
  EXPECT_EQ(resp["op"], "cancelled");
  resp = json::parse(handle_operator_request(f.node, R"({"op":"cancel","query_id":"q77"})"));
  EXPECT_EQ(resp["error"], "UnknownQuery");
}

TEST(Operator, ReportJsonRoundTrip) {
  query::MatchReport r;
  r.query_id = "q3";
  r.camera_id = "cam2";
  r.sequence = 17;
  r.timestamp = 1700000000555;
  r.location = {40.25, -74.125};
  r.person_index = 1;
  r.matched = {{Section::Torso, "grey", 1}, {Section::LeftLeg, "light-blue", 2}};
  r.evidence = {{Section::Torso, {1, 2, 3, 4}}};
  EXPECT_EQ(report_from_json(report_to_json(r)), r);
}

// End to end over TCP: an edge connection registers, the operator streams.
TEST(Server, EdgeAndOperatorOverSockets) {
  FogNode node(three_cameras());
  FogServer server(node, {"127.0.0.1", 0}, {"127.0.0.1", 0});
  auto op = net::connect_tcp("127.0.0.1", server.operator_port(), 2000);
  auto edge = net::connect_tcp("127.0.0.1", server.edge_port(), 2000);
  edge.write_all(wire::encode(wire::sender_id_for("cam1"), wire::Heartbeat{"cam1", 0, 0, 0}));
  for (int i = 0; i < 50 && node.edges()[0].state != EdgeState::Connected; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  op.write_all(std::string(R"({"op":"submit","text":"grey shirt"})") + "\n");
  auto line = op.read_line(2000);
  ASSERT_TRUE(line);
  auto resp = json::parse(*line);
  ASSERT_TRUE(resp["ok"].get<bool>()) << *line;
  EXPECT_EQ(resp["dispatched"], json::array({"cam1"}));
  const std::string qid = resp["query_id"];

  // The edge receives the dispatch.
  auto dispatch_bytes = wire::read_envelope(edge, 2000);
  ASSERT_TRUE(dispatch_bytes);
  EXPECT_EQ(std::get<wire::QueryDispatch>(wire::decode(*dispatch_bytes).message).query_id, qid);

  op.write_all(R"({"op":"stream","query_id":")" + qid + "\"}\n");
  resp = json::parse(*op.read_line(2000));
  EXPECT_EQ(resp["op"], "streaming");

  edge.write_all(wire::encode(wire::sender_id_for("cam1"), features(four_person_scene(), "cam1", 3)));
  for (int want : {0, 2}) {
    auto ev = op.read_line(5000);
    ASSERT_TRUE(ev);
    auto j = json::parse(*ev);
    EXPECT_EQ(j["event"], "report");
    EXPECT_EQ(j["report"]["person_index"], want);
    EXPECT_EQ(j["report"]["camera_id"], "cam1");
  }
  node.cancel_query(qid);
  auto closed = json::parse(*op.read_line(5000));
  EXPECT_EQ(closed["event"], "closed");
  EXPECT_EQ(closed["state"], "cancelled");
  server.stop();
}

}  // namespace
}  // namespace ivise

#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "ivise/index.hpp"
#include "support.hpp"

namespace ivise {
namespace {

using namespace index;

IndexRecord record(std::string cam, std::uint64_t seq, int person, std::string torso,
                   TimestampMs ts) {
  IndexRecord r;
  r.inserted_at = ts + 5;
  r.person.source = {std::move(cam), seq, person};
  r.person.timestamp = ts;
  r.person.sections[Section::Torso] = {{torso, 40}, {"white", 3}};
  r.person.boxes[Section::Torso] = {10, 20, 30, 40};
  r.person.missing = {Section::Hair};
  return r;
}

query::CameraRegistry registry() {
  return query::CameraRegistry::parse("cam1 h:1 1 2\ncam2 h:2 3 4\n");
}

TEST(Record, FormatParseRoundTrip) {
  auto r = record("cam1", 3, 1, "light-blue", 1700000000123);
  r.person.sections[Section::LeftLeg] = {{"black", 7}};
  r.person.boxes[Section::LeftLeg] = {0, 0, 5, 9};
  const auto line = format_record(r);
  EXPECT_EQ(line.rfind("rec ", 0), 0u);
  EXPECT_EQ(parse_record(line), r);
}

TEST(Record, ParseRejectsGarbage) {
  EXPECT_IVISE_ERROR(parse_record("rec x"), ErrorKind::ParseError);
  EXPECT_IVISE_ERROR(parse_record("nope 1 cam 1 1 1"), ErrorKind::ParseError);
}

TEST(Index, ScanFiltersByTimeScopeAndQuery) {
  FeatureIndex idx;
  idx.insert(record("cam1", 0, 0, "red", 100));
  idx.insert(record("cam1", 1, 0, "blue", 200));
  idx.insert(record("cam2", 0, 0, "red", 300));
  auto q = query::parse_query("red shirt");
  q.query_id = "q1";
  EXPECT_EQ(idx.scan(q, {}, registry()).size(), 2u);
  EXPECT_EQ(idx.scan(q, {150, 300}, registry()).size(), 1u);
  q.scope = {"cam1"};
  const auto r = idx.scan(q, {}, registry());
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].timestamp, 100);
  EXPECT_EQ(idx.size(), 3u);
}

TEST(Index, RejectsOutOfOrderSequence) {
  FeatureIndex idx;
  idx.insert(record("cam1", 5, 0, "red", 100));
  idx.insert(record("cam1", 5, 1, "red", 100));
  idx.insert(record("cam2", 1, 0, "red", 100));
  EXPECT_IVISE_ERROR(idx.insert(record("cam1", 4, 0, "red", 100)), ErrorKind::InvalidArgument);
}

TEST(Index, LogReplaysOnReopen) {
  testing::TempDir dir;
  const auto path = dir.path() / "index.log";
  {
    FeatureIndex idx(path);
    idx.insert(record("cam1", 0, 0, "red", 100));
    idx.insert(record("cam2", 2, 1, "grey", 200));
  }
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, kIndexHeader);
  }
  FeatureIndex again(path);
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again.snapshot()[1], record("cam2", 2, 1, "grey", 200));
  again.insert(record("cam1", 1, 0, "red", 300));
  FeatureIndex third(path);
  EXPECT_EQ(third.size(), 3u);
}

TEST(Index, BadHeaderRejected) {
  testing::TempDir dir;
  const auto path = dir.path() / "bad.log";
  std::ofstream(path) << "something else\n";
  EXPECT_IVISE_ERROR(FeatureIndex{path}, ErrorKind::ParseError);
}

TEST(Index, ConcurrentReadersSeeConsistentPrefix) {
  FeatureIndex idx;
  auto q = query::parse_query("red shirt");
  std::jthread writer([&] {
    for (std::uint64_t i = 0; i < 500; ++i) idx.insert(record("cam1", i, 0, "red", TimestampMs(i)));
  });
  std::size_t last = 0;
  for (int i = 0; i < 200; ++i) {
    const auto n = idx.scan(q, {}, registry()).size();
    EXPECT_GE(n, last);
    last = n;
  }
  writer.join();
  EXPECT_EQ(idx.scan(q, {}, registry()).size(), 500u);
}

}  // namespace
}  // namespace ivise

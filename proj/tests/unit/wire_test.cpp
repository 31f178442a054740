#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "ivise/wire.hpp"
#include "random_messages.hpp"
#include "support.hpp"

namespace ivise {
namespace {

using namespace wire;

TEST(Envelope, HeaderLayoutIsBigEndian) {
  Envelope e;
  e.kind = Kind::Ack;
  e.sender_id = 0x0102030405060708ULL;
  e.payload = {9, 9, 9};
  const auto bytes = encode_envelope(e);
  ASSERT_EQ(bytes.size(), kHeaderSize + 3);
  EXPECT_EQ(bytes[0], kVersion);
  EXPECT_EQ(bytes[1], std::uint8_t(Kind::Ack));
  for (int i = 0; i < 8; ++i) EXPECT_EQ(bytes[2 + i], i + 1);
  EXPECT_EQ(bytes[10], 0);
  EXPECT_EQ(bytes[13], 3);
  const auto back = decode_envelope(bytes);
  EXPECT_EQ(back.sender_id, e.sender_id);
  EXPECT_EQ(back.payload, e.payload);
}

TEST(Envelope, RejectsVersionKindTruncationAndTrailingBytes) {
  auto bytes = encode(7, Heartbeat{"cam1", 1, 2, 3});
  auto bad = bytes;
  bad[0] = 2;
  EXPECT_IVISE_ERROR(decode(bad), ErrorKind::VersionMismatch);
  bad = bytes;
  bad[1] = 77;
  EXPECT_IVISE_ERROR(decode(bad), ErrorKind::UnknownKind);
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    EXPECT_IVISE_ERROR(decode(std::span(bytes).first(cut)), ErrorKind::TruncatedPayload);
  }
  bad = bytes;
  bad.push_back(0);
  EXPECT_IVISE_ERROR(decode(bad), ErrorKind::MalformedPayload);
}

TEST(Messages, RandomRoundTripAndExactSize) {
  std::mt19937_64 rng(123);
  for (int i = 0; i < 2000; ++i) {
    const auto msg = testing::random_message(rng);
    const std::uint64_t sender = rng();
    const auto bytes = encode(sender, msg);
    EXPECT_EQ(bytes.size(), byte_size(msg));
    const auto back = decode(bytes);
    EXPECT_EQ(back.sender_id, sender);
    EXPECT_EQ(back.message, msg);
  }
}

TEST(Messages, PayloadInconsistentWithLengthIsMalformed) {
  // A payload whose inner string length overruns the payload.
  Heartbeat hb{"camera", 1, 2, 3};
  auto payload = encode_payload(hb);
  payload.resize(payload.size() - 4);
  EXPECT_ANY_THROW(decode_payload(Kind::Heartbeat, payload));
}

TEST(Rle, RoundTripAndRunSplitting) {
  std::vector<Rgb> px(600, Rgb{1, 2, 3});
  px.push_back({4, 5, 6});
  const auto enc = encode_rle(px);
  // 600 = 255 + 255 + 90, then one more run.
  EXPECT_EQ(enc.size(), 4u * 4);
  EXPECT_EQ(decode_rle(enc, px.size()), px);
  EXPECT_IVISE_ERROR(decode_rle(enc, px.size() + 1), ErrorKind::MalformedPayload);
  std::vector<std::uint8_t> zero_run{0, 1, 2, 3};
  EXPECT_IVISE_ERROR(decode_rle(zero_run, 0), ErrorKind::MalformedPayload);
}

TEST(Transmit, OnlyFramesWithPersons) {
  PoseResult p;
  EXPECT_FALSE(should_transmit(p));
  p.skeletons.emplace_back();
  EXPECT_TRUE(should_transmit(p));
}

TEST(SenderId, StableFnv1a) {
  // FNV-1a 64 of the empty string is the offset basis.
  EXPECT_EQ(sender_id_for(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(sender_id_for("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_NE(sender_id_for("cam1"), sender_id_for("cam2"));
}

TEST(Features, PackAndRebuildRegions) {
  auto frame = testing::solid_frame(200, 200, {50, 60, 70}, "cam3", 8);
  frame.timestamp = 999;
  PoseResult pose;
  Skeleton s;
  s.person_index = 0;
  s.set(PartKind::Neck, {100, 50});
  s.set(PartKind::LeftHip, {115, 110});
  s.set(PartKind::RightHip, {85, 110});
  pose.skeletons.push_back(s);
  const auto sets = regions::extract_all(pose, frame);
  const auto msg = make_features(frame, pose, sets);
  EXPECT_EQ(msg.camera_id, "cam3");
  EXPECT_EQ(msg.sequence, 8u);
  EXPECT_EQ(msg.timestamp, 999);
  ASSERT_EQ(msg.persons.size(), 1u);
  EXPECT_EQ(msg.persons[0].keypoints.size(), 3u);
  ASSERT_EQ(msg.persons[0].regions.size(), 1u);
  const auto& wr = msg.persons[0].regions[0];
  EXPECT_EQ(wr.section, Section::Torso);
  const auto& torso = sets[0].regions.at(Section::Torso);
  EXPECT_EQ(wr.pixels, torso.pixels);
  const auto rebuilt = to_pixel_region(wr, {"cam3", 8, 0});
  EXPECT_EQ(rebuilt.pixels, torso.pixels);
  EXPECT_EQ(rebuilt.bounding_box, torso.bounding_box);
  // A solid region compresses to a handful of runs.
  EXPECT_LT(byte_size(msg), 200u);
}

TEST(Baseline, RawReference) {
  EXPECT_EQ(raw_rgb_bytes(1920, 1080), 1920u * 1080 * 3);
  EXPECT_DOUBLE_EQ(raw_reference_bytes(1920, 1080), kRawReferenceBytes1080p);
  EXPECT_DOUBLE_EQ(raw_reference_bytes(960, 540), kRawReferenceBytes1080p / 4);
}

TEST(Socket, ReadEnvelopeOverLoopback) {
  net::TcpListener listener("127.0.0.1", 0);
  const auto port = listener.port();
  std::jthread client([port] {
    auto s = net::connect_tcp("127.0.0.1", port, 2000);
    s.write_all(encode(5, Ack{42, 1}));
  });
  auto conn = listener.accept(2000);
  ASSERT_TRUE(conn);
  const auto bytes = read_envelope(*conn, 2000);
  ASSERT_TRUE(bytes);
  const auto d = decode(*bytes);
  EXPECT_EQ(d.sender_id, 5u);
  EXPECT_EQ(std::get<Ack>(d.message), (Ack{42, 1}));
  client.join();
  EXPECT_FALSE(read_envelope(*conn, 2000));
}

}  // namespace
}  // namespace ivise

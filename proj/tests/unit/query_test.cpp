#include <gtest/gtest.h>

#include "ivise/query.hpp"
#include "support.hpp"

namespace ivise {
namespace {

using namespace query;

PersonDescription person(std::map<Section, std::vector<color::NamedColor>> sections,
                         std::string cam = "cam1") {
  PersonDescription p;
  p.source = {std::move(cam), 7, 2};
  p.timestamp = 1234;
  p.sections = std::move(sections);
  for (const auto& [s, c] : p.sections) p.boxes[s] = {1, 2, 3, 4};
  return p;
}

TEST(Parse, SingleClause) {
  const auto q = parse_query("grey shirt");
  ASSERT_EQ(q.clauses.size(), 1u);
  EXPECT_EQ(q.clauses[0], (Clause{Section::Torso, "grey", 1}));
}

TEST(Parse, JeansExpandToBothLegsWithMultiWordColor) {
  const auto q = parse_query("Light Blue JEANS");
  ASSERT_EQ(q.clauses.size(), 2u);
  EXPECT_EQ(q.clauses[0], (Clause{Section::LeftLeg, "light-blue", 1}));
  EXPECT_EQ(q.clauses[1], (Clause{Section::RightLeg, "light-blue", 1}));
}

TEST(Parse, CountsAndMultipleClauses) {
  const auto q = parse_query("2: red shirt, black hair, white face");
  ASSERT_EQ(q.clauses.size(), 3u);
  EXPECT_EQ(q.clauses[0].k, 2);
  EXPECT_EQ(q.clauses[1], (Clause{Section::Hair, "black", 1}));
  EXPECT_EQ(q.clauses[2], (Clause{Section::Face, "white", 1}));
}

TEST(Parse, ErrorsNameTheToken) {
  try {
    parse_query("red gizmo");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownGarment);
    EXPECT_EQ(e.detail(), "gizmo");
  }
  try {
    parse_query("mauve shirt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownColor);
    EXPECT_EQ(e.detail(), "mauve");
  }
  // Skin palette has no "green".
  EXPECT_IVISE_ERROR(parse_query("green face"), ErrorKind::UnknownColor);
  EXPECT_IVISE_ERROR(parse_query("   "), ErrorKind::EmptyQuery);
  EXPECT_IVISE_ERROR(parse_query("red shirt,"), ErrorKind::EmptyQuery);
  EXPECT_IVISE_ERROR(parse_query("shirt"), ErrorKind::UnknownColor);
}

TEST(Parse, RenderRoundTrips) {
  for (auto text : {"grey shirt", "light-blue pants, black hair", "3: red shirt, white face",
                    "blue jeans, 2: dark-green jacket"}) {
    const auto q = parse_query(text);
    EXPECT_EQ(parse_query(render_query(q)).clauses, q.clauses) << text;
  }
}

TEST(Match, TopKColorsOnly) {
  const auto p = person({{Section::Torso, {{"red", 50}, {"blue", 30}, {"white", 10}}}});
  EXPECT_TRUE(match(parse_query("red shirt"), p));
  EXPECT_FALSE(match(parse_query("blue shirt"), p));
  EXPECT_TRUE(match(parse_query("2: blue shirt"), p));
  EXPECT_FALSE(match(parse_query("2: white shirt"), p));
  EXPECT_TRUE(match(parse_query("9: white shirt"), p));
}

TEST(Match, AllClausesRequiredAndMissingSectionFails) {
  const auto p = person({{Section::Torso, {{"red", 50}}}, {Section::LeftLeg, {{"blue", 9}}}});
  EXPECT_FALSE(match(parse_query("red shirt, blue jeans"), p));
  EXPECT_FALSE(match(parse_query("black hair"), p));
  Query empty;
  EXPECT_FALSE(match(empty, p));
}

TEST(Report, CarriesLocationAndEvidence) {
  auto reg = CameraRegistry::parse("cam1 10.0.0.1:9000 40.5 -74.25\n");
  auto q = parse_query("red shirt, blue jeans");
  q.query_id = "q9";
  const auto p = person({{Section::Torso, {{"red", 5}}},
                         {Section::LeftLeg, {{"blue", 5}}},
                         {Section::RightLeg, {{"blue", 5}}}});
  const auto r = build_report(q, p, reg);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->query_id, "q9");
  EXPECT_EQ(r->camera_id, "cam1");
  EXPECT_EQ(r->sequence, 7u);
  EXPECT_EQ(r->person_index, 2);
  EXPECT_EQ(r->timestamp, 1234);
  EXPECT_EQ(r->location, (GeoLocation{40.5, -74.25}));
  EXPECT_EQ(r->matched.size(), 3u);
  EXPECT_EQ(r->evidence.size(), 3u);
  EXPECT_FALSE(build_report(parse_query("black shirt"), p, reg));
  EXPECT_IVISE_ERROR(build_report(q, person(p.sections, "camX"), reg), ErrorKind::UnknownCamera);
}

TEST(Registry, ParseErrors) {
  EXPECT_IVISE_ERROR(CameraRegistry::parse("cam1 host 1 2\n"), ErrorKind::ParseError);
  EXPECT_IVISE_ERROR(CameraRegistry::parse("cam1 h:1 x 2\n"), ErrorKind::ParseError);
  EXPECT_IVISE_ERROR(CameraRegistry::parse("cam1 h:1 1 2\ncam1 h:2 1 2\n"), ErrorKind::ParseError);
  const auto reg = CameraRegistry::parse("# comment\n\ncam2 h:1 1 2\n");
  ASSERT_TRUE(reg.find("cam2"));
  EXPECT_EQ(reg.find("cam2")->port, 1);
}

TEST(Scope, EmptyMeansAll) {
  Query q;
  EXPECT_TRUE(q.in_scope("anything"));
  q.scope = {"cam1"};
  EXPECT_TRUE(q.in_scope("cam1"));
  EXPECT_FALSE(q.in_scope("cam2"));
}

}  // namespace
}  // namespace ivise

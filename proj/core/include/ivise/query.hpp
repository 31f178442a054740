#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ivise/color.hpp"
#include "ivise/common.hpp"

// Operator queries, per-person color descriptions, matching and reports.
namespace ivise::query {

struct Clause {
  Section section = Section::Torso;
  std::string color;
  int k = 1;  // expected color count
  friend bool operator==(const Clause&, const Clause&) = default;
};

struct Query {
  std::string query_id;
  std::vector<Clause> clauses;
  TimestampMs issued_at = 0;
  std::vector<std::string> scope;  // empty: all cameras

  bool in_scope(std::string_view camera_id) const;
};

// Garment word -> sections. "jeans" maps to both legs.
class GarmentVocabulary {
 public:
  static const GarmentVocabulary& defaults();

  void add(std::string garment, std::vector<Section> sections);
  const std::vector<Section>* lookup(std::string_view garment) const;

 private:
  std::map<std::string, std::vector<Section>, std::less<>> table_;
};

// Grammar: comma-separated clauses, each `[count:] <color> <garment>`.
// Multi-word colors join with '-' ("light blue jeans" -> light-blue).
// Throws EmptyQuery, UnknownGarment, UnknownColor; detail() is the token.
Query parse_query(std::string_view text, const color::PaletteSet& palettes = {},
                  const GarmentVocabulary& vocabulary = GarmentVocabulary::defaults());

// Canonical text that parses back to the same clauses.
std::string render_query(const Query& query);

struct PersonDescription {
  PersonRef source;
  TimestampMs timestamp = 0;
  // Colors per present section, descending member count.
  std::map<Section, std::vector<color::NamedColor>> sections;
  std::map<Section, BoundingBox> boxes;
  std::vector<Section> missing;

  friend bool operator==(const PersonDescription&, const PersonDescription&) = default;
};

// All clauses satisfied -> the clause list; otherwise nullopt. A clause holds
// when its section is present and the color is among the first
// min(k, colors found) entries.
std::optional<std::vector<Clause>> match(const Query& query, const PersonDescription& person);

struct GeoLocation {
  double latitude = 0.0;
  double longitude = 0.0;
  friend bool operator==(const GeoLocation&, const GeoLocation&) = default;
};

struct CameraInfo {
  std::string camera_id;
  std::string host;
  int port = 0;
  GeoLocation location;
};

// `camera_id host:port latitude longitude` per line.
class CameraRegistry {
 public:
  static CameraRegistry parse(std::string_view text);
  static CameraRegistry load(const std::filesystem::path& path);

  void add(CameraInfo info);
  const CameraInfo* find(std::string_view camera_id) const;
  const std::map<std::string, CameraInfo, std::less<>>& cameras() const { return cameras_; }

 private:
  std::map<std::string, CameraInfo, std::less<>> cameras_;
};

struct Evidence {
  Section section = Section::Torso;
  BoundingBox box;
  friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct MatchReport {
  std::string query_id;
  std::string camera_id;
  std::uint64_t sequence = 0;
  TimestampMs timestamp = 0;
  GeoLocation location;
  int person_index = 0;
  std::vector<Clause> matched;
  std::vector<Evidence> evidence;

  friend bool operator==(const MatchReport&, const MatchReport&) = default;
};

// nullopt unless match() succeeds. Throws UnknownCamera for a matched person
// on an unregistered camera.
std::optional<MatchReport> build_report(const Query& query, const PersonDescription& person,
                                        const CameraRegistry& registry);

}  // namespace ivise::query

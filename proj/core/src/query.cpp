#include "ivise/query.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ivise/error.hpp"

namespace ivise::query {

bool Query::in_scope(std::string_view camera_id) const {
  return scope.empty() || std::find(scope.begin(), scope.end(), camera_id) != scope.end();
}

const GarmentVocabulary& GarmentVocabulary::defaults() {
  static const GarmentVocabulary vocab = [] {
    GarmentVocabulary v;
    for (auto g : {"shirt", "t-shirt", "tshirt", "top", "jacket"}) v.add(g, {Section::Torso});
    for (auto g : {"jeans", "pants", "trousers"}) v.add(g, {Section::LeftLeg, Section::RightLeg});
    for (auto g : {"hat", "hair"}) v.add(g, {Section::Hair});
    for (auto g : {"face", "skin"}) v.add(g, {Section::Face});
    return v;
  }();
  return vocab;
}

void GarmentVocabulary::add(std::string garment, std::vector<Section> sections) {
  table_[to_lower(garment)] = std::move(sections);
}

const std::vector<Section>* GarmentVocabulary::lookup(std::string_view garment) const {
  auto it = table_.find(garment);
  return it == table_.end() ? nullptr : &it->second;
}

Query parse_query(std::string_view text, const color::PaletteSet& palettes,
                  const GarmentVocabulary& vocabulary) {
  if (trim(text).empty()) throw Error(ErrorKind::EmptyQuery, "query is empty");
  Query query;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    auto clause_text = trim(text.substr(start, comma - start));
    start = comma + 1;
    if (clause_text.empty()) throw Error(ErrorKind::EmptyQuery, "empty clause", "");

    int k = 1;
    if (!clause_text.empty() && std::isdigit(static_cast<unsigned char>(clause_text.front()))) {
      auto colon = clause_text.find(':');
      if (colon == std::string_view::npos) {
        throw Error(ErrorKind::UnknownColor, "count must be written as 'N:'",
                    std::string(split_whitespace(clause_text).front()));
      }
      auto digits = trim(clause_text.substr(0, colon));
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
      if (ec != std::errc() || ptr != digits.data() + digits.size() || k < 1) {
        throw Error(ErrorKind::UnknownColor, "bad color count", std::string(digits));
      }
      clause_text = trim(clause_text.substr(colon + 1));
    }

    const auto tokens = split_whitespace(clause_text);
    if (tokens.empty()) throw Error(ErrorKind::EmptyQuery, "clause has no garment", "");
    const auto garment = to_lower(tokens.back());
    const auto* sections = vocabulary.lookup(garment);
    if (sections == nullptr) {
      throw Error(ErrorKind::UnknownGarment, "unknown garment '" + std::string(tokens.back()) + "'",
                  std::string(tokens.back()));
    }
    if (tokens.size() < 2) {
      throw Error(ErrorKind::UnknownColor, "clause names no color for '" + garment + "'", "");
    }
    std::string color;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      if (!color.empty()) color += '-';
      color += to_lower(tokens[i]);
    }
    for (auto section : *sections) {
      if (!palettes.for_section(section).contains(color)) {
        throw Error(ErrorKind::UnknownColor,
                    "'" + color + "' is not a " +
                        std::string(to_string(palettes.for_section(section).kind())) + " color",
                    color);
      }
      query.clauses.push_back({section, color, k});
    }
  }
  return query;
}

std::string render_query(const Query& query) {
  std::string out;
  const auto& clauses = query.clauses;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    const auto& c = clauses[i];
    std::string garment;
    switch (c.section) {
      case Section::Torso: garment = "shirt"; break;
      case Section::Hair: garment = "hair"; break;
      case Section::Face: garment = "face"; break;
      case Section::LeftLeg:
      case Section::RightLeg: {
        garment = "pants";
        const auto other = c.section == Section::LeftLeg ? Section::RightLeg : Section::LeftLeg;
        if (i + 1 < clauses.size() && clauses[i + 1].section == other &&
            clauses[i + 1].color == c.color && clauses[i + 1].k == c.k) {
          ++i;
        }
        break;
      }
    }
    if (!out.empty()) out += ", ";
    if (c.k != 1) out += std::to_string(c.k) + ": ";
    out += c.color + " " + garment;
  }
  return out;
}

std::optional<std::vector<Clause>> match(const Query& query, const PersonDescription& person) {
  if (query.clauses.empty()) return std::nullopt;
  for (const auto& clause : query.clauses) {
    auto it = person.sections.find(clause.section);
    if (it == person.sections.end()) return std::nullopt;
    auto colors = it->second;
    std::stable_sort(colors.begin(), colors.end(),
                     [](const color::NamedColor& a, const color::NamedColor& b) {
                       return a.member_count > b.member_count;
                     });
    const auto top = std::min(colors.size(), static_cast<std::size_t>(std::max(clause.k, 0)));
    const bool hit = std::any_of(colors.begin(), colors.begin() + static_cast<std::ptrdiff_t>(top),
                                 [&](const color::NamedColor& c) { return c.name == clause.color; });
    if (!hit) return std::nullopt;
  }
  return query.clauses;
}

CameraRegistry CameraRegistry::parse(std::string_view text) {
  CameraRegistry registry;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto where = "camera registry line " + std::to_string(line_no) + ": ";
    const auto fields = split_whitespace(body);
    if (fields.size() != 4) {
      throw Error(ErrorKind::ParseError, where + "expected 'camera_id host:port latitude longitude'");
    }
    CameraInfo info;
    info.camera_id = std::string(fields[0]);
    try {
      auto hp = parse_host_port(fields[1]);
      info.host = hp.host;
      info.port = hp.port;
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, where + e.what(), std::string(fields[1]));
    }
    auto number = [&](std::string_view f, double& out) {
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw Error(ErrorKind::ParseError, where + "bad coordinate", std::string(f));
      }
    };
    number(fields[2], info.location.latitude);
    number(fields[3], info.location.longitude);
    if (registry.find(info.camera_id)) {
      throw Error(ErrorKind::ParseError, where + "duplicate camera id", info.camera_id);
    }
    registry.add(std::move(info));
  }
  return registry;
}

CameraRegistry CameraRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open camera registry " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void CameraRegistry::add(CameraInfo info) {
  auto id = info.camera_id;
  cameras_[std::move(id)] = std::move(info);
}

const CameraInfo* CameraRegistry::find(std::string_view camera_id) const {
  auto it = cameras_.find(camera_id);
  return it == cameras_.end() ? nullptr : &it->second;
}

std::optional<MatchReport> build_report(const Query& query, const PersonDescription& person,
                                        const CameraRegistry& registry) {
  auto matched = match(query, person);
  if (!matched) return std::nullopt;
  const auto* camera = registry.find(person.source.camera_id);
  if (camera == nullptr) {
    throw Error(ErrorKind::UnknownCamera, "camera not in registry", person.source.camera_id);
  }
  MatchReport report;
  report.query_id = query.query_id;
  report.camera_id = person.source.camera_id;
  report.sequence = person.source.sequence;
  report.timestamp = person.timestamp;
  report.location = camera->location;
  report.person_index = person.source.person_index;
  for (const auto& clause : *matched) {
    auto box = person.boxes.find(clause.section);
    const bool seen = std::any_of(report.evidence.begin(), report.evidence.end(),
                                  [&](const Evidence& e) { return e.section == clause.section; });
    if (box != person.boxes.end() && !seen) report.evidence.push_back({clause.section, box->second});
  }
  report.matched = std::move(*matched);
  return report;
}

}  // namespace ivise::query

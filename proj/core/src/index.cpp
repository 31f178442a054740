#include "ivise/index.hpp"

#include <charconv>
#include <sstream>

#include "ivise/error.hpp"

namespace ivise::index {

namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T out{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::ParseError, "index record: bad " + std::string(what), std::string(text));
  }
  return out;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

Section section_or_throw(std::string_view name) {
  auto s = parse_section(name);
  if (!s) throw Error(ErrorKind::ParseError, "index record: unknown section", std::string(name));
  return *s;
}

}  // namespace

std::string format_record(const IndexRecord& record) {
  const auto& p = record.person;
  std::string out = "rec " + std::to_string(record.inserted_at) + " " + p.source.camera_id + " " +
                    std::to_string(p.source.sequence) + " " +
                    std::to_string(p.source.person_index) + " " + std::to_string(p.timestamp);
  for (const auto& [section, colors] : p.sections) {
    out += " ";
    out += to_string(section);
    out += ":";
    for (std::size_t i = 0; i < colors.size(); ++i) {
      if (i) out += ",";
      out += colors[i].name + "=" + std::to_string(colors[i].member_count);
    }
    if (auto box = p.boxes.find(section); box != p.boxes.end()) {
      const auto& b = box->second;
      out += "@" + std::to_string(b.min_x) + "," + std::to_string(b.min_y) + "," +
             std::to_string(b.max_x) + "," + std::to_string(b.max_y);
    }
  }
  if (!p.missing.empty()) {
    out += " missing:";
    for (std::size_t i = 0; i < p.missing.size(); ++i) {
      if (i) out += ",";
      out += to_string(p.missing[i]);
    }
  }
  return out;
}

IndexRecord parse_record(std::string_view line) {
  const auto fields = split_whitespace(line);
  if (fields.size() < 6 || fields[0] != "rec") {
    throw Error(ErrorKind::ParseError, "index record: expected 'rec' with 5 fixed fields",
                std::string(line));
  }
  IndexRecord record;
  record.inserted_at = parse_number<TimestampMs>(fields[1], "inserted_at");
  record.person.source.camera_id = std::string(fields[2]);
  record.person.source.sequence = parse_number<std::uint64_t>(fields[3], "sequence");
  record.person.source.person_index = parse_number<int>(fields[4], "person_index");
  record.person.timestamp = parse_number<TimestampMs>(fields[5], "timestamp");
  for (std::size_t i = 6; i < fields.size(); ++i) {
    const auto field = fields[i];
    const auto colon = field.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorKind::ParseError, "index record: expected section:...", std::string(field));
    }
    const auto head = field.substr(0, colon);
    auto body = field.substr(colon + 1);
    if (head == "missing") {
      for (auto name : split(body, ',')) record.person.missing.push_back(section_or_throw(name));
      continue;
    }
    const auto section = section_or_throw(head);
    if (auto at = body.find('@'); at != std::string_view::npos) {
      const auto parts = split(body.substr(at + 1), ',');
      if (parts.size() != 4) {
        throw Error(ErrorKind::ParseError, "index record: bad bounding box", std::string(field));
      }
      record.person.boxes[section] = {parse_number<int>(parts[0], "box"), parse_number<int>(parts[1], "box"),
                                      parse_number<int>(parts[2], "box"), parse_number<int>(parts[3], "box")};
      body = body.substr(0, at);
    }
    auto& colors = record.person.sections[section];
    if (body.empty()) continue;
    for (auto item : split(body, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        throw Error(ErrorKind::ParseError, "index record: expected name=count", std::string(item));
      }
      colors.push_back({std::string(item.substr(0, eq)),
                        parse_number<std::size_t>(item.substr(eq + 1), "member_count")});
    }
  }
  return record;
}

FeatureIndex::FeatureIndex(const std::filesystem::path& log_path) {
  if (std::filesystem::exists(log_path)) {
    std::ifstream in(log_path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read index log " + log_path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto body = trim(line);
      if (line_no == 1) {
        if (body != kIndexHeader) {
          throw Error(ErrorKind::ParseError, "index log lacks 'ivise-index v1' header",
                      log_path.string());
        }
        continue;
      }
      if (body.empty()) continue;
      auto record = parse_record(body);
      check_order(record);
      last_sequence_[record.person.source.camera_id] = record.person.source.sequence;
      records_.push_back(std::move(record));
    }
  }
  const bool fresh = !std::filesystem::exists(log_path) || std::filesystem::file_size(log_path) == 0;
  log_.emplace(log_path, std::ios::app);
  if (!*log_) throw Error(ErrorKind::IoError, "cannot append to index log " + log_path.string());
  if (fresh) *log_ << kIndexHeader << '\n' << std::flush;
}

void FeatureIndex::check_order(const IndexRecord& record) const {
  auto it = last_sequence_.find(record.person.source.camera_id);
  if (it != last_sequence_.end() && record.person.source.sequence < it->second) {
    throw Error(ErrorKind::InvalidArgument, "index records must be ordered by sequence per camera",
                record.person.source.camera_id);
  }
}

void FeatureIndex::insert(IndexRecord record) {
  std::unique_lock lock(mutex_);
  check_order(record);
  if (log_) *log_ << format_record(record) << '\n' << std::flush;
  last_sequence_[record.person.source.camera_id] = record.person.source.sequence;
  records_.push_back(std::move(record));
}

std::vector<query::MatchReport> FeatureIndex::scan(const query::Query& query,
                                                   const TimeRange& range,
                                                   const query::CameraRegistry& registry) const {
  std::shared_lock lock(mutex_);
  std::vector<query::MatchReport> reports;
  for (const auto& record : records_) {
    if (!range.contains(record.person.timestamp)) continue;
    if (!query.in_scope(record.person.source.camera_id)) continue;
    if (auto report = query::build_report(query, record.person, registry)) {
      reports.push_back(std::move(*report));
    }
  }
  return reports;
}

std::size_t FeatureIndex::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::vector<IndexRecord> FeatureIndex::snapshot() const {
  std::shared_lock lock(mutex_);
  return records_;
}

}  // namespace ivise::index

#include "ivise/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ivise/common.hpp"
#include "ivise/error.hpp"

namespace ivise {

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Config Config::parse(std::string_view text) {
  Config config;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ParseError,
                  "config line " + std::to_string(line_no) + ": expected key = value",
                  std::string(body));
    }
    auto key = trim(body.substr(0, eq));
    auto value = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorKind::ParseError,
                  "config line " + std::to_string(line_no) + ": empty key");
    }
    config.set(std::string(key), std::string(value));
  }
  return config;
}

void Config::set(std::string key, std::string value) {
  entries_[std::move(key)] = std::move(value);
}

bool Config::has(std::string_view key) const { return entries_.find(key) != entries_.end(); }

std::optional<std::string> Config::get(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_or(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

double Config::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    double d = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, "config key " + std::string(key) + " is not a number",
                *v);
  }
}

long long Config::get_int(std::string_view key, long long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw Error(ErrorKind::InvalidArgument,
                "config key " + std::string(key) + " is not an integer", *v);
  }
  return out;
}

HostPort parse_host_port(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw Error(ErrorKind::InvalidArgument, "expected host:port", std::string(text));
  }
  HostPort hp;
  hp.host = std::string(text.substr(0, colon));
  if (hp.host.empty()) hp.host = "127.0.0.1";
  auto port = text.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), hp.port);
  if (ec != std::errc() || ptr != port.data() + port.size() || hp.port < 0 || hp.port > 65535) {
    throw Error(ErrorKind::InvalidArgument, "bad port", std::string(text));
  }
  return hp;
}

}  // namespace ivise

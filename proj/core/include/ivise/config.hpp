#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace ivise {

// Flat `key = value` configuration. Lines starting with '#' are comments.
// Keys are dotted (`fog.listen_addr`, `palette.hair`, ...).
class Config {
 public:
  Config() = default;

  static Config load(const std::filesystem::path& path);
  static Config parse(std::string_view text);

  void set(std::string key, std::string value);
  bool has(std::string_view key) const;

  std::optional<std::string> get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;

  const std::map<std::string, std::string, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string, std::less<>> entries_;
};

struct HostPort {
  std::string host;
  int port = 0;
};

// Parses `host:port`; throws InvalidArgument.
HostPort parse_host_port(std::string_view text);

}  // namespace ivise

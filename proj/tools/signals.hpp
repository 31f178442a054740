#pragma once

#include <csignal>
#include <stop_token>

// SIGINT/SIGTERM request a stop on the shared source.
inline std::stop_source& shutdown_source() {
  static std::stop_source source;
  return source;
}

inline void install_shutdown_handlers() {
  auto handler = [](int) { shutdown_source().request_stop(); };
  std::signal(SIGINT, handler);
  std::signal(SIGTERM, handler);
}

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ivise/config.hpp"
#include "ivise/edge.hpp"
#include "ivise/error.hpp"
#include "signals.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Edge agent: extracts body-region features and sends them to the fog"};
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "config file (key = value)")->required()->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a config key, key=value (repeatable)");
  CLI11_PARSE(app, argc, argv);

  try {
    auto config = ivise::Config::load(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ivise::Error(ivise::ErrorKind::InvalidArgument, "--set needs key=value", kv);
      config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    install_shutdown_handlers();
    ivise::edge::run_pipeline(config, shutdown_source().get_token());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

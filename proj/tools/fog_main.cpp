#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ivise/config.hpp"
#include "ivise/fog.hpp"
#include "signals.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fog node: clusters region colors, matches operator queries, keeps the index"};
  std::string config_path;
  app.add_option("--config", config_path, "config file (key = value)")->required()->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = ivise::Config::load(config_path);
    install_shutdown_handlers();
    ivise::fog::run_fog(config, shutdown_source().get_token());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

#include "ivise/sim.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Runs an in-process fog with N synthetic edges and writes per-frame metrics"};
  int edges = 1;
  int frames = 100;
  std::vector<std::string> queries;
  std::uint64_t seed = 1;
  std::string out = "sim-out";
  int persons = 1;
  int noise = 0;
  double drop = 0.5;
  app.add_option("--edges", edges, "edge count")->check(CLI::PositiveNumber);
  app.add_option("--frames", frames, "frames per edge")->check(CLI::NonNegativeNumber);
  app.add_option("--query", queries, "query text, e.g. \"red hat, blue jeans\" (repeatable)")->required();
  app.add_option("--seed", seed, "scene seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--persons", persons, "persons per edge scene")->check(CLI::NonNegativeNumber);
  app.add_option("--noise", noise, "uniform per-channel noise level")->check(CLI::Range(0, 255));
  app.add_option("--drop-ratio", drop, "edge frame drop ratio")->check(CLI::Range(0.0, 0.99));
  CLI11_PARSE(app, argc, argv);

  try {
    ivise::sim::TopologyOptions options;
    options.edges = edges;
    options.frames = frames;
    options.queries = queries;
    options.seed = seed;
    options.drop_ratio = drop;
    options.scene_for_edge = [&](int i) {
      return ivise::sim::random_scene(seed + static_cast<std::uint64_t>(i), persons, 1920, 1080, noise);
    };
    const auto metrics = ivise::sim::run_topology(options);
    const auto path = ivise::sim::emit_metrics(metrics, out);
    std::cout << "frames " << metrics.rows.size() << "\n"
              << "reports " << metrics.reports.size() << "\n"
              << "precision " << metrics.precision << "\n"
              << "recall " << metrics.recall << "\n"
              << "mean_reduction_ratio " << metrics.mean_reduction_ratio << "\n"
              << "first_report_ms " << metrics.first_report_ms << "\n"
              << "metrics " << path.string() << "\n";
    for (const auto& r : metrics.reports) {
      std::cout << "match " << r.query_id << " " << r.camera_id << " seq=" << r.sequence
                << " person=" << r.person_index << " lat=" << r.location.latitude
                << " lon=" << r.location.longitude << "\n";
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

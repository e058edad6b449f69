// Command-line driver: scenario generation, the individual pipeline
// stages, and the full run. See README.md for the output manifest.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "floodgraph/pipeline.hpp"

namespace {

floodgraph::PipelineConfig make_config(const std::string& config_path, bool config_required,
                                       const std::string& subcommand) {
  if (config_path.empty()) {
    if (config_required)
      throw std::runtime_error("'" + subcommand + "' needs --config <path> (run 'generate' "
                               "first to produce one)");
    return floodgraph::PipelineConfig{};
  }
  return floodgraph::load_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"watershed-graph flash-flood susceptibility pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false, out_set = false;
  app.add_option("--config", config_path, "pipeline configuration file")->expected(1);
  app.add_option_function<std::string>(
         "--out", [&](const std::string& v) { out_dir = v; out_set = true; },
         "output directory (overrides the config)")
      ->expected(1);
  app.add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; },
         "master seed (overrides the config)")
      ->expected(1);

  int gen_size = 0;
  auto* generate = app.add_subcommand("generate", "write a synthetic scenario bundle + config");
  generate->add_option("--size", gen_size, "square scenario size in cells");
  generate->fallthrough();

  for (const auto& stage : floodgraph::pipeline_stage_names())
    app.add_subcommand(stage, "run the " + stage + " stage")->fallthrough();
  app.add_subcommand("run", "run the full pipeline and write run_report.json")->fallthrough();

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    floodgraph::PipelineConfig cfg = make_config(config_path, sub != "generate", sub);
    if (seed_set) {
      cfg.seed = seed;
      cfg.train.seed = seed;
    }
    if (out_set) cfg.out_dir = out_dir;

    if (sub == "generate") {
      if (gen_size > 0) {
        cfg.rows = gen_size;
        cfg.cols = gen_size;
      }
      const auto written = floodgraph::write_scenario_bundle(cfg);
      std::printf("scenario written under %s (config: %s/scenario.cfg)\n",
                  (written.out_dir + "/scenario").c_str(), cfg.out_dir.c_str());
    } else if (sub == "run") {
      floodgraph::run_pipeline(cfg);
      std::printf("pipeline complete: %s/run_report.json\n", cfg.out_dir.c_str());
    } else {
      floodgraph::run_stage(cfg, sub);
      std::printf("stage %s complete (report_%s.json)\n", sub.c_str(), sub.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

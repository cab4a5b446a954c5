#include <CLI11.hpp>
#include <iostream>

#include "mmot/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "GGR pipeline for multi-marginal optimal transport with Coulomb cost: "
      "global multistart on a coarse equal-mass mesh, then refine / "
      "support-lift / proximal block coordinate descent."};

  mmot::runner::RunOptions opts;
  std::string out, seed_str;
  int levels = -1;
  app.add_option("--config", opts.config_path, "Run configuration (JSON)")
      ->required();
  app.add_option("--out", out, "Output directory (overrides config)");
  app.add_option("--seed", seed_str, "Master RNG seed (overrides config)");
  app.add_option("--levels", levels, "Refinement levels (overrides config)");
  app.add_option("--threads", opts.threads,
                 "Worker threads for multistart and assembly");
  app.add_flag("--resume", opts.resume,
               "Continue an interrupted run at the first missing level");
  app.add_flag("--emit-maps", opts.emit_maps,
               "Write maps.csv (and slices.csv when configured)");
  app.add_flag("--emit-traces", opts.emit_traces, "Write trace.csv");
  app.add_flag("--emit-timings", opts.emit_timings,
               "Include wall-clock times in report.json");
  CLI11_PARSE(app, argc, argv);

  if (!out.empty()) opts.out_dir = out;
  if (!seed_str.empty()) opts.seed = std::stoull(seed_str);
  if (levels >= 0) opts.levels = levels;

  return mmot::runner::run(opts, std::cerr);
}

#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmot/io.hpp"

namespace mmot::runner {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> levels;
  int threads = 1;
  bool resume = false;
  bool emit_maps = false;
  bool emit_traces = false;
  bool emit_timings = false;
};

struct ParsedConfig {
  DensitySpec spec = DensitySpec::builtin("system1");
  GgrConfig ggr;
  std::string out;
  std::vector<std::pair<std::array<double, 2>, double>> slices;
  json echo;
};

namespace detail {

inline DensitySpec parse_system(const json& sys, std::vector<std::string>& issues) {
  try {
    if (sys.is_string()) return DensitySpec::builtin(sys.get<std::string>());
    if (!sys.is_object()) {
      issues.push_back("system: must be a builtin name or a density object");
      return DensitySpec::builtin("system1");
    }
    if (sys.value("kind", "") != "gaussian_mixture") {
      issues.push_back("system.kind: only 'gaussian_mixture' is supported");
      return DensitySpec::builtin("system1");
    }
    const int dim = sys.value("dim", 1);
    const int electrons = sys.value("electrons", 0);
    const std::string name = sys.value("name", "custom");
    if (electrons < 3) issues.push_back("system.electrons: must be >= 3");
    if (!sys.contains("terms") || !sys["terms"].is_array() || sys["terms"].empty())
      issues.push_back("system.terms: nonempty array required");
    if (!sys.contains("domain")) issues.push_back("system.domain: required");
    if (!issues.empty() && (electrons < 3 || !sys.contains("domain")))
      return DensitySpec::builtin("system1");
    if (dim == 1) {
      const auto dom = sys["domain"].get<std::vector<double>>();
      std::vector<std::array<double, 3>> terms;
      for (const auto& t : sys["terms"])
        terms.push_back({t.value("weight", 1.0), t.at("center").get<double>(),
                         t.at("alpha").get<double>()});
      return gaussian_mixture_1d(name, terms, dom.at(0), dom.at(1), electrons);
    }
    if (dim == 2) {
      const auto dom = sys["domain"].get<std::vector<std::vector<double>>>();
      std::vector<std::array<double, 4>> terms;
      for (const auto& t : sys["terms"]) {
        const auto c = t.at("center").get<std::vector<double>>();
        terms.push_back({t.value("weight", 1.0), c.at(0), c.at(1),
                         t.at("alpha").get<double>()});
      }
      return gaussian_mixture_2d(name, terms, dom.at(0).at(0), dom.at(0).at(1),
                                 dom.at(1).at(0), dom.at(1).at(1), electrons);
    }
    issues.push_back("system.dim: must be 1 or 2");
  } catch (const json::exception& e) {
    issues.push_back(std::string("system: ") + e.what());
  } catch (const Error& e) {
    issues.push_back(std::string("system: ") + e.what());
  }
  return DensitySpec::builtin("system1");
}

inline void parse_override_group(const json& j, const std::string& key,
                                 std::vector<std::string>& issues,
                                 GgrConfig& cfg,
                                 std::optional<double> LevelOverride::*field) {
  if (!j.contains(key)) return;
  if (!j[key].is_object()) {
    issues.push_back("overrides." + key + ": must map level -> value");
    return;
  }
  for (const auto& [lvl, val] : j[key].items()) {
    try {
      cfg.overrides[std::stoi(lvl)].*field = val.get<double>();
    } catch (...) {
      issues.push_back("overrides." + key + "." + lvl + ": bad level or value");
    }
  }
}

}  // namespace detail

/// Parses and validates a run configuration, collecting every offending key.
inline ParsedConfig parse_config(const json& j, const RunOptions& opts) {
  std::vector<std::string> issues;
  static const std::vector<std::string> known = {
      "system", "K0", "levels", "n_starts", "seed", "sigma", "eps_inner",
      "max_sweeps", "energy_stall_tol", "max_newton", "gr_scale",
      "support_threshold", "keep_top", "compute_err", "overrides", "slices",
      "out"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      issues.push_back(key + ": unknown key");

  ParsedConfig pc;
  if (!j.contains("system")) issues.push_back("system: required");
  pc.spec = j.contains("system") ? detail::parse_system(j["system"], issues)
                                 : DensitySpec::builtin("system1");

  const auto check_num = [&](const char* key, double lo, double def,
                             bool integer = false) -> double {
    if (!j.contains(key)) return def;
    if (!j[key].is_number() || (integer && !j[key].is_number_integer())) {
      issues.push_back(std::string(key) + ": must be a number");
      return def;
    }
    const double v = j[key].get<double>();
    if (v < lo) {
      issues.push_back(std::string(key) + ": must be >= " + std::to_string(lo));
      return def;
    }
    return v;
  };

  GgrConfig& g = pc.ggr;
  g.K0 = static_cast<int>(check_num("K0", 2, 12, true));
  if (pc.spec.dimension() == 2 && g.K0 < 4)
    issues.push_back("K0: must be >= 4 for 2D systems");
  g.levels = static_cast<int>(check_num("levels", 0, 0, true));
  g.multistart.n_starts = static_cast<int>(check_num("n_starts", 1, 200, true));
  g.multistart.seed = static_cast<std::uint64_t>(check_num("seed", 0, 0, true));
  g.multistart.keep_top = static_cast<int>(check_num("keep_top", 1, 1, true));
  g.multistart.pbcd.sigma = check_num("sigma", 1e-300, 1e-3);
  g.multistart.pbcd.eps_inner = check_num("eps_inner", 0, 1e-9);
  g.multistart.pbcd.max_sweeps = static_cast<long>(check_num("max_sweeps", 1, 1000000, true));
  g.multistart.pbcd.energy_stall_tol = check_num("energy_stall_tol", 0, 1e-8);
  g.multistart.pbcd.max_newton = static_cast<long>(check_num("max_newton", 1, 100000, true));
  g.gr_scale = check_num("gr_scale", 1e-300, 1.0);
  g.support_threshold = check_num("support_threshold", 0, 1e-8);
  g.compute_err = j.value("compute_err", true);

  detail::parse_override_group(j.value("overrides", json::object()), "beta",
                               issues, g, &LevelOverride::beta);
  detail::parse_override_group(j.value("overrides", json::object()), "eps_outer",
                               issues, g, &LevelOverride::eps_outer);
  detail::parse_override_group(j.value("overrides", json::object()), "sigma",
                               issues, g, &LevelOverride::sigma);

  if (j.contains("slices")) {
    if (!j["slices"].is_array()) {
      issues.push_back("slices: must be an array");
    } else {
      for (const auto& s : j["slices"]) {
        try {
          const auto c = s.at("center").get<std::vector<double>>();
          pc.slices.push_back(
              {{c.at(0), c.size() > 1 ? c.at(1) : 0.0}, s.at("radius").get<double>()});
        } catch (...) {
          issues.push_back("slices: entries need center=[x,y] and radius");
        }
      }
    }
  }

  pc.out = opts.out_dir.value_or(j.value("out", ""));
  if (pc.out.empty()) issues.push_back("out: required (or pass --out)");

  if (opts.seed) g.multistart.seed = *opts.seed;
  if (opts.levels) g.levels = *opts.levels;
  g.multistart.threads = std::max(1, opts.threads);
  g.assembly_threads = std::max(1, opts.threads);

  if (!issues.empty()) throw ConfigError(issues);

  pc.echo = j;
  pc.echo["seed"] = g.multistart.seed;
  pc.echo["levels"] = g.levels;
  pc.echo["out"] = pc.out;
  return pc;
}

namespace detail {

inline std::string level_dir(const std::string& out, int level) {
  return out + "/level_" + std::to_string(level);
}

inline bool level_complete(const std::string& out, int level) {
  const std::string d = level_dir(out, level);
  return fs::exists(d + "/mesh.json") && fs::exists(d + "/plan.bin") &&
         fs::exists(d + "/report.json");
}

inline void write_checkpoint(const std::string& out, const LevelResult& lr,
                             const Mesh& mesh, const PlanSet& plan,
                             bool with_timing) {
  const std::string d = level_dir(out, lr.level);
  fs::create_directories(d);
  io::write_text(d + "/mesh.json.tmp", io::mesh_to_json(mesh).dump(2) + "\n");
  io::save_plan(plan, d + "/plan.bin.tmp");
  // Per-level sweep trace, concatenated into trace.csv on demand.
  std::ostringstream trace;
  io::append_trace_csv(trace, lr.level, lr.report);
  io::write_text(d + "/trace.csv.tmp", trace.str());
  io::write_text(d + "/report.json.tmp",
                 io::level_to_json(lr, with_timing).dump(2) + "\n");
  // report.json lands last: it marks the level as complete.
  fs::rename(d + "/mesh.json.tmp", d + "/mesh.json");
  fs::rename(d + "/plan.bin.tmp", d + "/plan.bin");
  fs::rename(d + "/trace.csv.tmp", d + "/trace.csv");
  fs::rename(d + "/report.json.tmp", d + "/report.json");
}

}  // namespace detail

/// Executes a configured run end to end, writing level checkpoints and the
/// final report into the output directory. With `resume`, completed levels
/// are loaded from disk and the pipeline continues at the first missing one.
inline int run(const RunOptions& opts, std::ostream& err_stream) {
  json config;
  try {
    config = json::parse(io::read_text(opts.config_path));
  } catch (const std::exception& e) {
    err_stream << json{{"error", "cannot read config"}, {"detail", e.what()}}.dump()
               << "\n";
    return 2;
  }

  ParsedConfig pc;
  try {
    pc = parse_config(config, opts);
  } catch (const ConfigError& e) {
    err_stream << json{{"error", "invalid config"}, {"issues", e.issues}}.dump()
               << "\n";
    return 2;
  }

  try {
    fs::create_directories(pc.out);

    GgrResume resume_state;
    const GgrResume* resume_ptr = nullptr;
    if (opts.resume) {
      int last_complete = -1;
      for (int l = 0; l <= pc.ggr.levels; ++l) {
        if (detail::level_complete(pc.out, l))
          last_complete = l;
        else
          break;
      }
      if (last_complete >= 0) {
        const std::string d = detail::level_dir(pc.out, last_complete);
        resume_state.level = last_complete;
        resume_state.mesh =
            io::mesh_from_json(json::parse(io::read_text(d + "/mesh.json")));
        resume_state.plan = io::load_plan(d + "/plan.bin");
        resume_ptr = &resume_state;
      }
    }

    PlanSet final_plan;
    Mesh final_mesh;
    bool have_final = false;
    const auto on_level = [&](const LevelResult& lr, const Mesh& mesh,
                              const PlanSet& plan) {
      detail::write_checkpoint(pc.out, lr, mesh, plan, opts.emit_timings);
      final_plan = plan;
      final_mesh = mesh;
      have_final = true;
    };

    GgrResult result;
    if (resume_ptr && resume_ptr->level >= pc.ggr.levels) {
      // Nothing left to solve; regenerate the final report from checkpoints.
      result.ok = true;
      final_mesh = resume_state.mesh;
      final_plan = resume_state.plan;
      have_final = true;
    } else {
      result = ggr_run(pc.spec, pc.ggr, on_level, resume_ptr);
      if (!result.ok) {
        err_stream << json{{"error", "run failed"}, {"detail", result.error}}.dump()
                   << "\n";
        return 1;
      }
    }

    // Final report: merged from the per-level checkpoint reports so that
    // resumed and uninterrupted runs emit identical bytes.
    json levels = json::array();
    for (int l = 0; l <= pc.ggr.levels; ++l) {
      const std::string f = detail::level_dir(pc.out, l) + "/report.json";
      if (!fs::exists(f)) break;
      levels.push_back(json::parse(io::read_text(f)));
    }
    json report{{"config", pc.echo},
                {"system", pc.spec.name()},
                {"levels", levels}};
    io::write_text(pc.out + "/report.json", report.dump(2) + "\n");

    if (opts.emit_traces) {
      std::ostringstream all;
      all << "level,sweep,f,f_beta,comp_violation,feas,kkt,iterate_gap,time\n";
      for (int l = 0; l <= pc.ggr.levels; ++l) {
        const std::string f = detail::level_dir(pc.out, l) + "/trace.csv";
        if (fs::exists(f)) all << io::read_text(f);
      }
      io::write_text(pc.out + "/trace.csv", all.str());
    }

    if (opts.emit_maps && have_final) {
      io::write_maps_csv(transport_maps(final_plan, final_mesh), final_mesh,
                         pc.out + "/maps.csv");
      if (!pc.slices.empty() && final_mesh.dim == 2) {
        std::vector<SlicePoints> slices;
        for (const auto& [center, radius] : pc.slices)
          slices.push_back(slice_points(final_plan, final_mesh, center, radius));
        io::write_slices_csv(slices, pc.out + "/slices.csv");
      }
    }
    return 0;
  } catch (const Error& e) {
    err_stream << json{{"error", "run failed"}, {"detail", e.what()}}.dump()
               << "\n";
    return 1;
  } catch (const std::exception& e) {
    err_stream << json{{"error", "unexpected failure"}, {"detail", e.what()}}.dump()
               << "\n";
    return 1;
  }
}

}  // namespace mmot::runner

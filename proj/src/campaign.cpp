#include "bmflc/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bmflc/csv.hpp"
#include "bmflc/parallel.hpp"

namespace bmflc {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
}

/// Sidecar next to an output file: tool version and the config that produced it.
void write_meta(const fs::path& file, const CampaignConfig& cfg, const std::string& command) {
  const Json config = to_json(cfg);
  Json meta{{"tool", "bmflc"},
            {"version", BMFLC_VERSION},
            {"command", command},
            {"file", file.filename().string()},
            {"config_hash", json_hash(config)},
            {"config", config}};
  write_json_file(file.string() + ".meta.json", meta);
}

std::vector<double> default_sweep(const LimitsConfig& l) {
  switch (l.kind) {
    case LimitKind::Nnu: {
      std::vector<double> v;
      for (int n = 1; n <= l.nnu_max; ++n) v.push_back(n);
      return v;
    }
    case LimitKind::Band: return {6.0, 10.0, 20.0, 40.0, 70.0, 100.0};
    case LimitKind::Noise: return {0.001, 0.01, 0.1, 1.0, 3.0, 10.0, 30.0};
  }
  return {};
}

std::string fixed_width(const std::string& s, std::size_t w) {
  return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' ');
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

struct TunedMethod {
  std::optional<StepSizeParams> params;
  std::optional<GeneralTuneResult> tuning;
  std::string error;
};

Json tuned_to_json(const TunedMethod& t) {
  Json j;
  if (!t.params) {
    j["error"] = t.error;
    return j;
  }
  j["params"] = to_json(*t.params);
  if (t.tuning) {
    j["search_point"] = std::vector<double>(t.tuning->x.data(), t.tuning->x.data() + t.tuning->x.size());
    Json per = Json::array();
    for (const auto& m : t.tuning->per_motion)
      per.push_back(Json{{"seed", m.seed},
                         {"sr", m.sr},
                         {"evals", m.evals},
                         {"converged", m.converged},
                         {"params", to_json(m.params)}});
    j["per_motion"] = per;
    j["excluded"] = t.tuning->excluded;
  } else {
    j["source"] = "fixed";
  }
  return j;
}

/// General parameters for each method on the given motions, tuning only the
/// methods without fixed parameters.
std::map<Variant, TunedMethod> tune_methods(const CampaignConfig& cfg, const std::vector<MotionSpec>& motions,
                                            const TuneContext& ctx, const std::vector<Variant>& methods) {
  std::map<Variant, TunedMethod> out;
  for (Variant v : methods) {
    TunedMethod t;
    if (auto it = cfg.fixed.find(v); it != cfg.fixed.end()) {
      t.params = it->second;
    } else {
      try {
        auto opts = cfg.tuning;
        opts.jobs = cfg.jobs;
        t.tuning = tune_general_params(default_problem(v), motions, ctx, opts);
        t.params = t.tuning->params;
      } catch (const std::exception& e) {
        t.error = std::string(to_string(v)) + ": " + e.what();
      }
    }
    out[v] = std::move(t);
  }
  return out;
}

struct Cell {
  std::optional<double> sr;
  std::string error;
};

/// Suppression rate of every (motion, method) pair, evaluated in parallel.
std::vector<std::vector<Cell>> evaluate_grid(const std::vector<MotionSpec>& motions,
                                             const std::vector<Variant>& methods,
                                             const std::map<Variant, TunedMethod>& tuned,
                                             const TuneContext& ctx, std::size_t jobs) {
  std::vector<std::vector<Cell>> cells(motions.size(), std::vector<Cell>(methods.size()));
  std::vector<MotionTrace> traces(motions.size());
  const std::size_t ticks = tick_count(ctx.duration, ctx.plant.dt);
  parallel_for(motions.size(), jobs, [&](std::size_t i) { traces[i] = render_motion(motions[i], ctx.plant.dt, ticks); });
  parallel_for(motions.size() * methods.size(), jobs, [&](std::size_t k) {
    const std::size_t i = k / methods.size(), m = k % methods.size();
    auto& cell = cells[i][m];
    const auto& t = tuned.at(methods[m]);
    if (!t.params) {
      cell.error = "no parameters (" + t.error + ")";
      return;
    }
    try {
      cell.sr = evaluate_params(traces[i], *t.params, ctx);
      if (!cell.sr) cell.error = "learner diverged";
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });
  return cells;
}

MeanStd column_stats(const std::vector<std::vector<Cell>>& cells, std::size_t m, std::size_t* ok = nullptr) {
  std::vector<double> v;
  for (const auto& row : cells)
    if (row[m].sr) v.push_back(*row[m].sr);
  if (ok) *ok = v.size();
  return mean_std(v);
}

void write_errors(const fs::path& path, const std::vector<std::string>& errors) {
  std::ofstream out(path);
  for (const auto& e : errors) out << e << '\n';
}

std::vector<MotionSpec> motions_for(const MotionRecipe& recipe, const std::vector<std::uint64_t>& seeds,
                                    std::optional<int> keep_vibration = std::nullopt) {
  std::vector<MotionSpec> out;
  for (auto s : seeds) {
    auto m = campaign_motion(recipe, s);
    if (keep_vibration) m = truncate_vibration(std::move(m), static_cast<std::size_t>(*keep_vibration));
    out.push_back(std::move(m));
  }
  return out;
}

void require_seeds(const CampaignConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("at least one seed is required");
}

}  // namespace

std::string to_string(LimitKind k) {
  switch (k) {
    case LimitKind::Nnu: return "nnu";
    case LimitKind::Band: return "band";
    case LimitKind::Noise: return "noise";
  }
  return "?";
}

LimitKind parse_limit_kind(const std::string& s) {
  if (s == "nnu") return LimitKind::Nnu;
  if (s == "band") return LimitKind::Band;
  if (s == "noise") return LimitKind::Noise;
  throw ConfigError("unknown limits sweep '" + s + "' (expected nnu, band or noise)");
}

std::vector<double> LimitsConfig::sweep() const { return values.empty() ? default_sweep(*this) : values; }

StepSizeParams CampaignConfig::params_for(Variant v) const {
  if (auto it = fixed.find(v); it != fixed.end()) return it->second;
  return default_problem(v).start;
}

CampaignConfig campaign_config_from_json(const Json& j) {
  CampaignConfig c;
  if (!j.is_object()) throw ConfigError("config must be an object");
  auto number = [](const Json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("field '" + key + "' must be a number");
    return v.get<double>();
  };
  auto count = [](const Json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError("field '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
  };
  auto variant = [](const Json& v) {
    if (!v.is_string()) throw ConfigError("method names must be strings");
    const auto p = parse_variant(v.get<std::string>());
    if (!p) throw ConfigError("unknown method '" + v.get<std::string>() + "'");
    return *p;
  };
  auto fixed_from = [&](const Json& v) {
    if (!v.is_object()) throw ConfigError("'step' must map method names to parameters");
    for (const auto& [name, params] : v.items()) {
      const Variant m = variant(Json(name));
      StepSizeParams p = default_problem(m).start;
      apply_json(params, p);
      p.variant = m;
      c.fixed[m] = p;
    }
  };

  // Applied last so that explicit "step" entries win over a params file.
  std::optional<Json> step_overrides;
  for (const auto& [key, v] : j.items()) {
    if (key == "campaign" || key == "description") continue;
    if (key == "seeds") {
      c.seeds.clear();
      if (v.is_array()) {
        for (const auto& s : v) {
          if (!s.is_number_integer() || s.get<std::int64_t>() < 0) throw ConfigError("seeds must be non-negative integers");
          c.seeds.push_back(s.get<std::uint64_t>());
        }
      } else if (v.is_object()) {
        const std::uint64_t first = v.contains("first") ? count(v["first"], "seeds.first") : 1;
        const std::size_t n = v.contains("count") ? count(v["count"], "seeds.count") : 10;
        for (std::size_t i = 0; i < n; ++i) c.seeds.push_back(first + i);
      } else {
        throw ConfigError("seeds must be a list or {first, count}");
      }
    } else if (key == "methods") {
      if (!v.is_array()) throw ConfigError("methods must be a list");
      c.methods.clear();
      for (const auto& m : v) c.methods.push_back(variant(m));
    } else if (key == "out") {
      if (!v.is_string()) throw ConfigError("out must be a path string");
      c.out = v.get<std::string>();
    } else if (key == "jobs") {
      c.jobs = std::max<std::size_t>(1, count(v, "jobs"));
    } else if (key == "duration") {
      c.duration = number(v, "duration");
      c.context.duration = c.duration;
    } else if (key == "motion") {
      apply_json(v, c.recipe);
    } else if (key == "filter") {
      if (!v.is_object()) throw ConfigError("filter must be an object");
      for (const auto& [fk, fv] : v.items()) {
        if (fk == "a_nu") c.context.a_nu = number(fv, "filter.a_nu");
        else if (fk == "b_nu") c.context.b_nu = number(fv, "filter.b_nu");
        else if (fk == "L") c.context.L = count(fv, "filter.L");
        else throw ConfigError("unknown field '" + fk + "' in filter");
      }
    } else if (key == "controller") {
      apply_json(v, c.context.controller);
    } else if (key == "plant") {
      apply_json(v, c.context.plant);
    } else if (key == "params_file") {
      if (!v.is_string()) throw ConfigError("params_file must be a path string");
      const Json tuned = read_json_file(v.get<std::string>());
      if (!tuned.contains("methods")) throw ConfigError("params file has no 'methods' entry");
      for (const auto& [name, entry] : tuned["methods"].items()) {
        if (!entry.contains("params")) continue;
        const Variant m = variant(Json(name));
        StepSizeParams p = default_problem(m).start;
        apply_json(entry["params"], p);
        c.fixed[m] = p;
      }
    } else if (key == "step") {
      step_overrides = v;
    } else if (key == "tuning") {
      if (!v.is_object()) throw ConfigError("tuning must be an object");
      for (const auto& [tk, tv] : v.items()) {
        if (tk == "motions") c.tuning.motions = count(tv, "tuning.motions");
        else if (tk == "max_evals") c.tuning.nm.max_evals = count(tv, "tuning.max_evals");
        else if (tk == "tol_x") c.tuning.nm.tol_x = number(tv, "tuning.tol_x");
        else if (tk == "initial_step") c.tuning.nm.initial_step = number(tv, "tuning.initial_step");
        else if (tk == "exclude_failed") {
          if (!tv.is_boolean()) throw ConfigError("tuning.exclude_failed must be a boolean");
          c.tuning.exclude_failed = tv.get<bool>();
        } else throw ConfigError("unknown field '" + tk + "' in tuning");
      }
    } else if (key == "limits") {
      if (!v.is_object()) throw ConfigError("limits must be an object");
      for (const auto& [lk, lv] : v.items()) {
        if (lk == "kind") {
          if (!lv.is_string()) throw ConfigError("limits.kind must be a string");
          c.limits.kind = parse_limit_kind(lv.get<std::string>());
        } else if (lk == "values") {
          if (!lv.is_array()) throw ConfigError("limits.values must be a list");
          c.limits.values.clear();
          for (const auto& x : lv) c.limits.values.push_back(number(x, "limits.values"));
        } else if (lk == "nnu_max") {
          c.limits.nnu_max = static_cast<int>(count(lv, "limits.nnu_max"));
        } else if (lk == "band_width") {
          c.limits.band_width = number(lv, "limits.band_width");
        } else if (lk == "xi_total") {
          c.limits.noise_xi_total = number(lv, "limits.xi_total");
        } else if (lk == "method") {
          c.limits.method = variant(lv);
        } else {
          throw ConfigError("unknown field '" + lk + "' in limits");
        }
      }
    } else if (key == "bench") {
      if (!v.is_object()) throw ConfigError("bench must be an object");
      for (const auto& [bk, bv] : v.items()) {
        if (bk == "L") {
          if (!bv.is_array()) throw ConfigError("bench.L must be a list");
          c.bench.grid_sizes.clear();
          for (const auto& x : bv) c.bench.grid_sizes.push_back(count(x, "bench.L"));
        } else if (bk == "reps") c.bench.timing.reps = count(bv, "bench.reps");
        else if (bk == "steps_per_rep") c.bench.timing.steps_per_rep = count(bv, "bench.steps_per_rep");
        else if (bk == "warmup_steps") c.bench.timing.warmup_steps = count(bv, "bench.warmup_steps");
        else throw ConfigError("unknown field '" + bk + "' in bench");
      }
    } else if (key == "replay") {
      if (!v.is_object()) throw ConfigError("replay must be an object");
      auto& r = c.replay;
      for (const auto& [rk, rv] : v.items()) {
        auto str = [&] {
          if (!rv.is_string()) throw ConfigError("replay." + rk + " must be a string");
          return rv.get<std::string>();
        };
        if (rk == "input") r.input = str();
        else if (rk == "time_column") r.time_column = str();
        else if (rk == "velocity_column") r.velocity_column = str();
        else if (rk == "e_pos_column") r.e_pos_column = str();
        else if (rk == "method") r.method = variant(rv);
        else if (rk == "a_nu") r.a_nu = number(rv, "replay.a_nu");
        else if (rk == "b_nu") r.b_nu = number(rv, "replay.b_nu");
        else if (rk == "L") r.L = count(rv, "replay.L");
        else if (rk == "mse_low") r.mse_low = number(rv, "replay.mse_low");
        else if (rk == "mse_high") r.mse_high = number(rv, "replay.mse_high");
        else if (rk == "max_jitter") r.max_jitter = number(rv, "replay.max_jitter");
        else throw ConfigError("unknown field '" + rk + "' in replay");
      }
    } else {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }
  if (step_overrides) fixed_from(*step_overrides);
  c.context.duration = c.duration;
  return c;
}

Json to_json(const CampaignConfig& c) {
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  Json fixed = Json::object();
  for (const auto& [m, p] : c.fixed) fixed[std::string(to_string(m))] = to_json(p);
  std::vector<double> sweep = c.limits.sweep();
  return Json{
      {"seeds", c.seeds},
      {"methods", methods},
      {"out", c.out.string()},
      {"duration", c.duration},
      {"motion", to_json(c.recipe)},
      {"filter", {{"a_nu", c.context.a_nu}, {"b_nu", c.context.b_nu}, {"L", c.context.L}}},
      {"controller", to_json(c.context.controller)},
      {"plant", to_json(c.context.plant)},
      {"step", fixed},
      {"tuning",
       {{"motions", c.tuning.motions},
        {"max_evals", c.tuning.nm.max_evals},
        {"tol_x", c.tuning.nm.tol_x},
        {"initial_step", c.tuning.nm.initial_step},
        {"exclude_failed", c.tuning.exclude_failed}}},
      {"limits",
       {{"kind", to_string(c.limits.kind)},
        {"values", sweep},
        {"nnu_max", c.limits.nnu_max},
        {"band_width", c.limits.band_width},
        {"xi_total", c.limits.noise_xi_total},
        {"method", std::string(to_string(c.limits.method))}}},
      {"bench",
       {{"L", c.bench.grid_sizes},
        {"reps", c.bench.timing.reps},
        {"steps_per_rep", c.bench.timing.steps_per_rep},
        {"warmup_steps", c.bench.timing.warmup_steps}}},
      {"replay",
       {{"input", c.replay.input.string()},
        {"time_column", c.replay.time_column},
        {"velocity_column", c.replay.velocity_column},
        {"e_pos_column", c.replay.e_pos_column},
        {"method", std::string(to_string(c.replay.method))},
        {"a_nu", c.replay.a_nu},
        {"b_nu", c.replay.b_nu},
        {"L", c.replay.L},
        {"mse_low", c.replay.mse_low},
        {"mse_high", c.replay.mse_high},
        {"max_jitter", c.replay.max_jitter}}}};
}

MotionSpec campaign_motion(const MotionRecipe& recipe, std::uint64_t seed) { return sample_motion(recipe, seed); }

CommandResult cmd_synth(const CampaignConfig& cfg) {
  require_seeds(cfg);
  ensure_dir(cfg.out);
  std::vector<fs::path> paths;
  for (auto s : cfg.seeds) paths.push_back(cfg.out / ("motion_" + std::to_string(s) + ".json"));
  if (!cfg.force)
    for (const auto& p : paths)
      if (fs::exists(p)) throw OutputExistsError(p.string() + " exists; pass --force to overwrite");
  CommandResult r;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    write_json_file(paths[i], to_json(campaign_motion(cfg.recipe, cfg.seeds[i])));
    r.outputs.push_back(paths[i]);
  }
  r.summary = "wrote " + std::to_string(paths.size()) + " motion files to " + cfg.out.string() + "\n";
  return r;
}

CommandResult cmd_run(const CampaignConfig& cfg, Variant method, std::uint64_t seed) {
  ensure_dir(cfg.out);
  const auto motion = campaign_motion(cfg.recipe, seed);
  StepSizeParams params = cfg.params_for(method);
  FilterSetup setup{cfg.context.a_nu, cfg.context.b_nu, cfg.context.L, params};
  RunOptions opts;
  opts.duration = cfg.duration;
  opts.time_steps = true;
  CommandResult r;
  const std::string stem = "run_" + std::string(to_string(method)) + "_seed" + std::to_string(seed);
  Json summary{{"seed", seed}, {"method", std::string(to_string(method))}, {"params", to_json(params)}};
  try {
    const auto rec = run_closed_loop(motion, setup, cfg.context.controller, cfg.context.plant, opts);
    const fs::path csv = cfg.out / (stem + ".csv");
    std::ofstream out(csv);
    rec.write_csv(out);
    out.close();
    write_meta(csv, cfg, "run");
    r.outputs.push_back(csv);
    summary["sr"] = rec.sr ? Json(*rec.sr) : Json(nullptr);
    summary["ticks"] = rec.ticks;
    std::vector<double> ns(rec.step_ns.begin(), rec.step_ns.end());
    const auto st = mean_std(ns);
    r.summary = "seed " + std::to_string(seed) + " " + std::string(to_string(method)) +
                " SR " + (rec.sr ? fmt(*rec.sr) : std::string("n/a")) + " mean tick " + fmt(st.mean, 0) + " ns\n";
  } catch (const DivergenceError& e) {
    summary["error"] = e.what();
    summary["diverged_at_step"] = e.step();
    r.failed_cells = 1;
    r.errors.push_back(e.what());
    r.summary = std::string("run diverged: ") + e.what() + "\n";
  }
  summary["motion"] = to_json(motion);
  const fs::path js = cfg.out / (stem + ".json");
  write_json_file(js, summary);
  r.outputs.push_back(js);
  return r;
}

CommandResult cmd_tune(const CampaignConfig& cfg) {
  require_seeds(cfg);
  ensure_dir(cfg.out);
  const auto motions = motions_for(cfg.recipe, cfg.seeds);
  const auto tuned = tune_methods(cfg, motions, cfg.context, cfg.methods);
  CommandResult r;
  Json out{{"tuned_on", std::vector<std::uint64_t>(cfg.seeds.begin(),
                                                    cfg.seeds.begin() + static_cast<std::ptrdiff_t>(std::min(cfg.seeds.size(), cfg.tuning.motions)))}};
  Json methods = Json::object();
  std::ostringstream sum;
  for (auto m : cfg.methods) {
    const auto& t = tuned.at(m);
    methods[std::string(to_string(m))] = tuned_to_json(t);
    if (!t.params) {
      ++r.failed_cells;
      r.errors.push_back(t.error);
      sum << fixed_width(std::string(to_string(m)), 8) << "failed: " << t.error << '\n';
      continue;
    }
    sum << fixed_width(std::string(to_string(m)), 8) << to_json(*t.params).dump() << '\n';
  }
  out["methods"] = methods;
  const fs::path path = cfg.out / "tuned_params.json";
  write_json_file(path, out);
  r.outputs.push_back(path);
  if (!r.errors.empty()) {
    write_errors(cfg.out / "errors.log", r.errors);
    r.outputs.push_back(cfg.out / "errors.log");
  }
  r.summary = sum.str();
  return r;
}

CommandResult cmd_compare(const CampaignConfig& cfg) {
  require_seeds(cfg);
  if (cfg.methods.empty()) throw ConfigError("compare needs at least one method");
  ensure_dir(cfg.out);
  const auto motions = motions_for(cfg.recipe, cfg.seeds);
  const auto tuned = tune_methods(cfg, motions, cfg.context, cfg.methods);
  const auto cells = evaluate_grid(motions, cfg.methods, tuned, cfg.context, cfg.jobs);

  CommandResult r;
  std::vector<std::string> header{"seed"};
  for (auto m : cfg.methods) header.emplace_back(to_string(m));
  const fs::path csv = cfg.out / "compare.csv";
  {
    std::ofstream out(csv);
    CsvWriter w(out, header);
    for (std::size_t i = 0; i < motions.size(); ++i) {
      std::vector<std::string> row{std::to_string(motions[i].seed)};
      for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        row.push_back(format_cell(cells[i][m].sr));
        if (!cells[i][m].sr) {
          ++r.failed_cells;
          r.errors.push_back("seed " + std::to_string(motions[i].seed) + " " +
                             std::string(to_string(cfg.methods[m])) + ": " + cells[i][m].error);
        }
      }
      w.row(row);
    }
    std::vector<std::string> mean_row{"mean"};
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      std::size_t ok = 0;
      const auto st = column_stats(cells, m, &ok);
      mean_row.push_back(ok ? format_double(st.mean) : std::string());
    }
    w.row(mean_row);
  }
  write_meta(csv, cfg, "compare");
  r.outputs.push_back(csv);

  Json params = Json::object();
  for (auto m : cfg.methods) params[std::string(to_string(m))] = tuned_to_json(tuned.at(m));
  const fs::path pj = cfg.out / "compare_params.json";
  write_json_file(pj, Json{{"methods", params}});
  r.outputs.push_back(pj);
  if (!r.errors.empty()) {
    write_errors(cfg.out / "errors.log", r.errors);
    r.outputs.push_back(cfg.out / "errors.log");
  }

  std::ostringstream sum;
  sum << fixed_width("seed", 8);
  for (auto m : cfg.methods) sum << fixed_width(std::string(to_string(m)), 10);
  sum << '\n';
  for (std::size_t i = 0; i < motions.size(); ++i) {
    sum << fixed_width(std::to_string(motions[i].seed), 8);
    for (std::size_t m = 0; m < cfg.methods.size(); ++m)
      sum << fixed_width(cells[i][m].sr ? fmt(*cells[i][m].sr) : "fail", 10);
    sum << '\n';
  }
  sum << fixed_width("mean", 8);
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    std::size_t ok = 0;
    const auto st = column_stats(cells, m, &ok);
    sum << fixed_width(ok ? fmt(st.mean) : "fail", 10);
  }
  sum << '\n';
  r.summary = sum.str();
  return r;
}

CommandResult cmd_limits(const CampaignConfig& cfg) {
  require_seeds(cfg);
  ensure_dir(cfg.out);
  const auto& lim = cfg.limits;
  const auto sweep = lim.sweep();
  if (sweep.empty()) throw ConfigError("limits sweep has no values");
  const Variant method = lim.method;

  CommandResult r;
  std::vector<std::string> header{to_string(lim.kind)};
  for (auto s : cfg.seeds) header.push_back("seed_" + std::to_string(s));
  header.insert(header.end(), {"mean", "std", "n_ok"});
  const fs::path csv = cfg.out / ("limits_" + to_string(lim.kind) + ".csv");
  std::ofstream out(csv);
  CsvWriter w(out, header);
  Json points = Json::array();
  std::ostringstream sum;
  sum << fixed_width(to_string(lim.kind), 10) << fixed_width("mean SR", 10) << "n_ok\n";

  for (double value : sweep) {
    MotionRecipe recipe = cfg.recipe;
    TuneContext ctx = cfg.context;
    std::optional<int> keep;
    switch (lim.kind) {
      case LimitKind::Nnu:
        if (value < 1 || value > lim.nnu_max || value != std::floor(value))
          throw ConfigError("nnu sweep values must be integers in [1, nnu_max]");
        recipe.vibration.a_n = recipe.vibration.b_n = lim.nnu_max;
        keep = static_cast<int>(value);
        break;
      case LimitKind::Band:
        recipe.vibration.a_nu = ctx.a_nu = value;
        recipe.vibration.b_nu = ctx.b_nu = value + lim.band_width;
        break;
      case LimitKind::Noise:
        recipe.vibration.xi_total = lim.noise_xi_total;
        recipe.s_n = value;
        break;
    }
    const auto motions = motions_for(recipe, cfg.seeds, keep);
    const auto tuned = tune_methods(cfg, motions, ctx, {method});
    const auto cells = evaluate_grid(motions, {method}, tuned, ctx, cfg.jobs);

    std::vector<std::string> row{format_double(value)};
    for (std::size_t i = 0; i < motions.size(); ++i) {
      row.push_back(format_cell(cells[i][0].sr));
      if (!cells[i][0].sr) {
        ++r.failed_cells;
        r.errors.push_back(to_string(lim.kind) + "=" + format_double(value) + " seed " +
                           std::to_string(motions[i].seed) + ": " + cells[i][0].error);
      }
    }
    std::size_t ok = 0;
    const auto st = column_stats(cells, 0, &ok);
    row.push_back(ok ? format_double(st.mean) : std::string());
    row.push_back(ok ? format_double(st.std) : std::string());
    row.push_back(std::to_string(ok));
    w.row(row);
    points.push_back(Json{{"value", value}, {"method", tuned_to_json(tuned.at(method))}});
    sum << fixed_width(format_double(value), 10) << fixed_width(ok ? fmt(st.mean) : "fail", 10) << ok << '\n';
  }
  out.close();
  write_meta(csv, cfg, "limits");
  r.outputs.push_back(csv);
  const fs::path pj = cfg.out / ("limits_" + to_string(lim.kind) + "_params.json");
  write_json_file(pj, Json{{"points", points}});
  r.outputs.push_back(pj);
  if (!r.errors.empty()) {
    write_errors(cfg.out / "errors.log", r.errors);
    r.outputs.push_back(cfg.out / "errors.log");
  }
  r.summary = sum.str();
  return r;
}

CommandResult cmd_bench(const CampaignConfig& cfg) {
  if (cfg.methods.empty()) throw ConfigError("bench needs at least one method");
  if (cfg.bench.grid_sizes.empty()) throw ConfigError("bench needs at least one grid size");
  ensure_dir(cfg.out);
  CommandResult r;
  std::map<Variant, std::vector<std::pair<double, double>>> by_method;
  const fs::path csv = cfg.out / "timing.csv";
  std::ostringstream sum;
  {
    std::ofstream out(csv);
    CsvWriter w(out, {"variant", "L", "samples", "mean_ns", "std_ns"});
    for (auto L : cfg.bench.grid_sizes) {
      for (const auto& st : time_step_sizes(cfg.methods, L, cfg.bench.timing)) {
        w.row({std::string(to_string(st.variant)), std::to_string(st.L), std::to_string(st.samples),
               format_double(st.mean_ns), format_double(st.std_ns)});
        by_method[st.variant].emplace_back(static_cast<double>(L), st.mean_ns);
        sum << fixed_width(std::string(to_string(st.variant)), 8) << "L=" << fixed_width(std::to_string(L), 5)
            << fmt(st.mean_ns, 0) << " +- " << fmt(st.std_ns, 0) << " ns\n";
      }
    }
  }
  write_meta(csv, cfg, "bench");
  r.outputs.push_back(csv);
  if (cfg.bench.grid_sizes.size() >= 2) {
    const fs::path sc = cfg.out / "timing_scaling.csv";
    std::ofstream out(sc);
    CsvWriter w(out, {"variant", "exponent"});
    for (auto m : cfg.methods) {
      std::vector<double> xs, ys;
      for (auto [x, y] : by_method[m]) {
        xs.push_back(x);
        ys.push_back(y);
      }
      const double k = loglog_slope(xs, ys);
      w.row({std::string(to_string(m)), format_double(k)});
      sum << fixed_width(std::string(to_string(m)), 8) << "time ~ L^" << fmt(k, 2) << '\n';
    }
    out.close();
    write_meta(sc, cfg, "bench");
    r.outputs.push_back(sc);
  }
  r.summary = sum.str();
  return r;
}

ReplayReport replay_series(std::span<const double> t, std::span<const double> v, std::span<const double> e_pos,
                           const ReplayConfig& rc, const StepSizeParams& params) {
  if (t.size() != v.size() || t.size() < 2) throw ConfigError("replay needs at least two samples per column");
  const std::size_t n = t.size();
  const double mean_dt = (t[n - 1] - t[0]) / static_cast<double>(n - 1);
  if (!(mean_dt > 0.0)) throw ConfigError("timestamps must increase");
  for (std::size_t i = 1; i < n; ++i) {
    const double d = t[i] - t[i - 1];
    if (std::abs(d - mean_dt) > rc.max_jitter * mean_dt)
      throw ConfigError("non-uniform timestamps at row " + std::to_string(i + 1) + " (interval " +
                        format_double(d) + " vs mean " + format_double(mean_dt) + ")");
  }
  ReplayReport rep;
  rep.fs = 1.0 / mean_dt;
  BmflcFilter filter(make_grid(rc.a_nu, rc.b_nu, rc.L), params);
  rep.cleaned.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = filter.predict(t[i] - t[0]);
    const double e = v[i] - y;
    filter.update(e);
    rep.cleaned[i] = e;
  }
  const double high = std::min(rc.mse_high, 0.45 * rep.fs);
  rep.mse_before = bandpass_mse(v, rep.fs, rc.mse_low, high);
  rep.mse_after = bandpass_mse(rep.cleaned, rep.fs, rc.mse_low, high);
  if (!e_pos.empty()) rep.e_pos_mse = bandpass_mse(e_pos, rep.fs, rc.mse_low, high);
  rep.before = dft_magnitude(v, rep.fs);
  rep.after = dft_magnitude(rep.cleaned, rep.fs);
  return rep;
}

CommandResult cmd_replay(const CampaignConfig& cfg) {
  const auto& rc = cfg.replay;
  if (rc.input.empty()) throw ConfigError("replay needs an input CSV");
  const auto table = read_csv_file(rc.input);
  const auto t = table.numeric(rc.time_column);
  const auto v = table.numeric(rc.velocity_column);
  std::vector<double> e_pos;
  if (!rc.e_pos_column.empty()) e_pos = table.numeric(rc.e_pos_column);
  StepSizeParams params = cfg.params_for(rc.method);
  params.variant = rc.method;
  const auto rep = replay_series(t, v, e_pos, rc, params);

  ensure_dir(cfg.out);
  CommandResult r;
  Json report{{"input", rc.input.filename().string()},
              {"samples", t.size()},
              {"fs", rep.fs},
              {"method", std::string(to_string(rc.method))},
              {"params", to_json(params)},
              {"band", {rc.a_nu, rc.b_nu}},
              {"mse_band", {rc.mse_low, std::min(rc.mse_high, 0.45 * rep.fs)}},
              {"velocity_mse_before", rep.mse_before},
              {"velocity_mse_after", rep.mse_after}};
  if (rep.e_pos_mse) report["e_pos_mse"] = *rep.e_pos_mse;
  const fs::path rj = cfg.out / "replay_report.json";
  write_json_file(rj, report);
  r.outputs.push_back(rj);

  const fs::path spec = cfg.out / "replay_spectrum.csv";
  {
    std::ofstream out(spec);
    CsvWriter w(out, {"freq", "before", "after"});
    for (std::size_t k = 0; k < rep.before.freq.size(); ++k)
      w.row({format_double(rep.before.freq[k]), format_double(rep.before.magnitude[k]),
             format_double(rep.after.magnitude[k])});
  }
  write_meta(spec, cfg, "replay");
  r.outputs.push_back(spec);

  const fs::path series = cfg.out / "replay_series.csv";
  {
    std::ofstream out(series);
    CsvWriter w(out, {"t", "velocity", "cleaned"});
    for (std::size_t i = 0; i < t.size(); ++i)
      w.row({format_double(t[i]), format_double(v[i]), format_double(rep.cleaned[i])});
  }
  write_meta(series, cfg, "replay");
  r.outputs.push_back(series);

  std::ostringstream sum;
  sum << "fs " << fmt(rep.fs, 1) << " Hz, band-passed velocity MSE " << rep.mse_before << " -> " << rep.mse_after
      << '\n';
  r.summary = sum.str();
  return r;
}

}  // namespace bmflc

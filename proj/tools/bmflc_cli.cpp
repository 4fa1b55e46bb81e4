#include <CLI11.hpp>

#include <iostream>
#include <numeric>
#include <optional>
#include <string>

#include "bmflc/campaign.hpp"

namespace {

using namespace bmflc;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool force = false;
  std::vector<std::string> methods;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file (comments allowed)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--seed", f.seed, "First seed; the seed list keeps its length");
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--force", f.force, "Overwrite existing outputs");
  cmd->add_option("--method", f.methods, "Method(s): lms, damped, rls, kalman");
}

std::vector<Variant> parse_methods(const std::vector<std::string>& names) {
  std::vector<Variant> out;
  for (const auto& n : names) {
    const auto v = parse_variant(n);
    if (!v) throw ConfigError("unknown method '" + n + "'");
    out.push_back(*v);
  }
  return out;
}

/// File values over built-in defaults, then flags over file values.
CampaignConfig load_config(const CommonFlags& f) {
  CampaignConfig c = f.config.empty() ? CampaignConfig{} : campaign_config_from_json(read_json_file(f.config));
  if (!f.out.empty()) c.out = f.out;
  if (f.seed) {
    const std::size_t n = c.seeds.empty() ? 1 : c.seeds.size();
    c.seeds.resize(n);
    std::iota(c.seeds.begin(), c.seeds.end(), *f.seed);
  }
  if (f.jobs) c.jobs = *f.jobs;
  c.force = f.force;
  if (!f.methods.empty()) c.methods = parse_methods(f.methods);
  return c;
}

int finish(const CommandResult& r) {
  std::cout << r.summary;
  for (const auto& e : r.errors) std::cerr << "failed: " << e << '\n';
  return r.failed_cells ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Band-limited Fourier linear combiner experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BMFLC_VERSION);

  CommonFlags flags;
  auto* synth = app.add_subcommand("synth", "Write seeded motion files");
  auto* run = app.add_subcommand("run", "One closed-loop simulation");
  auto* compare = app.add_subcommand("compare", "Suppression rate of each method on each motion");
  auto* limits = app.add_subcommand("limits", "Sweep vibration count, band or noise level");
  auto* bench = app.add_subcommand("bench", "Per-step update timing");
  auto* tune = app.add_subcommand("tune", "General step-size parameters from the first motions");
  auto* replay = app.add_subcommand("replay", "Run a filter offline on a recorded velocity CSV");
  for (auto* cmd : {synth, run, compare, limits, bench, tune, replay}) add_common(cmd, flags);

  std::string kind;
  limits->add_option("--kind", kind, "nnu, band or noise")->check(CLI::IsMember({"nnu", "band", "noise"}));
  std::vector<std::size_t> bench_sizes;
  bench->add_option("--L", bench_sizes, "Grid sizes to time");
  std::optional<std::size_t> bench_reps;
  bench->add_option("--reps", bench_reps, "Repetitions per grid size")->check(CLI::PositiveNumber);
  std::string input, map_file, time_col, vel_col, epos_col;
  replay->add_option("--input", input, "CSV with time and velocity columns");
  replay->add_option("--map", map_file, "JSON file with replay settings and column names");
  replay->add_option("--time-column", time_col, "Name of the time column");
  replay->add_option("--velocity-column", vel_col, "Name of the velocity column");
  replay->add_option("--e-pos-column", epos_col, "Name of the optional position-error column");

  CLI11_PARSE(app, argc, argv);

  try {
    CampaignConfig cfg = load_config(flags);
    if (*synth) return finish(cmd_synth(cfg));
    if (*run) {
      const Variant m = flags.methods.empty() ? Variant::Damped : cfg.methods.front();
      return finish(cmd_run(cfg, m, cfg.seeds.empty() ? 1 : cfg.seeds.front()));
    }
    if (*compare) return finish(cmd_compare(cfg));
    if (*tune) return finish(cmd_tune(cfg));
    if (*limits) {
      if (!kind.empty()) {
        const LimitKind k = parse_limit_kind(kind);
        if (k != cfg.limits.kind) cfg.limits.values.clear();
        cfg.limits.kind = k;
      }
      if (!flags.methods.empty()) cfg.limits.method = cfg.methods.front();
      return finish(cmd_limits(cfg));
    }
    if (*bench) {
      if (!bench_sizes.empty()) cfg.bench.grid_sizes = bench_sizes;
      if (bench_reps) cfg.bench.timing.reps = *bench_reps;
      return finish(cmd_bench(cfg));
    }
    if (*replay) {
      if (!map_file.empty()) {
        CampaignConfig mapped = campaign_config_from_json(Json{{"replay", read_json_file(map_file)}});
        cfg.replay = mapped.replay;
      }
      if (!input.empty()) cfg.replay.input = input;
      if (!time_col.empty()) cfg.replay.time_column = time_col;
      if (!vel_col.empty()) cfg.replay.velocity_column = vel_col;
      if (!epos_col.empty()) cfg.replay.e_pos_column = epos_col;
      if (!flags.methods.empty()) cfg.replay.method = cfg.methods.front();
      return finish(cmd_replay(cfg));
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: learner diverged at step " << e.step() << ": " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bmflc/metrics.hpp"
#include "bmflc/plant.hpp"
#include "bmflc/serialize.hpp"
#include "bmflc/synth.hpp"
#include "bmflc/tuner.hpp"

namespace bmflc {

enum class LimitKind { Nnu, Band, Noise };
std::string to_string(LimitKind k);
LimitKind parse_limit_kind(const std::string& s);

struct LimitsConfig {
  LimitKind kind = LimitKind::Nnu;
  /// Empty means the built-in sweep for the kind.
  std::vector<double> values;
  int nnu_max = 6;
  double band_width = 4.0;
  double noise_xi_total = 0.5;
  Variant method = Variant::Damped;

  std::vector<double> sweep() const;
};

struct BenchConfig {
  std::vector<std::size_t> grid_sizes{60, 120, 240, 480};
  TimingOptions timing;
};

struct ReplayConfig {
  std::filesystem::path input;
  std::string time_column = "t";
  std::string velocity_column = "v";
  /// Optional position-error column reported alongside the velocity.
  std::string e_pos_column;
  Variant method = Variant::Damped;
  double a_nu = 3.0;
  double b_nu = 9.0;
  std::size_t L = 100;
  double mse_low = 3.0;
  double mse_high = 100.0;
  /// Largest tolerated deviation of a sample interval from the mean, relative.
  double max_jitter = 0.01;
};

struct CampaignConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<Variant> methods{Variant::Lms, Variant::Damped, Variant::Rls, Variant::Kalman};
  std::filesystem::path out = "results";
  std::size_t jobs = 1;
  double duration = 24.5;
  MotionRecipe recipe;
  TuneContext context;
  /// Methods listed here run with these parameters instead of being tuned.
  std::map<Variant, StepSizeParams> fixed;
  GeneralTuneOptions tuning;
  LimitsConfig limits;
  BenchConfig bench;
  ReplayConfig replay;
  bool force = false;

  /// Step-size parameters used when a single run is requested without tuning.
  StepSizeParams params_for(Variant v) const;
};

/// Starts from the built-in defaults and applies the keys present in j.
CampaignConfig campaign_config_from_json(const Json& j);
Json to_json(const CampaignConfig& c);

/// What a command produced. failed_cells counts runs that diverged or could not be tuned.
struct CommandResult {
  std::vector<std::filesystem::path> outputs;
  std::size_t failed_cells = 0;
  std::vector<std::string> errors;
  std::string summary;
};

/// Raised when a command would overwrite existing output without --force.
class OutputExistsError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// The motion for one seed under a recipe, as the campaigns generate it.
MotionSpec campaign_motion(const MotionRecipe& recipe, std::uint64_t seed);

CommandResult cmd_synth(const CampaignConfig& cfg);
CommandResult cmd_run(const CampaignConfig& cfg, Variant method, std::uint64_t seed);
CommandResult cmd_tune(const CampaignConfig& cfg);
CommandResult cmd_compare(const CampaignConfig& cfg);
CommandResult cmd_limits(const CampaignConfig& cfg);
CommandResult cmd_bench(const CampaignConfig& cfg);
CommandResult cmd_replay(const CampaignConfig& cfg);

/// Metrics of an offline replay, exposed for tests.
struct ReplayReport {
  double fs = 0.0;
  double mse_before = 0.0;
  double mse_after = 0.0;
  std::optional<double> e_pos_mse;
  Spectrum before;
  Spectrum after;
  std::vector<double> cleaned;
};

/// Runs the filter open-loop on a velocity series: y predicts v, the residual v - y
/// is the cleaned signal and also the learning error.
ReplayReport replay_series(std::span<const double> t, std::span<const double> v,
                           std::span<const double> e_pos, const ReplayConfig& rc,
                           const StepSizeParams& params);

}  // namespace bmflc

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bmflc/filter.hpp"
#include "bmflc/plant.hpp"
#include "bmflc/synth.hpp"

namespace bmflc {

struct NelderMeadOptions {
  /// Stop once every vertex lies within tol_x * max(1, |best|) of the best one.
  double tol_x = 1e-6;
  /// 0 means 200 * dim.
  std::size_t max_evals = 0;
  /// Relative perturbation of each coordinate for the initial simplex.
  double initial_step = 0.05;
  /// Absolute perturbation used for coordinates that are exactly zero.
  double zero_step = 0.00025;
};

struct NelderMeadResult {
  Vector x;
  double f = 0.0;
  std::size_t evals = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex search (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5). Non-finite objective values count as +inf.
/// Throws std::invalid_argument if the objective is not finite at x0.
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& objective, const Vector& x0,
                             const NelderMeadOptions& opts = {});

/// How a free parameter maps to its search coordinate.
enum class Scale {
  Linear,
  Log10,          // s = log10(v)
  Log10Complement // s = log10(1 - v), for rates just below 1
};

struct ParamDim {
  std::string name;
  Scale scale = Scale::Linear;
  /// Box in parameter units.
  double lo = 0.0;
  double hi = 1.0;

  double to_search(double v) const;
  double from_search(double s) const;
};

/// Reads or writes a StepSizeParams field by its config name
/// (eta, lambda_forget, k_dmp, x_dmp, lambda_rls, r_kf, q_kf_scale, p0).
double get_param(const StepSizeParams& p, std::string_view name);
void set_param(StepSizeParams& p, std::string_view name, double value);

struct TuneProblem {
  Variant variant = Variant::Damped;
  std::vector<ParamDim> dims;
  /// Starting point and every parameter that is not searched.
  StepSizeParams start;

  void validate() const;
  Vector to_search(const StepSizeParams& p) const;
  /// Maps back and clamps every free parameter into its box.
  StepSizeParams from_search(const Vector& s) const;
};

/// Free parameters, boxes and starting point per variant, with lambda = 0.9999.
TuneProblem default_problem(Variant v);

/// Everything except the step-size parameters that a tuning run holds fixed.
struct TuneContext {
  double a_nu = 6.0;
  double b_nu = 10.0;
  std::size_t L = 100;
  ControllerParams controller;
  PlantParams plant;
  double duration = 24.5;
};

/// Suppression rate of one closed-loop run; empty if the learner diverged.
std::optional<double> evaluate_params(const MotionTrace& trace, const StepSizeParams& p,
                                      const TuneContext& ctx);

struct MotionTuneResult {
  std::uint64_t seed = 0;
  StepSizeParams params;
  Vector x;
  double sr = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

/// Maximises the suppression rate on one motion.
/// Throws std::runtime_error if the learner diverges at the starting point.
MotionTuneResult tune_motion(const TuneProblem& problem, const MotionSpec& motion,
                             const TuneContext& ctx, const NelderMeadOptions& opts = {});

/// Arithmetic mean in search coordinates, projected into the boxes.
StepSizeParams average_params(const TuneProblem& problem, std::span<const Vector> optima);

struct GeneralTuneResult {
  StepSizeParams params;
  Vector x;
  std::vector<MotionTuneResult> per_motion;
  /// Seeds whose optimisation failed and were left out of the mean.
  std::vector<std::uint64_t> excluded;
};

struct GeneralTuneOptions {
  std::size_t motions = 5;
  std::size_t jobs = 1;
  /// Leave failed per-motion runs out of the mean instead of throwing.
  bool exclude_failed = false;
  NelderMeadOptions nm;
};

/// Tunes on the first opts.motions motions and averages their optima.
GeneralTuneResult tune_general_params(const TuneProblem& problem, std::span<const MotionSpec> motions,
                                      const TuneContext& ctx, const GeneralTuneOptions& opts = {});

}  // namespace bmflc

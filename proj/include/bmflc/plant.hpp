#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bmflc/filter.hpp"
#include "bmflc/synth.hpp"

namespace bmflc {

struct PlantParams {
  double mass = 3.6;
  double stiffness = 400.0;
  double damping = 100.0;
  double dt = 0.001;

  void validate() const;
};

struct ControllerParams {
  double k_k = 400.0;
  double k_b = 16.0;
  double k_ff = 200.0;
  /// Add m x''_des + b x'_des + k x_des so the loop renders the impedance
  /// around the reference instead of fighting the plant's own spring.
  bool model_compensation = true;

  void validate() const;
};

struct PlantState {
  double x = 0.0;
  double v = 0.0;
  double t = 0.0;
};

/// Band, grid size and update rule of the vibration learner.
struct FilterSetup {
  double a_nu = 6.0;
  double b_nu = 10.0;
  std::size_t L = 100;
  StepSizeParams step;

  FrequencyGrid grid() const { return make_grid(a_nu, b_nu, L); }
};

inline double impedance_force(double e_pos, double e_vel, const ControllerParams& c) {
  return c.k_k * e_pos + c.k_b * e_vel;
}

/// One semi-implicit Euler step of m x'' + b x' + k x = force.
/// Throws std::runtime_error if the new state is not finite.
PlantState plant_step(const PlantState& s, double force, const PlantParams& p);

/// 1/2 m v^2 + 1/2 k x^2
double mechanical_energy(const PlantState& s, const PlantParams& p);

struct RunOptions {
  double duration = 24.5;
  /// Keep per-tick series; tuning only needs the suppression rate.
  bool keep_series = true;
  /// Measure wall time of each tick.
  bool time_steps = false;
  /// Ticks before this time are excluded from the suppression rate.
  double sr_warmup = 0.0;
};

/// Per-tick series of a closed-loop run. The sign convention is that f_ff is
/// the learned copy of f_nu and the plant receives f_imp - f_ff + f_nu + f_n.
struct ExperimentRecord {
  std::vector<double> t, x_des, x, e_pos, e_vel, f_nu, f_n, f_imp, f_ff, y_vib;
  std::vector<std::int64_t> step_ns;
  std::size_t ticks = 0;
  /// Empty when the vibration force has zero power.
  std::optional<double> sr;
  FilterState final_state;

  static constexpr const char* kCsvHeader = "t,x_des,x,e_pos,e_vel,f_nu,f_n,f_imp,f_ff,y_vib,step_ns";
  void write_csv(std::ostream& os) const;
};

/// Number of control ticks covering duration at step dt.
std::size_t tick_count(double duration, double dt);

/// Closed loop: impedance control around the voluntary trajectory with a
/// BMFLC feedforward learned from the velocity deviation x' - x'_des.
/// A diverging learner propagates DivergenceError with its step index.
ExperimentRecord run_closed_loop(const MotionTrace& motion, const FilterSetup& filter,
                                 const ControllerParams& c, const PlantParams& p,
                                 const RunOptions& opts);

ExperimentRecord run_closed_loop(const MotionSpec& spec, const FilterSetup& filter,
                                 const ControllerParams& c, const PlantParams& p,
                                 const RunOptions& opts);

}  // namespace bmflc

#include "bmflc/plant.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace bmflc {

void PlantParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(stiffness >= 0.0 && damping >= 0.0))
    throw std::invalid_argument("stiffness and damping must be non-negative");
}

void ControllerParams::validate() const {
  if (!(k_k >= 0.0 && k_b >= 0.0)) throw std::invalid_argument("impedance gains must be >= 0");
  if (!std::isfinite(k_ff)) throw std::invalid_argument("feedforward gain must be finite");
}

PlantState plant_step(const PlantState& s, double force, const PlantParams& p) {
  PlantState n;
  n.v = s.v + p.dt * (force - p.damping * s.v - p.stiffness * s.x) / p.mass;
  n.x = s.x + p.dt * n.v;
  n.t = s.t + p.dt;
  if (!std::isfinite(n.x) || !std::isfinite(n.v))
    throw std::runtime_error("plant state became non-finite at t=" + std::to_string(s.t));
  return n;
}

double mechanical_energy(const PlantState& s, const PlantParams& p) {
  return 0.5 * p.mass * s.v * s.v + 0.5 * p.stiffness * s.x * s.x;
}

std::size_t tick_count(double duration, double dt) {
  if (!(duration > 0.0) || !(dt > 0.0)) throw std::invalid_argument("duration and dt must be positive");
  return static_cast<std::size_t>(std::llround(duration / dt));
}

void ExperimentRecord::write_csv(std::ostream& os) const {
  os << kCsvHeader << '\n';
  const auto old_prec = os.precision(17);
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << t[i] << ',' << x_des[i] << ',' << x[i] << ',' << e_pos[i] << ',' << e_vel[i] << ','
       << f_nu[i] << ',' << f_n[i] << ',' << f_imp[i] << ',' << f_ff[i] << ',' << y_vib[i] << ','
       << (i < step_ns.size() ? step_ns[i] : 0) << '\n';
  }
  os.precision(old_prec);
}

ExperimentRecord run_closed_loop(const MotionTrace& motion, const FilterSetup& setup,
                                 const ControllerParams& c, const PlantParams& p,
                                 const RunOptions& opts) {
  p.validate();
  c.validate();
  const std::size_t n = tick_count(opts.duration, p.dt);
  if (motion.size() < n) throw std::invalid_argument("motion trace is shorter than the run");
  if (std::abs(motion.dt - p.dt) > 1e-15) throw std::invalid_argument("motion trace dt differs from plant dt");

  BmflcFilter filter(setup.grid(), setup.step);
  ExperimentRecord rec;
  rec.ticks = n;
  if (opts.keep_series) {
    for (auto* v : {&rec.t, &rec.x_des, &rec.x, &rec.e_pos, &rec.e_vel, &rec.f_nu, &rec.f_n,
                    &rec.f_imp, &rec.f_ff, &rec.y_vib})
      v->resize(n);
    rec.step_ns.assign(n, 0);
  }

  // Start on the reference when compensating, otherwise at the static balance
  // of the impedance spring against the plant spring.
  double share = 1.0;
  if (!c.model_compensation && c.k_k + p.stiffness > 0.0) share = c.k_k / (c.k_k + p.stiffness);
  PlantState state{share * motion.x_r[0], share * motion.xdot_half[0], 0.0};

  double residual = 0.0;
  double power = 0.0;
  using Clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * p.dt;
    const auto t0 = opts.time_steps ? Clock::now() : Clock::time_point{};

    const double e_pos = motion.x_r[i] - state.x;
    const double e_vel = motion.xdot_half[i] - state.v;
    double f_imp = impedance_force(e_pos, e_vel, c);
    if (c.model_compensation)
      f_imp += p.mass * motion.xddot_r[i] + p.damping * motion.xdot_half[i] + p.stiffness * motion.x_r[i];
    const double y = filter.predict(t);
    const double f_ff = feedforward_force(y, c.k_ff);
    filter.update(-e_vel);
    const double f_nu = motion.f_nu[i];
    const double f_n = motion.f_n[i];
    PlantState next;
    try {
      next = plant_step(state, f_imp - f_ff + f_nu + f_n, p);
    } catch (const std::runtime_error& err) {
      throw DivergenceError(i, err.what());
    }

    if (opts.time_steps && opts.keep_series)
      rec.step_ns[i] = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
    if (opts.keep_series) {
      rec.t[i] = t;
      rec.x_des[i] = motion.x_r[i];
      rec.x[i] = state.x;
      rec.e_pos[i] = e_pos;
      rec.e_vel[i] = e_vel;
      rec.f_nu[i] = f_nu;
      rec.f_n[i] = f_n;
      rec.f_imp[i] = f_imp;
      rec.f_ff[i] = f_ff;
      rec.y_vib[i] = y;
    }
    if (t >= opts.sr_warmup) {
      residual += (f_nu - f_ff) * (f_nu - f_ff);
      power += f_nu * f_nu;
    }
    state = next;
  }
  if (power > 0.0) rec.sr = 1.0 - residual / power;
  rec.final_state = filter.state();
  return rec;
}

ExperimentRecord run_closed_loop(const MotionSpec& spec, const FilterSetup& filter,
                                 const ControllerParams& c, const PlantParams& p,
                                 const RunOptions& opts) {
  const auto trace = render_motion(spec, p.dt, tick_count(opts.duration, p.dt));
  return run_closed_loop(trace, filter, c, p, opts);
}

}  // namespace bmflc

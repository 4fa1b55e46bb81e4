#include "bmflc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bmflc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum StreamTag : std::uint32_t { kVoluntary = 1, kVibration = 2, kDrift = 3, kNoise = 4 };

Rng derive(std::uint64_t base, std::uint64_t key) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  return Rng(seq);
}

double draw_frequency(const SynthParams& p, Rng& rng) {
  if (p.frequency_law == FrequencyLaw::Exponential) {
    std::exponential_distribution<double> exp_dist(5.0 / (p.b_nu - p.a_nu));
    return exp_dist(rng) + p.a_nu;
  }
  return std::uniform_real_distribution<double>(p.a_nu, p.b_nu)(rng);
}

}  // namespace

void SynthParams::validate() const {
  if (!(a_nu > 0.0 && b_nu > a_nu)) throw std::invalid_argument("need 0 < a_nu < b_nu");
  if (a_n < 1 || b_n < a_n) throw std::invalid_argument("need 1 <= a_N <= b_N");
  if (!(xi_total >= 0.0 && s_xi >= 0.0 && s_nu >= 0.0))
    throw std::invalid_argument("amplitudes and std-devs must be non-negative");
  if (!(b_phi >= a_phi)) throw std::invalid_argument("need a_phi <= b_phi");
}

SynthParams default_vibration_params() { return SynthParams{}; }

SynthParams default_voluntary_params() {
  SynthParams p;
  p.a_nu = 0.01;
  p.b_nu = 0.3;
  p.a_n = 7;
  p.b_n = 10;
  p.xi_total = 10.0;
  p.s_xi = 0.3;
  p.s_nu = 0.0;
  p.frequency_law = FrequencyLaw::Exponential;
  return p;
}

void MotionSpec::validate() const {
  if (vibration.empty()) throw std::invalid_argument("motion needs at least one vibration component");
  if (!(drift_duration > 0.0)) throw std::invalid_argument("drift duration must be positive");
  if (!(s_n >= 0.0)) throw std::invalid_argument("noise std-dev must be non-negative");
  for (const auto* list : {&voluntary, &vibration})
    for (const auto& c : *list)
      if (!(c.nu > 0.0) || !(c.xi >= 0.0))
        throw std::invalid_argument("components need nu > 0 and xi >= 0");
}

double mean_amplitude(const SynthParams& p, int k) {
  return p.xi_total / p.b_n * static_cast<double>(p.b_n - k);
}

std::vector<SineComponent> sample_components(const SynthParams& p, Rng& rng) {
  p.validate();
  const std::uint64_t base = rng();
  const int n = std::uniform_int_distribution<int>(p.a_n, p.b_n)(rng);
  std::vector<SineComponent> out;
  out.reserve(static_cast<std::size_t>(n));
  const double amp_sd = p.s_xi / n;
  for (int k = 0; k < n; ++k) {
    Rng comp = derive(base, static_cast<std::uint64_t>(k));
    SineComponent c;
    c.nu = draw_frequency(p, comp);
    c.phi = std::uniform_real_distribution<double>(p.a_phi, p.b_phi)(comp);
    const double m = mean_amplitude(p, k);
    c.xi = std::max(0.0, amp_sd > 0.0 ? std::normal_distribution<double>(m, amp_sd)(comp) : m);
    out.push_back(c);
  }
  return out;
}

void apply_drift(MotionSpec& spec, const SynthParams& p, Rng& rng) {
  const std::uint64_t base = rng();
  for (std::size_t k = 0; k < spec.vibration.size(); ++k) {
    auto& c = spec.vibration[k];
    if (c.nu_prime) throw std::logic_error("drift already applied");
    Rng comp = derive(base, k);
    double nu2 = c.nu;
    if (p.s_nu > 0.0) nu2 = std::normal_distribution<double>(c.nu, p.s_nu)(comp);
    // Keep the drifted frequency physical; only reachable with s_nu of order nu.
    c.nu_prime = std::max(std::abs(nu2), 1e-3);
    c.phi_prime = std::uniform_real_distribution<double>(p.a_phi, p.b_phi)(comp);
  }
}

MotionSpec sample_motion(const MotionRecipe& recipe, std::uint64_t seed) {
  MotionSpec spec;
  spec.seed = seed;
  spec.drift_start = recipe.drift_start;
  spec.drift_duration = recipe.drift_duration;
  spec.s_n = recipe.s_n;
  Rng vol = derive(seed, kVoluntary);
  Rng vib = derive(seed, kVibration);
  Rng drift = derive(seed, kDrift);
  spec.voluntary = sample_components(recipe.voluntary, vol);
  spec.vibration = sample_components(recipe.vibration, vib);
  apply_drift(spec, recipe.vibration, drift);
  spec.validate();
  return spec;
}

MotionSpec truncate_vibration(MotionSpec spec, std::size_t n) {
  if (n == 0 || n > spec.vibration.size())
    throw std::invalid_argument("cannot keep that many vibration components");
  spec.vibration.resize(n);
  return spec;
}

CrossfadeWeights crossfade(const MotionSpec& spec, double t) {
  const double u = (t - spec.drift_start) / spec.drift_duration;
  const double fade_in = std::clamp(u, 0.0, 1.0);
  return {1.0 - fade_in, fade_in};
}

MotionSample evaluate_motion(const MotionSpec& spec, double t) {
  MotionSample s;
  for (const auto& c : spec.voluntary) {
    const double w = kTwoPi * c.nu;
    s.x_r += c.xi * std::sin(w * t + c.phi);
    s.xdot_r += c.xi * w * std::cos(w * t + c.phi);
    s.xddot_r -= c.xi * w * w * std::sin(w * t + c.phi);
  }
  const auto fade = crossfade(spec, t);
  for (const auto& c : spec.vibration) {
    if (!c.nu_prime) {
      s.f_nu += c.xi * std::sin(kTwoPi * c.nu * t + c.phi);
      continue;
    }
    if (fade.old_weight > 0.0)
      s.f_nu += fade.old_weight * c.xi * std::sin(kTwoPi * c.nu * t + c.phi);
    if (fade.new_weight > 0.0)
      s.f_nu += fade.new_weight * c.xi *
                std::sin(kTwoPi * *c.nu_prime * t + c.phi_prime.value_or(c.phi));
  }
  return s;
}

NoiseSource::NoiseSource(const MotionSpec& spec) : s_n_(spec.s_n), rng_(derive(spec.seed, kNoise)) {}

double NoiseSource::next() { return s_n_ * unit_(rng_); }

MotionEvaluation evaluate(const MotionSpec& spec, double t, NoiseSource& noise) {
  const auto m = evaluate_motion(spec, t);
  return {m.x_r, m.f_nu, noise.next()};
}

MotionTrace render_motion(const MotionSpec& spec, double dt, std::size_t ticks) {
  MotionTrace tr;
  tr.dt = dt;
  tr.x_r.resize(ticks);
  tr.xdot_r.resize(ticks);
  tr.xdot_half.resize(ticks);
  tr.xddot_r.resize(ticks);
  tr.f_nu.resize(ticks);
  tr.f_n.resize(ticks);
  NoiseSource noise(spec);
  for (std::size_t i = 0; i < ticks; ++i) {
    const auto m = evaluate_motion(spec, static_cast<double>(i) * dt);
    tr.x_r[i] = m.x_r;
    tr.xdot_r[i] = m.xdot_r;
    tr.xdot_half[i] = evaluate_motion(spec, (static_cast<double>(i) - 0.5) * dt).xdot_r;
    tr.xddot_r[i] = m.xddot_r;
    tr.f_nu[i] = m.f_nu;
    tr.f_n[i] = noise.next();
  }
  return tr;
}

}  // namespace bmflc

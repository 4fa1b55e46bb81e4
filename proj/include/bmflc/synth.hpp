#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace bmflc {

using Rng = std::mt19937_64;

/// One sinusoid xi * sin(2 pi nu t + phi). After a drift the component is
/// replaced by one at nu_prime with phase phi_prime.
struct SineComponent {
  double nu = 1.0;
  double phi = 0.0;
  double xi = 0.0;
  std::optional<double> nu_prime;
  std::optional<double> phi_prime;

  bool operator==(const SineComponent&) const = default;
};

enum class FrequencyLaw { Uniform, Exponential };

/// Sampling laws for one family of components (vibration or voluntary motion).
struct SynthParams {
  double a_nu = 6.0;
  double b_nu = 10.0;
  int a_n = 1;
  int b_n = 3;
  double xi_total = 0.6;
  /// Amplitude std-dev is s_xi / N for a motion with N components.
  double s_xi = 0.05;
  double s_nu = 0.5;
  double a_phi = 0.0;
  double b_phi = 6.283185307179586;
  FrequencyLaw frequency_law = FrequencyLaw::Uniform;

  void validate() const;
  bool operator==(const SynthParams&) const = default;
};

SynthParams default_vibration_params();
SynthParams default_voluntary_params();

struct MotionSpec {
  std::vector<SineComponent> voluntary;
  std::vector<SineComponent> vibration;
  double drift_start = 12.25;
  double drift_duration = 0.5;
  double s_n = 0.001;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const MotionSpec&) const = default;
};

/// Everything needed to generate a full motion from a seed.
struct MotionRecipe {
  SynthParams vibration = default_vibration_params();
  SynthParams voluntary = default_voluntary_params();
  double drift_start = 12.25;
  double drift_duration = 0.5;
  double s_n = 0.001;

  bool operator==(const MotionRecipe&) const = default;
};

/// Mean amplitude of component k (0-based): (xi_total / b_N) * (b_N - k).
double mean_amplitude(const SynthParams& p, int k);

/// Draws N components. N is drawn from rng; each component then uses its own
/// stream keyed by (a draw from rng, k), so component k does not depend on how
/// many components follow it.
std::vector<SineComponent> sample_components(const SynthParams& p, Rng& rng);

/// Assigns nu' ~ N(nu, s_nu) and an independent phase to every vibration component.
void apply_drift(MotionSpec& spec, const SynthParams& p, Rng& rng);

/// Full motion for a seed: voluntary, vibration and drift use separate streams.
MotionSpec sample_motion(const MotionRecipe& recipe, std::uint64_t seed);

/// Keeps only the first n vibration components.
MotionSpec truncate_vibration(MotionSpec spec, std::size_t n);

struct MotionSample {
  double x_r = 0.0;     // voluntary position
  double xdot_r = 0.0;  // analytic derivative of x_r
  double xddot_r = 0.0;
  double f_nu = 0.0;    // vibration force
};

/// Deterministic part of the motion at time t.
MotionSample evaluate_motion(const MotionSpec& spec, double t);

/// Old and new amplitude weights of a drifting component at time t.
struct CrossfadeWeights {
  double old_weight;
  double new_weight;
};
CrossfadeWeights crossfade(const MotionSpec& spec, double t);

/// Standard-normal stream scaled by s_n. The underlying sequence depends only
/// on the motion seed, so runs differing only in s_n share their noise shape.
class NoiseSource {
 public:
  explicit NoiseSource(const MotionSpec& spec);
  double next();

 private:
  double s_n_;
  Rng rng_;
  std::normal_distribution<double> unit_{0.0, 1.0};
};

struct MotionEvaluation {
  double x_r;
  double f_nu;
  double f_n;
};

/// Deterministic motion plus one fresh noise draw.
MotionEvaluation evaluate(const MotionSpec& spec, double t, NoiseSource& noise);

/// A motion sampled on the tick grid t_i = i * dt, noise included.
struct MotionTrace {
  double dt = 0.001;
  std::vector<double> x_r;
  std::vector<double> xdot_r;
  /// Reference rate at t_i - dt/2, where the semi-implicit Euler velocity lives.
  std::vector<double> xdot_half;
  std::vector<double> xddot_r;
  std::vector<double> f_nu;
  std::vector<double> f_n;

  std::size_t size() const { return x_r.size(); }
};

MotionTrace render_motion(const MotionSpec& spec, double dt, std::size_t ticks);

}  // namespace bmflc

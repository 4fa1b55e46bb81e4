#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmflc/filter.hpp"

namespace bmflc {

/// 1 - sum((f_nu - f_ff)^2) / sum(f_nu^2). Empty when f_nu has zero power.
/// Throws std::invalid_argument on empty or mismatched series.
std::optional<double> suppression_rate(std::span<const double> f_nu, std::span<const double> f_ff);

/// Second-order section b0 b1 b2 a0 a1 a2 with a0 = 1.
using Biquad = std::array<double, 6>;

/// Digital Butterworth band-pass of prototype order `order` (2*order poles),
/// designed through the bilinear transform with pre-warped band edges.
/// The overall gain sits on the first section.
std::vector<Biquad> butter_bandpass(int order, double low, double high, double fs);

/// Cascade of direct-form-II-transposed sections. zi holds two states per section
/// and is updated in place when given.
std::vector<double> sosfilt(std::span<const Biquad> sos, std::span<const double> x,
                            std::vector<std::array<double, 2>>* zi = nullptr);

/// Steady-state section states for a unit step input.
std::vector<std::array<double, 2>> sosfilt_zi(std::span<const Biquad> sos);

/// Default edge padding used by sosfiltfilt: 3 * (2 * sections + 1).
std::size_t default_padlen(std::span<const Biquad> sos);

/// Forward-backward filtering with odd extension of padlen samples at both ends
/// and steady-state initial conditions. Requires x.size() > padlen.
std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x,
                                std::optional<std::size_t> padlen = std::nullopt);

/// Mean square of the zero-phase band-passed series (4th-order Butterworth).
/// Throws std::invalid_argument when the band does not fit below Nyquist.
double bandpass_mse(std::span<const double> series, double fs, double low = 3.0, double high = 100.0);

struct Spectrum {
  std::vector<double> freq;
  /// Single-sided amplitude: a unit sine peaks at 1, a constant c shows c at 0 Hz.
  std::vector<double> magnitude;
};

/// Single-sided amplitude spectrum via a real FFT. Requires at least 2 samples.
Spectrum dft_magnitude(std::span<const double> series, double fs);

/// Mean square of the time series recovered from a single-sided spectrum.
double spectrum_power(const Spectrum& s, std::size_t n);

/// Magnitude at the bin nearest to f.
double magnitude_at(const Spectrum& s, double f);

struct TimingStats {
  Variant variant = Variant::Lms;
  std::size_t L = 0;
  std::size_t samples = 0;
  double mean_ns = 0.0;
  double std_ns = 0.0;
};

struct TimingOptions {
  std::size_t reps = 100;
  /// Steps timed together in one sample; the sample is their mean.
  std::size_t steps_per_rep = 10;
  std::size_t warmup_steps = 50;
  std::uint64_t seed = 7;
};

/// Wall time of isolated update steps on identical synthetic inputs.
std::vector<TimingStats> time_step_sizes(std::span<const Variant> variants, std::size_t L,
                                         const TimingOptions& opts = {});

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
/// Sample standard deviation (n - 1); 0 for a single value.
MeanStd mean_std(std::span<const double> v);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace bmflc

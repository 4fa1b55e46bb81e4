#include "bmflc/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <fftw3.h>

namespace bmflc {

namespace {

using cplx = std::complex<double>;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::optional<double> suppression_rate(std::span<const double> f_nu, std::span<const double> f_ff) {
  if (f_nu.empty() || f_nu.size() != f_ff.size())
    throw std::invalid_argument("suppression rate needs two non-empty series of equal length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f_nu.size(); ++i) {
    const double d = f_nu[i] - f_ff[i];
    num += d * d;
    den += f_nu[i] * f_nu[i];
  }
  if (den == 0.0) return std::nullopt;
  return 1.0 - num / den;
}

std::vector<Biquad> butter_bandpass(int order, double low, double high, double fs) {
  if (order < 1) throw std::invalid_argument("filter order must be positive");
  if (!(fs > 0.0) || !(low > 0.0) || !(high > low) || !(high < fs / 2.0))
    throw std::invalid_argument("band edges must satisfy 0 < low < high < fs/2");
  const int n = order;
  // Analog prototype poles, then low-pass to band-pass around the pre-warped edges.
  const double w1 = 4.0 * std::tan(std::numbers::pi * low / fs);
  const double w2 = 4.0 * std::tan(std::numbers::pi * high / fs);
  const double bw = w2 - w1;
  const double wo2 = w1 * w2;
  std::vector<cplx> poles;
  for (int m = -n + 1; m < n; m += 2) {
    const cplx p = -std::exp(cplx(0.0, std::numbers::pi * m / (2.0 * n)));
    const cplx p_lp = p * (bw / 2.0);
    const cplx root = std::sqrt(p_lp * p_lp - wo2);
    poles.push_back(p_lp + root);
    poles.push_back(p_lp - root);
  }
  // Bilinear transform with fs = 2 (normalised); n zeros go to +1 and n to -1.
  const double fs2 = 4.0;
  cplx k = std::pow(bw, n);
  cplx den_prod = 1.0;
  std::vector<cplx> zpoles;
  for (const auto& p : poles) {
    den_prod *= fs2 - p;
    zpoles.push_back((fs2 + p) / (fs2 - p));
  }
  const double gain = (k * std::pow(fs2, n) / den_prod).real();

  // Keep the upper-half-plane pole of each conjugate pair, nearest the unit circle last.
  std::vector<cplx> upper;
  for (const auto& p : zpoles)
    if (p.imag() > 0.0) upper.push_back(p);
  if (upper.size() != static_cast<std::size_t>(n))
    throw std::runtime_error("unexpected pole layout in band-pass design");
  std::sort(upper.begin(), upper.end(),
            [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });

  std::vector<Biquad> sos;
  for (std::size_t i = 0; i < upper.size(); ++i) {
    const double g = (i == 0) ? gain : 1.0;
    sos.push_back({g, 0.0, -g, 1.0, -2.0 * upper[i].real(), std::norm(upper[i])});
  }
  return sos;
}

std::vector<double> sosfilt(std::span<const Biquad> sos, std::span<const double> x,
                            std::vector<std::array<double, 2>>* zi) {
  std::vector<std::array<double, 2>> local(sos.size(), {0.0, 0.0});
  auto& z = zi ? *zi : local;
  if (z.size() != sos.size()) throw std::invalid_argument("need two states per section");
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t s = 0; s < sos.size(); ++s) {
    const auto& c = sos[s];
    double z0 = z[s][0], z1 = z[s][1];
    for (double& v : y) {
      const double in = v;
      const double out = c[0] * in + z0;
      z0 = c[1] * in - c[4] * out + z1;
      z1 = c[2] * in - c[5] * out;
      v = out;
    }
    z[s] = {z0, z1};
  }
  return y;
}

std::vector<std::array<double, 2>> sosfilt_zi(std::span<const Biquad> sos) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& c : sos) {
    // Solve (I - A^T) z = b[1:] - a[1:] b0 for the transposed companion matrix.
    const double b0 = c[0], b1 = c[1], b2 = c[2], a1 = c[4], a2 = c[5];
    const double r0 = b1 - a1 * b0, r1 = b2 - a2 * b0;
    const double det = (1.0 + a1) + a2;
    const double z0 = (r0 + r1) / det;
    const double z1 = r1 - a2 * z0;
    zi.push_back({scale * z0, scale * z1});
    scale *= (b0 + b1 + b2) / (1.0 + a1 + a2);
  }
  return zi;
}

std::size_t default_padlen(std::span<const Biquad> sos) {
  std::size_t trailing_b = 0, trailing_a = 0;
  for (const auto& c : sos) {
    trailing_b += c[2] == 0.0;
    trailing_a += c[5] == 0.0;
  }
  return 3 * (2 * sos.size() + 1 - std::min(trailing_b, trailing_a));
}

std::vector<double> sosfiltfilt(std::span<const Biquad> sos, std::span<const double> x,
                                std::optional<std::size_t> padlen) {
  const std::size_t pad = padlen.value_or(default_padlen(sos));
  if (x.size() <= pad) throw std::invalid_argument("series too short for the filter padding");
  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = sosfilt_zi(sos);
  auto scaled = [&](double x0) {
    auto z = zi;
    for (auto& s : z) s = {s[0] * x0, s[1] * x0};
    return z;
  };
  auto z = scaled(ext.front());
  auto y = sosfilt(sos, ext, &z);
  std::reverse(y.begin(), y.end());
  z = scaled(y.front());
  y = sosfilt(sos, y, &z);
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad), y.end() - static_cast<std::ptrdiff_t>(pad)};
}

double bandpass_mse(std::span<const double> series, double fs, double low, double high) {
  const auto sos = butter_bandpass(4, low, high, fs);
  const auto y = sosfiltfilt(sos, series);
  double acc = 0.0;
  for (double v : y) acc += v * v;
  return acc / static_cast<double>(y.size());
}

Spectrum dft_magnitude(std::span<const double> series, double fs) {
  const std::size_t n = series.size();
  if (n < 2) throw std::invalid_argument("spectrum needs at least two samples");
  if (!(fs > 0.0)) throw std::invalid_argument("sample rate must be positive");
  const std::size_t bins = n / 2 + 1;
  std::vector<double> in(series.begin(), series.end());
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  Spectrum s;
  s.freq.resize(bins);
  s.magnitude.resize(bins);
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < bins; ++k) {
    const double mag = std::hypot(out[k][0], out[k][1]) / nd;
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    s.freq[k] = static_cast<double>(k) * fs / nd;
    s.magnitude[k] = edge ? mag : 2.0 * mag;
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(out);
  return s;
}

double spectrum_power(const Spectrum& s, std::size_t n) {
  double p = 0.0;
  for (std::size_t k = 0; k < s.magnitude.size(); ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    p += edge ? s.magnitude[k] * s.magnitude[k] : 0.5 * s.magnitude[k] * s.magnitude[k];
  }
  return p;
}

double magnitude_at(const Spectrum& s, double f) {
  if (s.freq.size() < 2) throw std::invalid_argument("empty spectrum");
  const double df = s.freq[1] - s.freq[0];
  const auto k = static_cast<std::size_t>(std::llround(std::max(0.0, f) / df));
  return s.magnitude[std::min(k, s.magnitude.size() - 1)];
}

std::vector<TimingStats> time_step_sizes(std::span<const Variant> variants, std::size_t L,
                                         const TimingOptions& opts) {
  if (opts.reps == 0 || opts.steps_per_rep == 0) throw std::invalid_argument("reps must be >= 1");
  const auto grid = make_grid(6.0, 10.0, L);
  const std::size_t total = opts.warmup_steps + opts.reps * opts.steps_per_rep;
  // Identical inputs for every variant: random sample times excite all basis directions.
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> t_dist(0.0, 1000.0);
  std::normal_distribution<double> e_dist(0.0, 1e-3);
  std::vector<Vector> basis;
  std::vector<double> errors;
  const std::size_t distinct = std::min<std::size_t>(total, 256);
  for (std::size_t i = 0; i < distinct; ++i) {
    basis.push_back(eval_basis(grid, t_dist(rng)).g);
    errors.push_back(e_dist(rng));
  }

  std::vector<TimingStats> out;
  for (Variant v : variants) {
    StepSizeParams p;
    p.variant = v;
    p.lambda_forget = 0.9999;
    p.lambda_rls = 1.0;
    FilterState s = FilterState::initial(L, p);
    std::size_t i = 0;
    for (; i < opts.warmup_steps; ++i) step(s, basis[i % distinct], errors[i % distinct], p);
    std::vector<double> samples;
    samples.reserve(opts.reps);
    for (std::size_t r = 0; r < opts.reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t j = 0; j < opts.steps_per_rep; ++j, ++i)
        step(s, basis[i % distinct], errors[i % distinct], p);
      const auto t1 = std::chrono::steady_clock::now();
      samples.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count() /
                        static_cast<double>(opts.steps_per_rep));
    }
    const auto ms = mean_std(samples);
    out.push_back({v, L, samples.size(), ms.mean, ms.std});
  }
  return out;
}

MeanStd mean_std(std::span<const double> v) {
  if (v.empty()) return {};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("rank correlation needs two equal series of length >= 2");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  return pearson(rx, ry);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("slope fit needs two equal series of length >= 2");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace bmflc

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "bmflc/metrics.hpp"

using namespace bmflc;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> oracle_input() {
  std::vector<double> x(500);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(i);
    x[i] = std::sin(0.03 * d * d * 0.01) + 0.1 * std::cos(1.7 * d) + 0.5;
  }
  return x;
}

double gain_at(const std::vector<Biquad>& sos, double f, double fs) {
  const std::complex<double> z = std::polar(1.0, 2.0 * kPi * f / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sos) {
    const auto zi = 1.0 / z;
    h *= (s[0] + s[1] * zi + s[2] * zi * zi) / (s[3] + s[4] * zi + s[5] * zi * zi);
  }
  return std::abs(h);
}

}  // namespace

TEST_CASE("suppression rate") {
  const std::vector<double> f{1.0, -2.0, 2.0};
  CHECK(*suppression_rate(f, f) == 1.0);
  CHECK(*suppression_rate(f, std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
  CHECK(*suppression_rate(f, std::vector<double>{0.0, -2.0, 2.0}) == doctest::Approx(1.0 - 1.0 / 9.0));
  CHECK(*suppression_rate(f, std::vector<double>{-1.0, 2.0, -2.0}) == doctest::Approx(-3.0));
  CHECK(*suppression_rate(f, std::vector<double>{0.5, -1.0, 1.0}) == doctest::Approx(0.75));
  CHECK(*suppression_rate(f, std::vector<double>{2.0, -4.0, 4.0}) == doctest::Approx(0.0));
  CHECK_FALSE(suppression_rate(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 1.0}).has_value());
  CHECK_THROWS_AS(suppression_rate(f, std::vector<double>{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(suppression_rate(std::vector<double>{}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("suppression rate is scale invariant") {
  const std::vector<double> f{0.3, -1.2, 0.8, 0.1}, g{0.2, -1.0, 0.9, -0.1};
  std::vector<double> fs, gs;
  for (std::size_t i = 0; i < f.size(); ++i) {
    fs.push_back(-7.5 * f[i]);
    gs.push_back(-7.5 * g[i]);
  }
  CHECK(*suppression_rate(fs, gs) == doctest::Approx(*suppression_rate(f, g)).epsilon(1e-14));
}

TEST_CASE("band-pass MSE on pure tones") {
  const double fs = 1000.0;
  std::vector<double> low(10000), mid(10000), zero(10000, 0.0);
  for (std::size_t i = 0; i < low.size(); ++i) {
    const double t = static_cast<double>(i) / fs;
    low[i] = std::sin(2.0 * kPi * 1.0 * t);
    mid[i] = std::sin(2.0 * kPi * 10.0 * t);
  }
  CHECK(bandpass_mse(low, fs) <= 0.01 * 0.5);
  CHECK(bandpass_mse(mid, fs) == doctest::Approx(0.5).epsilon(0.05));
  CHECK(bandpass_mse(zero, fs) == 0.0);
  CHECK_THROWS_AS(bandpass_mse(mid, 150.0), std::invalid_argument);
}

TEST_CASE("band-pass design response") {
  const auto sos = butter_bandpass(4, 3.0, 100.0, 1000.0);
  REQUIRE(sos.size() == 4);
  CHECK(default_padlen(sos) == 27);
  CHECK(gain_at(sos, 3.0, 1000.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(gain_at(sos, 100.0, 1000.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(gain_at(sos, std::sqrt(300.0), 1000.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(gain_at(sos, 0.3, 1000.0) < 1e-3);
  CHECK(gain_at(sos, 400.0, 1000.0) < 1e-3);
  CHECK_THROWS_AS(butter_bandpass(4, 3.0, 600.0, 1000.0), std::invalid_argument);
}

TEST_CASE("one-pass filtering matches the reference cascade") {
  const auto sos = butter_bandpass(4, 3.0, 100.0, 1000.0);
  const auto x = oracle_input();
  const auto y = sosfilt(sos, x);
  CHECK(y[10] == doctest::Approx(0.3941068560105681).epsilon(1e-10));
  CHECK(y[100] == doctest::Approx(-0.8148394034902693).epsilon(1e-10));
}

TEST_CASE("steady-state initial conditions hold a step input") {
  const auto sos = butter_bandpass(4, 3.0, 100.0, 1000.0);
  auto zi = sosfilt_zi(sos);
  const std::vector<double> ones(50, 1.0);
  const auto y = sosfilt(sos, ones, &zi);
  for (double v : y) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("zero-phase filtering matches the reference") {
  const auto sos = butter_bandpass(4, 3.0, 100.0, 1000.0);
  const auto x = oracle_input();
  const auto y = sosfiltfilt(sos, x);
  REQUIRE(y.size() == x.size());
  CHECK(y[0] == doctest::Approx(-0.13694501656106847).epsilon(1e-10));
  CHECK(y[1] == doctest::Approx(-0.17962258224262623).epsilon(1e-10));
  CHECK(y[250] == doctest::Approx(-0.08829434931252417).epsilon(1e-10));
  CHECK(y[499] == doctest::Approx(-0.08337282410454694).epsilon(1e-10));
  CHECK(bandpass_mse(x, 1000.0) == doctest::Approx(0.47109448923226455).epsilon(1e-10));
  CHECK_THROWS_AS(sosfiltfilt(sos, std::vector<double>(27, 1.0)), std::invalid_argument);
}

TEST_CASE("zero-phase filtering does not shift an in-band sine") {
  const auto sos = butter_bandpass(4, 3.0, 100.0, 1000.0);
  std::vector<double> x(4000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * kPi * 17.0 * static_cast<double>(i) / 1000.0);
  const auto y = sosfiltfilt(sos, x);
  for (std::size_t i = 1000; i < 3000; ++i) CHECK(std::abs(y[i] - x[i]) < 0.01);
}

TEST_CASE("amplitude spectrum") {
  const double fs = 1000.0;
  const std::size_t n = 2000;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    x[i] = 0.7 + 1.5 * std::sin(2.0 * kPi * 6.5 * t) + 0.2 * std::cos(2.0 * kPi * 13.0 * t);
  }
  const auto s = dft_magnitude(x, fs);
  REQUIRE(s.freq.size() == n / 2 + 1);
  CHECK(s.freq[13] == doctest::Approx(6.5));
  CHECK(magnitude_at(s, 0.0) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(magnitude_at(s, 6.5) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(magnitude_at(s, 13.0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(magnitude_at(s, 40.0) < 1e-12);
  double ms = 0.0;
  for (double v : x) ms += v * v;
  CHECK(spectrum_power(s, n) == doctest::Approx(ms / static_cast<double>(n)).epsilon(1e-12));
  CHECK_THROWS_AS(dft_magnitude(std::vector<double>{1.0}, fs), std::invalid_argument);
}

TEST_CASE("spectral peak of a 6.3 Hz sine") {
  std::vector<double> x(10000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * kPi * 6.3 * static_cast<double>(i) / 1000.0);
  const auto s = dft_magnitude(x, 1000.0);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < s.magnitude.size(); ++k)
    if (s.magnitude[k] > s.magnitude[peak]) peak = k;
  CHECK(s.freq[peak] == doctest::Approx(6.3).epsilon(0.1 / 6.3));
  const auto c = dft_magnitude(std::vector<double>(64, 2.5), 100.0);
  CHECK(c.magnitude[0] == doctest::Approx(2.5));
  for (std::size_t k = 1; k < c.magnitude.size(); ++k) CHECK(c.magnitude[k] < 1e-12);
}

TEST_CASE("statistics helpers") {
  const std::vector<double> a{3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0};
  const std::vector<double> b{2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0};
  CHECK(spearman(a, b) == doctest::Approx(0.19885368120992467).epsilon(1e-12));
  const std::vector<double> up{1.0, 2.0, 3.0, 4.0}, down{10.0, 5.0, 1.0, 0.5};
  CHECK(spearman(up, down) == doctest::Approx(-1.0));
  const auto ms = mean_std(std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == 2.5);
  CHECK(ms.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(mean_std(std::vector<double>{7.0}).std == 0.0);
  const std::vector<double> xs{60.0, 120.0, 240.0, 480.0};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(3.0 * x * x);
  CHECK(loglog_slope(xs, ys) == doctest::Approx(2.0));
}

TEST_CASE("timing returns one record per variant") {
  TimingOptions o;
  o.reps = 5;
  o.steps_per_rep = 2;
  o.warmup_steps = 2;
  const std::vector<Variant> vs{Variant::Lms, Variant::Rls};
  const auto stats = time_step_sizes(vs, 10, o);
  REQUIRE(stats.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(stats[i].variant == vs[i]);
    CHECK(stats[i].L == 10);
    CHECK(stats[i].samples == 5);
    CHECK(stats[i].mean_ns > 0.0);
  }
  o.reps = 1;
  const auto single = time_step_sizes(vs, 10, o);
  CHECK(single[0].samples == 1);
  CHECK(single[0].std_ns == 0.0);
}

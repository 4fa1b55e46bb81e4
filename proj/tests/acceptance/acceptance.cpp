#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bmflc/campaign.hpp"
#include "bmflc/csv.hpp"
#include "bmflc/parallel.hpp"

using namespace bmflc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

fs::path g_out = "acceptance_out";
std::size_t g_jobs = 1;

fs::path fresh_dir(const std::string& name) {
  const auto dir = g_out / name;
  fs::remove_all(dir);
  return dir;
}

Outcome analytic_checks() {
  std::vector<std::string> bad;

  StepSizeParams d;
  d.variant = Variant::Damped;
  d.eta = 0.004;
  d.k_dmp = 1500.0;
  d.x_dmp = 0.02;
  d.lambda_forget = 1.0;
  FilterState s = FilterState::initial(1, d);
  s.w << 0.02, -0.02;
  Vector g(2);
  g << 0.8, 0.6;
  const double e = 0.3;
  step_damped(s, g, e, d);
  for (int k = 0; k < 2; ++k) {
    const double w0 = k == 0 ? 0.02 : -0.02;
    const double mu = d.eta * g[k] / 2.0;
    if (std::abs((s.w[k] - w0) - mu * e) > 1e-17) bad.push_back("damped midpoint step");
  }
  if (damping_factor(d.x_dmp, d.k_dmp, d.x_dmp) != 0.5) bad.push_back("sigmoid midpoint");

  StepSizeParams l;
  l.variant = Variant::Lms;
  l.eta = 0.01;
  l.lambda_forget = 0.9999;
  FilterState ls = FilterState::initial(100, l);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (Eigen::Index k = 0; k < ls.w.size(); ++k) ls.w[k] = u(rng);
  const auto grid = make_grid(6.0, 10.0, 100);
  const double t = 3.217;
  const auto b = eval_basis(grid, t);
  const double err = 0.42;
  const Vector w0 = ls.w;
  step_lms(ls, b.g, err, l);
  double worst = 0.0;
  for (std::size_t r = 0; r < 100; ++r) {
    const double ph = 2.0 * std::numbers::pi * (6.0 + static_cast<double>(r) * 4.0 / 100.0) * t;
    const auto ri = static_cast<Eigen::Index>(r);
    const double ws = l.lambda_forget * w0[ri] + 2.0 * l.eta * std::sin(ph) * err;
    const double wc = l.lambda_forget * w0[ri + 100] + 2.0 * l.eta * std::cos(ph) * err;
    worst = std::max({worst, std::abs(ls.w[ri] - ws), std::abs(ls.w[ri + 100] - wc)});
  }
  if (worst > 1e-15) bad.push_back("LMS step error " + num(worst));

  double spacing_err = std::abs(grid.spacing() - 0.04);
  for (std::size_t r = 1; r < grid.size(); ++r)
    spacing_err = std::max(spacing_err, std::abs(grid[r] - grid[r - 1] - 0.04));
  if (spacing_err > 1e-12) bad.push_back("grid spacing error " + num(spacing_err));

  if (!bad.empty()) return {false, bad.front()};
  return {true, "sigmoid midpoint exact, LMS step error " + num(worst) + ", spacing 0.04 (error " + num(spacing_err) + ")"};
}

Outcome rls_kalman_equivalence() {
  const std::size_t L = 100;
  const auto grid = make_grid(6.0, 10.0, L);
  StepSizeParams pr;
  pr.variant = Variant::Rls;
  pr.lambda_rls = 1.0;
  pr.lambda_forget = 0.9999;
  pr.p0 = 0.01;
  StepSizeParams pk = pr;
  pk.variant = Variant::Kalman;
  pk.r_kf = 1.0;
  pk.q_kf_scale = 0.0;
  auto sr = FilterState::initial(L, pr);
  auto sk = FilterState::initial(L, pk);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.05);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = i * 0.001;
    const auto b = eval_basis(grid, t);
    const Vector kr = rls_gain(sr.P, b.g, pr.lambda_rls);
    const Vector kk = kalman_gain(sk.P, b.g, pk.r_kf);
    worst = std::max(worst, (kr - kk).cwiseAbs().maxCoeff() / kr.cwiseAbs().maxCoeff());
    const double d = 0.4 * std::sin(2.0 * std::numbers::pi * 7.3 * t) + noise(rng);
    step(sr, b.g, d - predict(sr, b), pr);
    step(sk, b.g, d - predict(sk, b), pk);
  }
  return {worst <= 1e-9, "max relative gain difference " + num(worst) + " over 1000 steps"};
}

Outcome convergence() {
  StepSizeParams p;
  p.variant = Variant::Lms;
  p.eta = 3e-4;
  p.lambda_forget = 1.0;
  BmflcFilter f(make_grid(6.0, 10.0, 20), p);
  const double amp = 0.5;
  double worst = 0.0;
  const int n = 60000;
  for (int i = 0; i < n; ++i) {
    const double t = i * 0.001;
    const double e = amp * std::sin(2.0 * std::numbers::pi * 8.0 * t + 0.3) - f.predict(t);
    f.update(e);
    if (i >= n - 1000) worst = std::max(worst, std::abs(e));
  }
  const Vector& w = f.state().w;
  const double on = std::abs(w[10]) + std::abs(w[30]);
  const double off = (w.cwiseAbs().sum() - on) / w.cwiseAbs().sum();

  MotionSpec m = campaign_motion(MotionRecipe{}, 1);
  m.vibration = {SineComponent{8.0, 0.4, 0.5, std::nullopt, std::nullopt}};
  m.s_n = 0.0;
  TuneContext ctx;
  const auto tuned = tune_motion(default_problem(Variant::Damped), m, ctx);
  FilterSetup setup{ctx.a_nu, ctx.b_nu, ctx.L, tuned.params};
  RunOptions o;
  o.duration = 24.5;
  o.keep_series = false;
  o.sr_warmup = 24.5 / 3.0;
  const auto rec = run_closed_loop(m, setup, ctx.controller, ctx.plant, o);
  const double sr = rec.sr.value_or(-INFINITY);

  const bool pass = worst < 0.01 * amp && off < 0.05 && sr >= 0.9;
  return {pass, "LMS residual " + num(worst / amp) + " of amplitude, off-target mass " + num(off) +
                    "; damped SR over final two-thirds " + num(sr) + " (eta " + num(tuned.params.eta) + ")"};
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;
};

Table numeric_table(const fs::path& path) {
  const auto csv = read_csv_file(path);
  Table t{csv.header, {}};
  for (const auto& row : csv.rows) {
    std::vector<std::optional<double>> r;
    for (const auto& cell : row) {
      if (cell.empty() || cell == "mean") {
        r.emplace_back();
      } else {
        r.emplace_back(std::stod(cell));
      }
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

Outcome method_comparison() {
  CampaignConfig cfg;
  cfg.out = fresh_dir("compare");
  cfg.jobs = g_jobs;
  const auto r = cmd_compare(cfg);
  std::cout << r.summary;
  const auto t = numeric_table(cfg.out / "compare.csv");
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), name) - t.header.begin());
  };
  const std::size_t lms = col("lms"), damped = col("damped");
  int wins = 0;
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    if (row[damped] && (!row[lms] || *row[damped] >= *row[lms])) ++wins;
  }
  const auto& means = t.rows.back();
  double best = -INFINITY;
  std::string best_name;
  for (std::size_t c = 1; c < t.header.size(); ++c)
    if (means[c] && *means[c] > best) {
      best = *means[c];
      best_name = t.header[c];
    }
  const double dm = means[damped].value_or(-INFINITY);
  const bool pass = wins >= 8 && dm >= best - 0.02;
  return {pass, "damped >= lms on " + std::to_string(wins) + "/10 motions; damped mean " + num(dm) +
                    ", best mean " + num(best) + " (" + best_name + ")"};
}

Outcome timing() {
  const std::vector<Variant> all(std::begin(kAllVariants), std::end(kAllVariants));
  const std::vector<std::size_t> sizes{60, 120, 240, 480};
  std::map<Variant, std::vector<double>> means;
  double at120[4] = {};
  TimingOptions o;
  o.reps = 100;
  for (auto L : sizes) {
    for (const auto& st : time_step_sizes(all, L, o)) {
      means[st.variant].push_back(st.mean_ns);
      if (L == 120) at120[static_cast<int>(st.variant)] = st.mean_ns;
    }
  }
  const std::vector<double> xs(sizes.begin(), sizes.end());
  std::ostringstream d;
  bool pass = true;
  const double damped = at120[static_cast<int>(Variant::Damped)];
  for (Variant v : {Variant::Rls, Variant::Kalman}) {
    const double ratio = at120[static_cast<int>(v)] / damped;
    pass = pass && ratio >= 10.0;
    d << to_string(v) << "/damped at L=120 " << num(ratio, 3) << "x; ";
  }
  for (Variant v : all) {
    const double k = loglog_slope(xs, means[v]);
    const double want = (v == Variant::Rls || v == Variant::Kalman) ? 2.0 : 1.0;
    pass = pass && std::abs(k - want) <= 0.3;
    d << to_string(v) << " exponent " << num(k, 3) << (v == Variant::Kalman ? "" : ", ");
  }
  return {pass, d.str()};
}

std::vector<std::pair<double, double>> sweep_means(const fs::path& csv_path) {
  const auto t = numeric_table(csv_path);
  const auto mean_col = static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), "mean") - t.header.begin());
  std::vector<std::pair<double, double>> out;
  for (const auto& row : t.rows) out.emplace_back(*row[0], row[mean_col].value_or(NAN));
  return out;
}

double mean_at(const std::vector<std::pair<double, double>>& s, double x) {
  for (auto [v, m] : s)
    if (v == x) return m;
  return NAN;
}

Outcome limits() {
  std::ostringstream d;
  bool pass = true;
  const auto run = [&](LimitKind kind) {
    CampaignConfig cfg;
    cfg.out = fresh_dir("limits_" + to_string(kind));
    cfg.jobs = g_jobs;
    cfg.limits.kind = kind;
    const auto r = cmd_limits(cfg);
    std::cout << r.summary;
    return sweep_means(cfg.out / ("limits_" + to_string(kind) + ".csv"));
  };

  const auto nnu = run(LimitKind::Nnu);
  const double m1 = mean_at(nnu, 1), m2 = mean_at(nnu, 2), m3 = mean_at(nnu, 3);
  double lo = INFINITY, hi = -INFINITY;
  for (double n : {4.0, 5.0, 6.0}) {
    lo = std::min(lo, mean_at(nnu, n));
    hi = std::max(hi, mean_at(nnu, n));
  }
  const bool a = m1 > m2 && m2 > m3 && hi - lo < 0.05;
  d << "(a) " << (a ? "ok" : "no") << ": SR " << num(m1) << " > " << num(m2) << " > " << num(m3)
    << ", spread over 4..6 " << num(hi - lo) << "; ";

  const auto band = run(LimitKind::Band);
  const double s10 = mean_at(band, 10.0), s100 = mean_at(band, 100.0);
  const bool b = s10 - s100 >= 0.1;
  d << "(b) " << (b ? "ok" : "no") << ": SR at 10 Hz " << num(s10) << ", at 100 Hz " << num(s100) << "; ";

  const auto noise = run(LimitKind::Noise);
  std::vector<double> logs, srs;
  for (auto [sn, m] : noise) {
    logs.push_back(std::log(sn));
    srs.push_back(m);
  }
  const double rho = spearman(logs, srs);
  const bool c = rho <= -0.9;
  d << "(c) " << (c ? "ok" : "no") << ": Spearman " << num(rho);
  pass = a && b && c;
  return {pass, d.str()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = os.str();
  }
  return files;
}

Outcome determinism() {
  const auto run_all = [](const fs::path& out, std::size_t jobs) {
    CampaignConfig cfg = campaign_config_from_json(Json::parse(R"({
      "seeds": {"first": 1, "count": 3},
      "duration": 6.0,
      "tuning": {"motions": 2, "max_evals": 24},
      "limits": {"kind": "nnu", "values": [1, 2], "nnu_max": 3}
    })"));
    cfg.out = out;
    cfg.jobs = jobs;
    cmd_synth(cfg);
    cmd_tune(cfg);
    cmd_compare(cfg);
    cmd_limits(cfg);
    cfg.replay.input = out / "replay_input.csv";
    {
      const auto rec = run_closed_loop(campaign_motion(cfg.recipe, 2), FilterSetup{}, ControllerParams{},
                                       PlantParams{}, RunOptions{6.0, true, false, 0.0});
      std::ofstream f(cfg.replay.input);
      CsvWriter w(f, {"t", "v"});
      for (std::size_t i = 0; i < rec.t.size(); ++i) w.row({format_double(rec.t[i]), format_double(rec.e_vel[i])});
    }
    cmd_replay(cfg);
  };
  const auto dir = fresh_dir("determinism");
  const auto first = g_out / "determinism_first";
  fs::remove_all(first);
  run_all(dir, 1);
  fs::rename(dir, first);
  run_all(dir, std::max<std::size_t>(2, g_jobs));
  const auto a = snapshot(first), b = snapshot(dir);
  std::size_t differing = 0;
  std::string example;
  for (const auto& [name, content] : a) {
    const auto it = b.find(name);
    if (it == b.end() || it->second != content) {
      ++differing;
      if (example.empty()) example = name;
    }
  }
  if (a.size() != b.size()) ++differing;
  return {differing == 0 && !a.empty(),
          std::to_string(a.size()) + " output files compared, " + std::to_string(differing) + " differ" +
              (example.empty() ? "" : " (e.g. " + example + ")")};
}

Outcome realtime() {
  MotionSpec m = campaign_motion(MotionRecipe{}, 1);
  StepSizeParams p = default_problem(Variant::Damped).start;
  FilterSetup setup{6.0, 10.0, 240, p};
  RunOptions o;
  o.time_steps = true;
  const auto rec = run_closed_loop(m, setup, ControllerParams{}, PlantParams{}, o);
  std::vector<double> ns(rec.step_ns.begin(), rec.step_ns.end());
  const auto st = mean_std(ns);
  const double worst = *std::max_element(ns.begin(), ns.end());
  return {st.mean < 1e6, "mean tick " + num(st.mean / 1e3, 4) + " us (std " + num(st.std / 1e3, 3) +
                             " us, max " + num(worst / 1e3, 4) + " us) over " + std::to_string(ns.size()) + " ticks"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"analytic filter checks", analytic_checks},
      {"RLS/Kalman gain equivalence", rls_kalman_equivalence},
      {"convergence baseline", convergence},
      {"method comparison", method_comparison},
      {"step-size timing", timing},
      {"limit analysis trends", limits},
      {"determinism", determinism},
      {"real-time tick budget", realtime}};

  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out" && i + 1 < argc) {
      g_out = argv[++i];
    } else if (a == "--jobs" && i + 1 < argc) {
      g_jobs = std::max(1, std::atoi(argv[++i]));
    } else {
      const int n = std::atoi(a.c_str());
      if (n < 1 || n > static_cast<int>(criteria.size())) {
        std::cerr << "usage: acceptance [--out DIR] [--jobs N] [criterion numbers 1-8]\n";
        return 2;
      }
      selected.insert(static_cast<std::size_t>(n));
    }
  }
  if (selected.empty())
    for (std::size_t i = 1; i <= criteria.size(); ++i) selected.insert(i);
  if (g_jobs == 1) g_jobs = default_jobs();
  fs::create_directories(g_out);

  int failed = 0;
  for (std::size_t n : selected) {
    const auto& [name, fn] = criteria[n - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << " [" << name << "] " << o.detail << " ("
              << num(secs, 3) << " s)" << std::endl;
    if (!o.pass) ++failed;
  }
  return failed ? 1 : 0;
}

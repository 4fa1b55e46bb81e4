#include "bmflc/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bmflc/parallel.hpp"

namespace bmflc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sanitize(double f) { return std::isfinite(f) ? f : kInf; }

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& objective, const Vector& x0,
                             const NelderMeadOptions& opts) {
  const auto n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead needs at least one dimension");
  const std::size_t max_evals = opts.max_evals ? opts.max_evals : 200 * static_cast<std::size_t>(n);

  NelderMeadResult res;
  auto eval = [&](const Vector& x) {
    ++res.evals;
    return sanitize(objective(x));
  };

  std::vector<Vector> v(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> f(v.size());
  f[0] = eval(x0);
  if (!std::isfinite(f[0])) throw std::invalid_argument("objective is not finite at the start point");
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& y = v[static_cast<std::size_t>(j) + 1];
    y[j] = y[j] != 0.0 ? (1.0 + opts.initial_step) * y[j] : opts.zero_step;
    f[static_cast<std::size_t>(j) + 1] = eval(y);
  }

  std::vector<std::size_t> order(v.size());
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
    std::vector<Vector> v2;
    std::vector<double> f2;
    for (auto i : order) {
      v2.push_back(std::move(v[i]));
      f2.push_back(f[i]);
    }
    v = std::move(v2);
    f = std::move(f2);
  };
  sort_simplex();

  const auto last = static_cast<std::size_t>(n);
  while (true) {
    double diam = 0.0;
    for (std::size_t j = 1; j <= last; ++j) diam = std::max(diam, (v[j] - v[0]).cwiseAbs().maxCoeff());
    if (diam <= opts.tol_x * std::max(1.0, v[0].cwiseAbs().maxCoeff())) {
      res.converged = true;
      break;
    }
    if (res.evals >= max_evals) break;
    ++res.iterations;

    Vector xbar = Vector::Zero(n);
    for (std::size_t j = 0; j < last; ++j) xbar += v[j];
    xbar /= static_cast<double>(n);

    const Vector xr = 2.0 * xbar - v[last];
    const double fr = eval(xr);
    bool shrink = false;
    if (fr < f[0]) {
      const Vector xe = 3.0 * xbar - 2.0 * v[last];
      const double fe = eval(xe);
      if (fe < fr) {
        v[last] = xe;
        f[last] = fe;
      } else {
        v[last] = xr;
        f[last] = fr;
      }
    } else if (fr < f[last - 1]) {
      v[last] = xr;
      f[last] = fr;
    } else if (fr < f[last]) {
      const Vector xc = 1.5 * xbar - 0.5 * v[last];
      const double fc = eval(xc);
      if (fc <= fr) {
        v[last] = xc;
        f[last] = fc;
      } else {
        shrink = true;
      }
    } else {
      const Vector xcc = 0.5 * (xbar + v[last]);
      const double fcc = eval(xcc);
      if (fcc < f[last]) {
        v[last] = xcc;
        f[last] = fcc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t j = 1; j <= last; ++j) {
        v[j] = v[0] + 0.5 * (v[j] - v[0]);
        f[j] = eval(v[j]);
      }
    }
    sort_simplex();
  }
  res.x = v[0];
  res.f = f[0];
  return res;
}

double ParamDim::to_search(double v) const {
  switch (scale) {
    case Scale::Linear: return v;
    case Scale::Log10: return std::log10(v);
    case Scale::Log10Complement: return std::log10(1.0 - v);
  }
  return v;
}

double ParamDim::from_search(double s) const {
  double v = s;
  switch (scale) {
    case Scale::Linear: break;
    case Scale::Log10: v = std::pow(10.0, s); break;
    case Scale::Log10Complement: v = 1.0 - std::pow(10.0, s); break;
  }
  return std::clamp(v, lo, hi);
}

double get_param(const StepSizeParams& p, std::string_view name) {
  if (name == "eta") return p.eta;
  if (name == "lambda_forget") return p.lambda_forget;
  if (name == "k_dmp") return p.k_dmp;
  if (name == "x_dmp") return p.x_dmp;
  if (name == "lambda_rls") return p.lambda_rls;
  if (name == "r_kf") return p.r_kf;
  if (name == "q_kf_scale") return p.q_kf_scale;
  if (name == "p0") return p.p0;
  throw std::invalid_argument("unknown step-size parameter: " + std::string(name));
}

void set_param(StepSizeParams& p, std::string_view name, double value) {
  if (name == "eta") p.eta = value;
  else if (name == "lambda_forget") p.lambda_forget = value;
  else if (name == "k_dmp") p.k_dmp = value;
  else if (name == "x_dmp") p.x_dmp = value;
  else if (name == "lambda_rls") p.lambda_rls = value;
  else if (name == "r_kf") p.r_kf = value;
  else if (name == "q_kf_scale") p.q_kf_scale = value;
  else if (name == "p0") p.p0 = value;
  else throw std::invalid_argument("unknown step-size parameter: " + std::string(name));
}

void TuneProblem::validate() const {
  if (dims.empty()) throw std::invalid_argument("tuning needs at least one free parameter");
  if (start.variant != variant) throw std::invalid_argument("start parameters are for another variant");
  for (const auto& d : dims) {
    get_param(start, d.name);
    if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || !(d.lo < d.hi))
      throw std::invalid_argument("box of " + d.name + " must be finite and non-empty");
    if (d.scale == Scale::Log10 && !(d.lo > 0.0))
      throw std::invalid_argument("log-scaled " + d.name + " needs a positive box");
    if (d.scale == Scale::Log10Complement && !(d.hi < 1.0))
      throw std::invalid_argument("complement-scaled " + d.name + " needs a box below 1");
  }
}

Vector TuneProblem::to_search(const StepSizeParams& p) const {
  Vector s(static_cast<Eigen::Index>(dims.size()));
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    s[static_cast<Eigen::Index>(i)] = d.to_search(std::clamp(get_param(p, d.name), d.lo, d.hi));
  }
  return s;
}

StepSizeParams TuneProblem::from_search(const Vector& s) const {
  if (s.size() != static_cast<Eigen::Index>(dims.size()))
    throw std::invalid_argument("search point has the wrong dimension");
  StepSizeParams p = start;
  for (std::size_t i = 0; i < dims.size(); ++i)
    set_param(p, dims[i].name, dims[i].from_search(s[static_cast<Eigen::Index>(i)]));
  return p;
}

TuneProblem default_problem(Variant v) {
  TuneProblem tp;
  tp.variant = v;
  tp.start.variant = v;
  tp.start.lambda_forget = 0.9999;
  switch (v) {
    case Variant::Lms:
      tp.start.eta = 1e-3;
      tp.dims = {{"eta", Scale::Log10, 1e-7, 1e-1}};
      break;
    case Variant::Damped:
      tp.start.eta = 3e-3;
      tp.start.k_dmp = 2000.0;
      tp.start.x_dmp = 6e-4;
      tp.dims = {{"eta", Scale::Log10, 1e-7, 1.0},
                 {"k_dmp", Scale::Log10, 1.0, 1e6},
                 {"x_dmp", Scale::Linear, -0.05, 0.05}};
      break;
    case Variant::Rls:
      tp.start.lambda_rls = 0.99999;
      tp.start.p0 = 3e-4;
      tp.dims = {{"lambda_rls", Scale::Log10Complement, 0.99, 1.0 - 1e-9},
                 {"p0", Scale::Log10, 1e-9, 1e2}};
      break;
    case Variant::Kalman:
      tp.start.r_kf = 3e3;
      tp.start.q_kf_scale = 1e-5;
      tp.start.p0 = 1.0;
      tp.dims = {{"r_kf", Scale::Log10, 1e-3, 1e7},
                 {"q_kf_scale", Scale::Log10, 1e-12, 1.0}};
      break;
  }
  return tp;
}

std::optional<double> evaluate_params(const MotionTrace& trace, const StepSizeParams& p,
                                      const TuneContext& ctx) {
  FilterSetup setup{ctx.a_nu, ctx.b_nu, ctx.L, p};
  RunOptions opts;
  opts.duration = ctx.duration;
  opts.keep_series = false;
  try {
    const auto rec = run_closed_loop(trace, setup, ctx.controller, ctx.plant, opts);
    if (!rec.sr) throw std::invalid_argument("motion has no vibration power to suppress");
    return rec.sr;
  } catch (const DivergenceError&) {
    return std::nullopt;
  }
}

MotionTuneResult tune_motion(const TuneProblem& problem, const MotionSpec& motion,
                             const TuneContext& ctx, const NelderMeadOptions& opts) {
  problem.validate();
  const auto trace = render_motion(motion, ctx.plant.dt, tick_count(ctx.duration, ctx.plant.dt));
  auto objective = [&](const Vector& s) {
    const auto sr = evaluate_params(trace, problem.from_search(s), ctx);
    return sr ? -*sr : kInf;
  };
  const Vector x0 = problem.to_search(problem.start);
  NelderMeadResult nm;
  try {
    nm = nelder_mead(objective, x0, opts);
  } catch (const std::invalid_argument&) {
    throw std::runtime_error("learner diverges at the starting parameters for seed " +
                             std::to_string(motion.seed));
  }
  MotionTuneResult r;
  r.seed = motion.seed;
  r.params = problem.from_search(nm.x);
  r.x = problem.to_search(r.params);
  r.sr = -nm.f;
  r.evals = nm.evals;
  r.converged = nm.converged;
  return r;
}

StepSizeParams average_params(const TuneProblem& problem, std::span<const Vector> optima) {
  if (optima.empty()) throw std::invalid_argument("nothing to average");
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(problem.dims.size()));
  for (const auto& x : optima) {
    if (x.size() != mean.size()) throw std::invalid_argument("optimum has the wrong dimension");
    mean += x;
  }
  mean /= static_cast<double>(optima.size());
  return problem.from_search(mean);
}

GeneralTuneResult tune_general_params(const TuneProblem& problem, std::span<const MotionSpec> motions,
                                      const TuneContext& ctx, const GeneralTuneOptions& opts) {
  problem.validate();
  if (opts.motions == 0 || motions.size() < opts.motions)
    throw std::invalid_argument("not enough motions for general tuning");
  std::vector<std::optional<MotionTuneResult>> results(opts.motions);
  std::vector<std::string> failures(opts.motions);
  parallel_for(opts.motions, opts.jobs, [&](std::size_t i) {
    try {
      results[i] = tune_motion(problem, motions[i], ctx, opts.nm);
    } catch (const std::runtime_error& e) {
      failures[i] = e.what();
    }
  });

  GeneralTuneResult g;
  std::vector<Vector> optima;
  for (std::size_t i = 0; i < opts.motions; ++i) {
    if (results[i]) {
      optima.push_back(results[i]->x);
      g.per_motion.push_back(*results[i]);
    } else if (opts.exclude_failed) {
      g.excluded.push_back(motions[i].seed);
    } else {
      throw std::runtime_error("tuning failed: " + failures[i]);
    }
  }
  if (optima.empty()) throw std::runtime_error("tuning failed on every motion");
  g.params = average_params(problem, optima);
  g.x = problem.to_search(g.params);
  return g;
}

}  // namespace bmflc

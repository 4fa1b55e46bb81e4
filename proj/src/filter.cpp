#include "bmflc/filter.hpp"

#include <cmath>
#include <numbers>

namespace bmflc {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Lms: return "lms";
    case Variant::Damped: return "damped";
    case Variant::Rls: return "rls";
    case Variant::Kalman: return "kalman";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (to_string(v) == name) return v;
  if (name == "original") return Variant::Lms;
  return std::nullopt;
}

FrequencyGrid FrequencyGrid::make(double a_nu, double b_nu, std::size_t L) {
  if (!(a_nu > 0.0) || !(b_nu > a_nu) || !std::isfinite(b_nu))
    throw std::invalid_argument("frequency band must satisfy 0 < a_nu < b_nu");
  if (L == 0) throw std::invalid_argument("grid needs at least one frequency");
  std::vector<double> f(L);
  const double width = b_nu - a_nu;
  for (std::size_t r = 0; r < L; ++r)
    f[r] = a_nu + static_cast<double>(r) * width / static_cast<double>(L);
  return FrequencyGrid(a_nu, b_nu, std::move(f));
}

BasisVector eval_basis(const FrequencyGrid& grid, double t) {
  const auto L = static_cast<Eigen::Index>(grid.size());
  BasisVector b{Vector(2 * L), t};
  for (Eigen::Index r = 0; r < L; ++r) {
    const double phase = 2.0 * std::numbers::pi * grid[static_cast<std::size_t>(r)] * t;
    b.g[r] = std::sin(phase);
    b.g[r + L] = std::cos(phase);
  }
  return b;
}

void eval_basis_into(const FrequencyGrid& grid, double t, Eigen::Ref<Vector> g) {
  const auto L = static_cast<Eigen::Index>(grid.size());
  if (g.size() != 2 * L) throw std::invalid_argument("basis buffer must have length 2L");
  const double two_pi_t = 2.0 * std::numbers::pi * t;
  double s = std::sin(two_pi_t * grid.lower());
  double c = std::cos(two_pi_t * grid.lower());
  const double ds = std::sin(two_pi_t * grid.spacing());
  const double dc = std::cos(two_pi_t * grid.spacing());
  // Re-anchor periodically so rounding in the rotation cannot accumulate.
  constexpr Eigen::Index kReanchor = 64;
  for (Eigen::Index r = 0; r < L; ++r) {
    if (r > 0 && r % kReanchor == 0) {
      const double phase = two_pi_t * grid[static_cast<std::size_t>(r)];
      s = std::sin(phase);
      c = std::cos(phase);
    }
    g[r] = s;
    g[r + L] = c;
    const double s_next = s * dc + c * ds;
    c = c * dc - s * ds;
    s = s_next;
  }
}

void StepSizeParams::validate() const {
  if (!(lambda_forget > 0.0 && lambda_forget <= 1.0))
    throw std::invalid_argument("forgetting rate must lie in (0, 1]");
  switch (variant) {
    case Variant::Lms:
      if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
      break;
    case Variant::Damped:
      if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
      if (!(k_dmp > 0.0)) throw std::invalid_argument("k_dmp must be positive");
      if (!std::isfinite(x_dmp)) throw std::invalid_argument("x_dmp must be finite");
      break;
    case Variant::Rls:
      if (!(lambda_rls > 0.0 && lambda_rls <= 1.0))
        throw std::invalid_argument("lambda_rls must lie in (0, 1]");
      if (!(p0 > 0.0)) throw std::invalid_argument("p0 must be positive");
      break;
    case Variant::Kalman:
      if (!(r_kf > 0.0)) throw std::invalid_argument("R_kf must be positive");
      if (!(q_kf_scale >= 0.0)) throw std::invalid_argument("Q_kf scale must be >= 0");
      if (!(p0 > 0.0)) throw std::invalid_argument("p0 must be positive");
      break;
  }
}

FilterState FilterState::initial(std::size_t L, const StepSizeParams& p) {
  FilterState s;
  const auto n = static_cast<Eigen::Index>(2 * L);
  s.w = Vector::Zero(n);
  if (p.uses_covariance()) s.P = p.p0 * Matrix::Identity(n, n);
  return s;
}

double predict(const FilterState& state, const Vector& g) {
  if (state.w.size() != g.size())
    throw std::invalid_argument("weight and basis dimensions differ");
  return state.w.dot(g);
}

double damping_factor(double d, double k_dmp, double x_dmp) {
  return 1.0 / (1.0 + std::exp(-k_dmp * (d - x_dmp)));
}

void step_lms(FilterState& s, const Vector& g, double e, const StepSizeParams& p) {
  s.w = p.lambda_forget * s.w + (2.0 * p.eta * e) * g;
  ++s.iter;
}

void step_damped(FilterState& s, const Vector& g, double e, const StepSizeParams& p) {
  auto w = s.w.array();
  const auto gate = (1.0 + (-p.k_dmp * (w.abs() - p.x_dmp)).exp()).inverse();
  w = w * p.lambda_forget + (p.eta * e) * g.array() * gate;
  ++s.iter;
}

Vector rls_gain(const Matrix& P, const Vector& g, double lambda_rls) {
  Vector pg = P * g;
  return pg / (lambda_rls + g.dot(pg));
}

Vector kalman_gain(const Matrix& P, const Vector& g, double r_kf) {
  Vector pg = P * g;
  return pg / (g.dot(pg) + r_kf);
}

namespace {

/// x * 0 is 0 for finite x and NaN otherwise; the sum vectorizes where allFinite() does not.
template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return (m.derived().array() * 0.0).sum() == 0.0;
}

constexpr std::uint64_t kSymmetrizeEvery = 256;

// P <- scale * (P - pg pg^T / denom) + add * I.
// Writing the downdate as u u^T with u = pg / sqrt(denom) keeps P bit-symmetric,
// since u_i * u_j == u_j * u_i. With lambda_rls < 1 any antisymmetric residue
// would otherwise grow by 1/lambda_rls every step.
// The finiteness probe rides along with the update so P is streamed once.
void covariance_update(Matrix& P, const Vector& pg, double denom, double scale, double add,
                       std::uint64_t iter) {
  const Vector u = pg / std::sqrt(denom);
  const Eigen::Index n = P.rows();
  double probe = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (scale == 1.0)
      P.col(j) -= u * u[j];
    else
      P.col(j) = (P.col(j) - u * u[j]) * scale;
    probe += (P.col(j).array() * 0.0).sum();
  }
  if (probe != 0.0 || !std::isfinite(add))
    throw DivergenceError(iter, "non-finite covariance at step " + std::to_string(iter));
  if (add != 0.0) P.diagonal().array() += add;
  if (iter % kSymmetrizeEvery == 0) {
    // Vectorized and scalar tails may round differently; re-anchor occasionally.
    P.triangularView<Eigen::StrictlyLower>() = P.transpose();
  }
}

}  // namespace

void step_rls(FilterState& s, const Vector& g, double e, const StepSizeParams& p) {
  if (s.P.rows() != s.w.size()) throw std::invalid_argument("RLS state needs a covariance");
  const Vector pg = s.P * g;
  const double denom = p.lambda_rls + g.dot(pg);
  s.w = p.lambda_forget * s.w + (e / denom) * pg;
  ++s.iter;
  covariance_update(s.P, pg, denom, 1.0 / p.lambda_rls, 0.0, s.iter);
}

void step_kalman(FilterState& s, const Vector& g, double e, const StepSizeParams& p) {
  if (s.P.rows() != s.w.size()) throw std::invalid_argument("Kalman state needs a covariance");
  const Vector pg = s.P * g;
  const double denom = g.dot(pg) + p.r_kf;
  s.w = p.lambda_forget * s.w + (e / denom) * pg;
  ++s.iter;
  covariance_update(s.P, pg, denom, 1.0, p.q_kf_scale, s.iter);
}

void step(FilterState& s, const Vector& g, double e, const StepSizeParams& p) {
  switch (p.variant) {
    case Variant::Lms: step_lms(s, g, e, p); break;
    case Variant::Damped: step_damped(s, g, e, p); break;
    case Variant::Rls: step_rls(s, g, e, p); break;
    case Variant::Kalman: step_kalman(s, g, e, p); break;
  }
  if (!all_finite(s.w))
    throw DivergenceError(s.iter, "non-finite weight at step " + std::to_string(s.iter));
}

BmflcFilter::BmflcFilter(FrequencyGrid grid, StepSizeParams params)
    : grid_(std::move(grid)),
      params_(params),
      state_(FilterState::initial(grid_.size(), params_)),
      g_(Vector::Zero(static_cast<Eigen::Index>(2 * grid_.size()))) {
  params_.validate();
}

double BmflcFilter::predict(double t) {
  eval_basis_into(grid_, t, g_);
  state_.t = t;
  return state_.w.dot(g_);
}

void BmflcFilter::update(double e) { step(state_, g_, e, params_); }

}  // namespace bmflc

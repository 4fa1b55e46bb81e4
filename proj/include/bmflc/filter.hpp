#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bmflc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Weight-update rule of a band-limited multiple Fourier linear combiner.
enum class Variant { Lms, Damped, Rls, Kalman };

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view name);
inline constexpr Variant kAllVariants[] = {Variant::Lms, Variant::Damped, Variant::Rls,
                                           Variant::Kalman};

/// Raised when a weight or covariance entry becomes non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

/// Uniform grid of L frequencies covering [lower, upper) with the lower edge included.
class FrequencyGrid {
 public:
  /// Throws std::invalid_argument for a non-positive or empty band, or L = 0.
  static FrequencyGrid make(double a_nu, double b_nu, std::size_t L);

  double lower() const { return a_nu_; }
  double upper() const { return b_nu_; }
  std::size_t size() const { return freqs_.size(); }
  double spacing() const { return (b_nu_ - a_nu_) / static_cast<double>(freqs_.size()); }
  std::span<const double> freqs() const { return freqs_; }
  double operator[](std::size_t r) const { return freqs_[r]; }

 private:
  FrequencyGrid(double a, double b, std::vector<double> f)
      : a_nu_(a), b_nu_(b), freqs_(std::move(f)) {}
  double a_nu_;
  double b_nu_;
  std::vector<double> freqs_;
};

inline FrequencyGrid make_grid(double a_nu, double b_nu, std::size_t L) {
  return FrequencyGrid::make(a_nu, b_nu, L);
}

/// Sin/cos basis at time t: g[r] = sin(2 pi nu_r t), g[r+L] = cos(2 pi nu_r t).
struct BasisVector {
  Vector g;
  double t = 0.0;
};

BasisVector eval_basis(const FrequencyGrid& grid, double t);

/// Same values as eval_basis, written into a preallocated buffer of size 2L.
/// Successive grid frequencies are reached by rotating the phasor of the
/// lowest one, so only two sin/cos evaluations are needed per call.
void eval_basis_into(const FrequencyGrid& grid, double t, Eigen::Ref<Vector> g);

struct StepSizeParams {
  Variant variant = Variant::Damped;
  double eta = 0.01;
  double lambda_forget = 1.0;
  // damped
  double k_dmp = 350.0;
  double x_dmp = 0.009;
  // RLS
  double lambda_rls = 0.999;
  // Kalman
  double r_kf = 1.0;
  double q_kf_scale = 1e-6;
  // RLS and Kalman
  double p0 = 1.0;

  /// Checks only the fields the selected variant consults.
  void validate() const;
  bool uses_covariance() const { return variant == Variant::Rls || variant == Variant::Kalman; }
};

struct FilterState {
  Vector w;
  Matrix P;  // empty for LMS and damped
  std::uint64_t iter = 0;
  double t = 0.0;

  /// Zero weights; P = p0 * I when the variant needs a covariance.
  static FilterState initial(std::size_t L, const StepSizeParams& p);
  std::size_t grid_size() const { return static_cast<std::size_t>(w.size() / 2); }
};

/// w^T g. Throws std::invalid_argument on a dimension mismatch.
double predict(const FilterState& state, const Vector& g);
inline double predict(const FilterState& state, const BasisVector& b) {
  return predict(state, b.g);
}

/// Logistic damping factor 1 / (1 + exp(-k (d - x))).
double damping_factor(double d, double k_dmp, double x_dmp);

/// w_k <- lambda w_k + 2 eta g_k e
void step_lms(FilterState& s, const Vector& g, double e, const StepSizeParams& p);

/// w_k <- lambda w_k + eta g_k e * damping_factor(|w_k|, k_dmp, x_dmp)
void step_damped(FilterState& s, const Vector& g, double e, const StepSizeParams& p);

/// RLS gain P g / (lambda_rls + g^T P g).
Vector rls_gain(const Matrix& P, const Vector& g, double lambda_rls);

/// Random-walk Kalman gain P g / (g^T P g + R).
Vector kalman_gain(const Matrix& P, const Vector& g, double r_kf);

/// w <- lambda w + mu e;  P <- (P - mu g^T P) / lambda_rls
void step_rls(FilterState& s, const Vector& g, double e, const StepSizeParams& p);

/// w <- lambda w + mu e;  P <- (I - mu g^T) P + q I
void step_kalman(FilterState& s, const Vector& g, double e, const StepSizeParams& p);

/// Dispatches on p.variant, then checks every weight (and P entry) is finite.
/// Throws DivergenceError carrying the step index otherwise.
void step(FilterState& s, const Vector& g, double e, const StepSizeParams& p);

inline double feedforward_force(double y_vib, double k_ff) { return k_ff * y_vib; }

/// Grid, update rule and state bundled for use inside a control loop.
class BmflcFilter {
 public:
  BmflcFilter(FrequencyGrid grid, StepSizeParams params);

  /// Evaluates the basis at t and returns the current model output.
  double predict(double t);
  /// Applies one update with error e at the basis from the last predict().
  void update(double e);

  const FrequencyGrid& grid() const { return grid_; }
  const StepSizeParams& params() const { return params_; }
  const FilterState& state() const { return state_; }
  FilterState& state() { return state_; }
  const Vector& basis() const { return g_; }

 private:
  FrequencyGrid grid_;
  StepSizeParams params_;
  FilterState state_;
  Vector g_;
};

}  // namespace bmflc

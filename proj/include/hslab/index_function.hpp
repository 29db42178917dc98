#pragma once

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hslab {

/// A monotone nonnegative function on (0, T] used to rescale Mercer
/// eigenvalues. Values are immutable; copies share the underlying node.
///
/// Closed-form families (powers c*t^rho) stay closed under composition,
/// ratio, product and the s -> s^{-1}(1/t) transform, so schedules built from
/// powers are evaluated and inverted exactly. Everything else falls back to
/// guarded bisection.
class IndexFunction {
 public:
  enum class Family { power, power_log, table, composed, callable };

  static constexpr double kInverseRtol = 1e-12;
  static constexpr int kMaxBisection = 200;

  /// c * t^rho. Negative rho is allowed for intermediate objects such as
  /// s~(t) = s^{-1}(1/t); those are decreasing and are not index functions
  /// in the strict sense.
  static IndexFunction power(double rho, double upper = kUnbounded, double coef = 1.0);
  /// t^rho * (1 + |ln t|)^log_exponent.
  static IndexFunction power_log(double rho, double log_exponent, double upper = kUnbounded);
  /// Monotone table, interpolated linearly in log-log coordinates. The domain
  /// upper endpoint is the last abscissa.
  static IndexFunction table(std::vector<double> t, std::vector<double> values);
  static IndexFunction callable(std::string name, std::function<double(double)> fn,
                                double upper = kUnbounded);

  static constexpr double kUnbounded = std::numeric_limits<double>::infinity();

  /// Domain-checked evaluation.
  double operator()(double t) const { return eval(t); }
  double eval(double t) const;
  /// Evaluation without the (0, T] check; used by grid scans that already
  /// clip to the domain.
  double raw(double t) const;

  /// Solves f(t) = y. Exact for powers, bisection in log t otherwise.
  double inverse(double y) const;

  Family family() const;
  double upper() const;
  std::string describe() const;
  /// Returns (coef, rho) when the function is exactly coef * t^rho.
  std::optional<std::pair<double, double>> as_power() const;

  IndexFunction with_upper(double upper) const;
  IndexFunction scaled(double c) const;
  /// t -> f^{-1}(t)
  IndexFunction inverse_function() const;
  /// t -> f^{-1}(1/t), the s~ transform.
  IndexFunction reciprocal_inverse() const;

  friend IndexFunction compose(const IndexFunction& outer, const IndexFunction& inner);
  friend IndexFunction ratio(const IndexFunction& num, const IndexFunction& den);
  friend IndexFunction product(const IndexFunction& a, const IndexFunction& b);

  struct Node;

 private:
  explicit IndexFunction(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

IndexFunction compose(const IndexFunction& outer, const IndexFunction& inner);
IndexFunction ratio(const IndexFunction& num, const IndexFunction& den);
IndexFunction product(const IndexFunction& a, const IndexFunction& b);

/// 512 log-spaced points, the default scan resolution.
std::vector<double> default_grid(double lo, double hi);

/// Grid lower bound of d_f(t) = sup_s f(st)/f(s). Only grid points with s and
/// s*t inside the domain take part.
double dilation(const IndexFunction& f, double t, const std::vector<double>& grid);

struct ExtensionIndices {
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_residual = 0.0;
  double beta_residual = 0.0;
  bool diverged = false;
};

/// Extension indices estimated from log d_f(t) on t in [1e-8, 1e-4] and
/// [1e4, 1e8]. The fit includes a log|log t| column so slowly varying
/// factors do not bias the exponent.
ExtensionIndices extension_indices(const IndexFunction& f);
ExtensionIndices extension_indices(const IndexFunction& f, const std::vector<double>& s_grid);

struct Delta2Estimate {
  double d1 = 0.0;
  double d2 = 0.0;
  bool failed = false;
  double witness = 0.0;
  std::string reason;
};

/// D1 = inf f(2l)/f(l), D2 = sup f(2l)/f(l) over the grid. Flags D1 <= 0 and
/// per-decade growth of the ratio that keeps increasing toward a grid end.
Delta2Estimate check_delta2(const IndexFunction& f, const std::vector<double>& grid);

struct ConditionResult {
  bool holds = true;
  double witness = 0.0;
  double margin = 0.0;
};

struct GrowthReport {
  std::map<std::string, ConditionResult> conditions;
  Delta2Estimate delta2_phi;
  Delta2Estimate delta2_psi;
  ExtensionIndices indices_phi;
  ExtensionIndices indices_psi;

  bool all_hold() const;
  /// First failing condition name, empty if everything holds.
  std::string first_failure() const;
};

/// Executable form of the growth assumptions: t/phi and phi/psi
/// nondecreasing, t/psi concave, phi and psi Delta_2 with constants > 1.
GrowthReport check_growth_assumptions(const IndexFunction& phi, const IndexFunction& psi,
                                      const std::vector<double>& grid);

}  // namespace hslab

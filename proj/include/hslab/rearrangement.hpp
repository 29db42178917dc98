#pragma once

#include <functional>
#include <vector>

#include "hslab/index_function.hpp"
#include "hslab/radial.hpp"

namespace hslab {

// A nonincreasing nonnegative step function on (0, t_m): value v_i on
// (t_{i-1}, t_i] with t_0 = 0.
class StepFunction {
 public:
  StepFunction() = default;
  // breaks = t_1 < ... < t_m, values nonincreasing and >= 0.
  StepFunction(std::vector<double> breaks, std::vector<double> values);

  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double left(std::size_t i) const { return i == 0 ? 0.0 : breaks_[i - 1]; }
  double measure() const { return breaks_.empty() ? 0.0 : breaks_.back(); }

  // 0 past the support.
  double operator()(double t) const;
  // int (g*)^p dt
  double integral_power(double p) const;
  StepFunction scaled(double c) const;

 private:
  std::vector<double> breaks_;
  std::vector<double> values_;
};

// Sorts |value| in decreasing order; the weights become step lengths.
StepFunction decreasing_rearrangement(const std::vector<double>& values, const std::vector<double>& weights);

// Characteristic function of (0, s).
StepFunction indicator(double s);

// (sum v_i^q (Psi^q(t_i) - Psi^q(t_{i-1})))^{1/q}, Psi(0) = 0.
double lorentz_norm(const StepFunction& g, const IndexFunction& Psi, double q);

// max_i v_i phi(t_i).
double marcinkiewicz_norm(const StepFunction& g, const IndexFunction& phi);

// Nonincreasing positive weight with a known primitive on each step.
class Weight {
 public:
  // t^{-p}, integrable at 0 for p < 1.
  static Weight power(double p);
  static Weight constant();
  // Primitive by Gauss-Kronrod quadrature.
  static Weight callable(std::function<double(double)> w);

  double operator()(double t) const;
  // int_a^b w(t) dt
  double mass(double a, double b) const;

 private:
  Weight() = default;
  double p_ = 0.0;
  std::function<double(double)> fn_;
};

// inf{lambda > 0 : int Phi(f*/lambda) w dt <= 1} by bisection in log lambda.
double orlicz_lorentz_norm(const StepFunction& f, const IndexFunction& Phi, const Weight& w, double rtol = 1e-9);

struct FundamentalFunctionCheck {
  std::vector<double> s;
  std::vector<double> computed;
  std::vector<double> closed;      // (s^{1-p}/(1-p))^{1/rho}
  std::vector<double> lemma_form;  // s^{(2-p)/rho} / Phi^{-1}(s)
  double max_deviation = 0.0;      // max |computed/closed - 1|
  // closed / lemma_form should be the constant (1-p)^{-1/rho}.
  double lemma_constant = 0.0;
  double lemma_spread = 0.0;       // max |(closed/lemma_form) / constant - 1|
};

// ||chi_(0,s)|| in L^{Phi, t^{-p}} with Phi = t^rho, p in [0, 1).
FundamentalFunctionCheck fundamental_function_check(double rho, double p, const std::vector<double>& s_grid);

// ||u + v|| / (||u|| + ||v||) for sample vectors with shared weights.
double quasi_triangle_ratio(const std::function<double(const StepFunction&)>& norm, const std::vector<double>& u,
                            const std::vector<double>& v, const std::vector<double>& weights);

// Decreasing rearrangement of a radial function on R^d: profile((t/omega_d)^{1/d})
// when the profile is monotone on the grid, otherwise sorted grid samples
// weighted by shell volumes.
StepFunction radial_rearrangement(const std::function<double(double)>& profile, int d,
                                  const std::vector<double>& r_grid);

struct BoasSides {
  double lhs = 0.0;  // |S| int (|F f(r)| w(r^{-d}) r^d)^p dr / r
  double rhs = 0.0;  // |S| int (w(r^d) |f(r)|)^p dr / r
  double ratio = 0.0;
};

struct BoasReport {
  std::vector<double> dilations;
  std::vector<BoasSides> sides;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double beta_w1 = 0.0;
  double beta_w2 = 0.0;
  bool pass = false;
};

// Raises PreconditionError (witness = failing r, or the offending index)
// when f(r) r^{d-1} increases on the grid, f(r) r^{1/2} is not integrable,
// or the growth indices of W1, W2 are not below p.
void certify_boas_preconditions(const RadialProfile& f, const IndexFunction& w, double p, int d,
                                double* beta_w1 = nullptr, double* beta_w2 = nullptr);

BoasSides boas_sides(const RadialProfile& f, const IndexFunction& w, double p, int d);

// Both sides over the dilates f(c .), c in dilations; pass iff every ratio
// lies in [1/R, R].
BoasReport boas_check(const RadialProfile& f, const IndexFunction& w, double p, int d,
                      const std::vector<double>& dilations = {0.25, 0.5, 1.0, 2.0, 4.0}, double R = 50.0);

// 1 + 1/p - 1/rho, the index of Psi(t) = t^{1+1/p} / psi^{-1}(t) for psi = t^rho.
double tight_range_exponent(double p, double rho);
// p rho* / (rho* + p) with rho* the dual exponent of rho.
double tight_range_lorentz_index(double p, double rho);

struct TightRangeReport {
  std::vector<double> ratios;  // ||Tf||_{Lambda^q_Psi} / ||f||_{L^{p,q}}
  std::vector<std::string> labels;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double spread = 0.0;
  double exponent = 0.0;
  bool pass = false;
};

// T is the multiplier F(Tf) = F kappa(|.|^{1/a}) F f. The kernel profile may
// be RadialProfile::identity().
TightRangeReport tight_range_check(double rho, double a, const RadialProfile& kernel, int d, double p, double q,
                                   const std::vector<RadialProfile>& profiles,
                                   const std::vector<double>& dilations = {0.25, 0.5, 1.0, 2.0, 4.0},
                                   double R = 50.0);

}  // namespace hslab

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hslab {

// Radial profiles r -> f(r) on [0, inf). Every family carries a dilation
// factor c so that dilate(c) represents f(c r) exactly.
class RadialProfile {
 public:
  enum class Family { gaussian, exponential, matern, power_decay, table, identity, callable };

  // exp(-r^2 / 2)
  static RadialProfile gaussian();
  // exp(-r)
  static RadialProfile exponential();
  // 2^{1-nu}/Gamma(nu) (sqrt(2 nu) r / l)^nu K_nu(sqrt(2 nu) r / l)
  static RadialProfile matern(double nu, double length = 1.0);
  // (1 + r)^{-k}
  static RadialProfile power_decay(double k);
  // Piecewise linear through (r_i, v_i), zero past the last node.
  static RadialProfile table(std::vector<double> r, std::vector<double> values);
  // Fourier multiplier 1; only meaningful through its transform.
  static RadialProfile identity();
  // Arbitrary profile; transforms always go through quadrature.
  static RadialProfile callable(std::string name, std::function<double(double)> fn);

  double operator()(double r) const;
  Family family() const { return family_; }
  double dilation() const { return c_; }
  std::string describe() const;
  RadialProfile dilate(double c) const;

  // Closed-form d-dimensional radial Fourier transform, when known.
  std::optional<double> closed_transform(int d, double r) const;

  // Matern parameters (nu, length) when family() == matern.
  double nu() const { return p0_; }
  double length() const { return p1_; }

 private:
  RadialProfile() = default;
  double base(double r) const;

  Family family_ = Family::gaussian;
  double c_ = 1.0;
  double p0_ = 0.0;
  double p1_ = 1.0;
  std::shared_ptr<const std::vector<double>> tr_, tv_;
  std::shared_ptr<const std::function<double(double)>> fn_;
  std::string name_;
};

// Surface area of the unit sphere in R^d.
double sphere_area(int d);
// Volume of the unit ball in R^d.
double ball_volume(int d);

struct HankelOptions {
  double rtol = 1e-6;
  // Absolute floor relative to the r = 0 value of the transform.
  double atol_rel = 1e-13;
  int max_panels = 10000;
};

// F_d f(r) = (2 pi)^{d/2} r^{1-d/2} int_0^inf f(t) t^{d/2} J_{d/2-1}(r t) dt,
// by Gauss-Kronrod over half-period panels of width pi / r and Wynn epsilon
// acceleration of the partial sums. d in {1, 2, 3}.
double hankel_transform(const RadialProfile& f, int d, double r, const HankelOptions& opt = {});

// Closed form when available, Hankel quadrature otherwise.
double fourier_radial(const RadialProfile& f, int d, double r);

// int_0^inf |f(t)| t^{d-1} dt * sphere_area(d); finite iff f is in L1(R^d).
double radial_l1_norm(const RadialProfile& f, int d);

}  // namespace hslab

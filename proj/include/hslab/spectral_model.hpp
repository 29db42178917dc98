#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hslab/index_function.hpp"
#include "hslab/rng.hpp"

namespace hslab {

enum class BasisFamily { trigonometric, gegenbauer };

// How the trigonometric cos/sin pair of one frequency receives eigenvalues.
// per_function: e_i gets law(i). stationary: frequency j pair shares law(j+1),
// which makes k(x, y) depend on x - y only.
enum class Pairing { per_function, stationary };

// Eigenvalue law i -> mu_i for i = 1, 2, ... (also used past the truncation
// to estimate tails).
struct EigenSpec {
  enum class Kind { power, induced, values };
  Kind kind = Kind::power;
  double decay = 2.0;                 // mu_i = i^{-decay}
  std::optional<IndexFunction> psi;   // induced: mu_i = psi^{-1}(1/s(i))
  std::optional<IndexFunction> s;
  std::vector<double> values;         // explicit list, no tail

  static EigenSpec power(double decay);
  static EigenSpec induced(IndexFunction psi, IndexFunction s);
  static EigenSpec explicit_values(std::vector<double> values);

  // Returns NaN past the end of an explicit list.
  double law(std::size_t i) const;
};

struct ModelOptions {
  double gamma = 1.0;                    // Gegenbauer parameter
  Pairing pairing = Pairing::per_function;
  bool certify = true;
};

struct TailEstimate {
  double head = 0.0;
  double tail = 0.0;  // +inf when the series diverges
};

// Truncated Mercer system {mu_i, e_i}_{i<=N}. Index i in the API is 0-based
// and refers to e_{i+1}.
class SpectralModel {
 public:
  static constexpr double kOrthonormalTol = 1e-8;

  static SpectralModel build(BasisFamily family, std::size_t n_terms, const EigenSpec& spec,
                             const ModelOptions& options = {});

  std::size_t size() const { return mu_.size(); }
  const std::vector<double>& eigenvalues() const { return mu_; }
  double mu(std::size_t i) const { return mu_.at(i); }
  BasisFamily family() const { return family_; }
  double gamma() const { return gamma_; }
  Pairing pairing() const { return pairing_; }
  int dimension() const { return 1; }
  const EigenSpec& spec() const { return spec_; }
  // Declared Christoffel growth: s(t) = t for the trigonometric basis,
  // t^{2 gamma + 1} for Gegenbauer.
  const IndexFunction& declared_s() const { return declared_s_; }
  double domain_lo() const;
  double domain_hi() const;
  // Largest |G - I| entry observed when the basis was certified.
  double orthonormality_error() const { return ortho_error_; }
  std::string describe() const;

  // e_1(x), ..., e_n(x) written into out[0..n).
  void basis(double x, double* out, std::size_t n) const;
  std::vector<double> basis(double x) const;
  std::vector<double> basis(double x, std::size_t n) const;
  // Row j holds e_1(x_j), ..., e_N(x_j).
  Eigen::MatrixXd features(const std::vector<double>& xs) const;

  double kernel(double x, double y) const;
  Eigen::MatrixXd gram(const std::vector<double>& xs) const;

  double sample(Rng& rng) const;
  std::vector<double> sample(Rng& rng, std::size_t n) const;
  // Equispaced grid over the closed domain.
  std::vector<double> grid(std::size_t count) const;

  // Sum of f(mu_i) over the model and the tail i > N predicted by the
  // eigenvalue law.
  TailEstimate tail(const IndexFunction& f) const;

 private:
  SpectralModel() = default;
  void certify();

  BasisFamily family_ = BasisFamily::trigonometric;
  double gamma_ = 0.0;
  Pairing pairing_ = Pairing::per_function;
  EigenSpec spec_;
  std::vector<double> mu_;
  std::vector<double> b_;  // Jacobi off-diagonal, b_[k] couples p_{k-1}, p_k
  IndexFunction declared_s_ = IndexFunction::power(1.0);
  double ortho_error_ = 0.0;
};

// Gauss rule for the Gegenbauer probability measure (Golub-Welsch).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gegenbauer_gauss(double gamma, std::size_t count);

// f* = sum_i a_i phi^{1/2}(mu_i) e_i.
class TargetSpec {
 public:
  static TargetSpec from_coefficients(const SpectralModel& model, const IndexFunction& phi, std::vector<double> a);
  // a_i proportional to i^{-exponent}, scaled so ||a||_2 = norm.
  static TargetSpec power_decay(const SpectralModel& model, const IndexFunction& phi, double exponent,
                                double norm = 1.0);
  // Gaussian a, normalized to ||a||_2 = norm.
  static TargetSpec random(const SpectralModel& model, const IndexFunction& phi, Rng& rng, double norm = 1.0);

  const std::vector<double>& a() const { return a_; }
  // Coefficients of f* in the L2 basis.
  const std::vector<double>& coefficients() const { return c_; }
  const IndexFunction& phi() const { return phi_; }
  double norm_phi() const { return norm_phi_; }
  double norm_l2() const { return norm_l2_; }
  double norm_sup_estimate() const { return norm_sup_; }

  double operator()(const SpectralModel& model, double x) const;

 private:
  TargetSpec(std::vector<double> a, std::vector<double> c, IndexFunction phi)
      : a_(std::move(a)), c_(std::move(c)), phi_(std::move(phi)) {}
  std::vector<double> a_;
  std::vector<double> c_;
  IndexFunction phi_;
  double norm_phi_ = 0.0;
  double norm_l2_ = 0.0;
  double norm_sup_ = 0.0;
};

struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  double sigma = 0.0;  // noise standard deviation
  double L = 0.0;      // moment constant; Gaussian noise has L = sigma
  std::uint64_t seed = 0;

  std::size_t size() const { return x.size(); }
};

Dataset draw_dataset(const SpectralModel& model, const TargetSpec& target, std::size_t n, double sigma,
                     std::uint64_t seed);

void write_dataset_csv(std::ostream& out, const Dataset& d);
Dataset read_dataset_csv(std::istream& in);

// sqrt(sum c_i^2 / f(mu_i)).
double hilbert_norm(const SpectralModel& model, const std::vector<double>& coeffs, const IndexFunction& f);

// max over the grid of sqrt(sum_i f(mu_i) e_i(x)^2).
double k_sup_norm(const SpectralModel& model, const IndexFunction& f, const std::vector<double>& grid);
double k_sup_norm(const SpectralModel& model, const std::vector<double>& weights, const std::vector<double>& grid);

// max over the grid of sqrt(sum_{i<=n} e_i(x)^2).
double christoffel(const SpectralModel& model, std::size_t n, const std::vector<double>& grid);

// Grid used by the sup-norm estimators: 4096 points, both endpoints included.
std::vector<double> default_x_grid(const SpectralModel& model);

}  // namespace hslab

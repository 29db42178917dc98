#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "hslab/index_function.hpp"
#include "hslab/radial.hpp"
#include "hslab/rng.hpp"
#include "hslab/spectral_model.hpp"

namespace hslab {

// k(x, y) = kappa(|x - y|) on R^d with a certified positive transform.
class RadialKernel {
 public:
  // Throws CertificationError when the transform is not positive on the
  // test grid or the profile is not integrable.
  RadialKernel(RadialProfile profile, int d);

  const RadialProfile& profile() const { return profile_; }
  int dimension() const { return d_; }
  bool has_closed_form() const { return closed_; }
  double l1_norm() const { return l1_; }

  double operator()(double r) const { return profile_(r); }
  double fourier(double r) const { return fourier_radial(profile_, d_, r); }
  Eigen::MatrixXd gram(const Eigen::MatrixXd& points) const;

 private:
  RadialProfile profile_;
  int d_;
  bool closed_ = false;
  double l1_ = 0.0;
};

double fourier_radial(const RadialKernel& kernel, double r);

// Writes "r,F" rows.
void write_transform_csv(std::ostream& out, const RadialKernel& kernel, const std::vector<double>& r);

struct OptSmoothness {
  std::vector<double> t;
  std::vector<double> values;  // s(t) psi(F(t^{1/d}) / s(t))
  double min = 0.0;
  double max = 0.0;
  double ratio = 0.0;
  bool pass = false;
};

// dilated = true evaluates F at 12.76 d (2t)^{1/d} instead of t^{1/d}.
OptSmoothness check_opt_smoothness(const IndexFunction& psi, const IndexFunction& s, const RadialKernel& kernel,
                                   const std::vector<double>& t_grid, double tolerance = 10.0,
                                   bool dilated = false);

// Points are the rows of an m x d matrix.
struct PointCloud {
  Eigen::MatrixXd points;
  double separation = 0.0;  // min pairwise distance
};

double min_separation(const Eigen::MatrixXd& points);
// ceil(n^{1/d})^d grid points in [0,1]^d, truncated to n.
PointCloud equispaced_cloud(std::size_t n, int d);
// Halton sequence in bases 2, 3, 5.
PointCloud halton_cloud(std::size_t n, int d);
PointCloud random_cloud(std::size_t n, int d, Rng& rng);
// One point per row, d columns, no header.
PointCloud read_point_cloud_csv(std::istream& in);

// Wendland's constant for the minimum eigenvalue bound,
//   lambda_min >= C_d (12.76 d / q)^d F(12.76 d / q),  q = separation / 2,
// with C_d = (2 pi)^{-d/2} / (2 Gamma(d/2 + 1)) (M_d / (2^{3/2} 12.76 d))^d
// and M_d = 12 (pi Gamma(d/2 + 1)^2 / 9)^{1/(d+1)}.
double wendland_constant(int d);

struct GramBound {
  double observed = 0.0;
  double bound = 0.0;
  double separation = 0.0;
  // Eigensolver error allowance, 16 eps m kappa(0).
  double slack = 0.0;
  bool pass = false;
};

GramBound gram_min_eig_bound(const RadialKernel& kernel, const Eigen::MatrixXd& points);

// mu_i = psi^{-1}(1 / s(i)), i = 1..n.
std::vector<double> infer_eigendecay(const IndexFunction& psi, const IndexFunction& s, std::size_t n);

struct EmpiricalComparison {
  std::vector<double> empirical;  // eig(K_m)/m, descending, first n
  std::vector<double> reference;
  std::vector<double> ratios;     // reference / empirical
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

EmpiricalComparison compare_empirical(const std::function<double(double, double)>& kernel,
                                      const std::function<double(Rng&)>& sampler,
                                      const std::vector<double>& reference, std::size_t m, std::uint64_t seed);
// Reference defaults to the model eigenvalues.
EmpiricalComparison compare_empirical(const SpectralModel& model, std::size_t n, std::size_t m, std::uint64_t seed);
EmpiricalComparison compare_empirical(const SpectralModel& model, const std::vector<double>& reference,
                                      std::size_t m, std::uint64_t seed);

// ||k^psi||^2 mu_n / psi(mu_n): the bound on the squared width b_{n-1}^2.
double bernstein_width_upper_sq(const SpectralModel& model, const IndexFunction& psi, std::size_t n,
                                double k_psi_sup);
// Square root of the above, comparable with the lower bound.
double bernstein_width_upper(const SpectralModel& model, const IndexFunction& psi, std::size_t n,
                             double k_psi_sup);
// sqrt(C_d F(n^{1/d})).
double bernstein_width_lower(const RadialKernel& kernel, std::size_t n);

// Largest inf_{f in V} ||f||_inf / ||f||_K found over random 2-dim subspaces
// V of the model span; ||.||_inf is taken on x_grid.
double bernstein_width_search(const SpectralModel& model, std::size_t subspaces, std::size_t angles,
                              const std::vector<double>& x_grid, Rng& rng);

struct InterpolationCheck {
  double worst_margin = 0.0;  // min of rhs - lhs
  std::size_t draws = 0;
};

// lhs = ||f||_psi^2 / ||f||_K^2, rhs = (t/psi)(||f||_2^2 / ||f||_K^2) over
// random f in the model span.
InterpolationCheck interpolation_check(const SpectralModel& model, const IndexFunction& psi, std::size_t draws,
                                       Rng& rng);
double interpolation_margin(const SpectralModel& model, const IndexFunction& psi, const std::vector<double>& c);

struct HNormCheck {
  double worst_ratio = 0.0;  // max over (lambda, x) of lhs / rhs
  double worst_lambda = 0.0;
};

// lhs = sqrt(sum mu_i e_i(x)^2 / (mu_i + lambda)), rhs = ||k^psi|| / sqrt(psi(lambda)).
HNormCheck hnorm_check(const SpectralModel& model, const IndexFunction& psi, const std::vector<double>& lambdas,
                       const std::vector<double>& x_grid, double k_psi_sup);

}  // namespace hslab

#pragma once

#include <iosfwd>
#include <vector>

#include "hslab/spectral_model.hpp"

namespace hslab {

constexpr std::size_t kMaxSamples = 4096;

// f = sum_j alpha_j k(x_j, .), alpha = (K + n lambda I)^{-1} y.
struct FittedEstimator {
  std::vector<double> alpha;
  std::vector<double> x;
  double lambda = 0.0;
  // c_i = mu_i sum_j alpha_j e_i(x_j)
  std::vector<double> coefficients;

  // Evaluation through the spectral coefficients.
  double operator()(const SpectralModel& model, double x) const;
  // Evaluation through the representer sum.
  double dual_eval(const SpectralModel& model, double x) const;
};

FittedEstimator fit(const Dataset& data, const SpectralModel& model, double lambda);

// (1/n) sum (f(x_i) - y_i)^2 + lambda ||f||_K^2 for f = sum_j alpha_j k(x_j, .).
double krr_objective(const Dataset& data, const SpectralModel& model, const std::vector<double>& alpha,
                     double lambda);

// Coefficients a_i phi^{1/2}(mu_i) mu_i / (mu_i + lambda) of f_lambda.
std::vector<double> population_solution(const SpectralModel& model, const TargetSpec& target, double lambda);

// L2(nu) distance in the spectral domain. Targets live in the model span, so
// the truncation tail of the error is zero.
double l2_error(const SpectralModel& model, const std::vector<double>& coeffs, const TargetSpec& target);
double l2_error(const SpectralModel& model, const FittedEstimator& est, const TargetSpec& target);

// Grid maximum of |f(x) - f*(x)|.
double sup_error(const SpectralModel& model, const std::vector<double>& coeffs, const TargetSpec& target,
                 const std::vector<double>& grid);

struct EffectiveDimension {
  double value = 0.0;  // sum over the model
  double tail = 0.0;   // sum over i > N predicted by the eigenvalue law
};

EffectiveDimension effective_dimension(const SpectralModel& model, double lambda);

// Rows "j,x,alpha" and a JSON sidecar with lambda, n and seed.
void write_estimator_csv(std::ostream& out, const FittedEstimator& est);
void write_estimator_json(std::ostream& out, const FittedEstimator& est, std::uint64_t seed);

}  // namespace hslab

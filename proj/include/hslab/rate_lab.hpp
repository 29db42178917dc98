#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hslab/index_function.hpp"
#include "hslab/krr.hpp"
#include "hslab/spectral_model.hpp"

namespace hslab {

// phi / (s~ o psi) with s~(t) = s^{-1}(1/t).
IndexFunction schedule_composite(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s);

// lambda_n = scale * composite^{-1}(1/n).
double schedule(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s, double n,
                double lambda_scale = 1.0);

// sqrt(phi(lambda_n)).
double predicted_rate(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s, double n,
                      double lambda_scale = 1.0);

// phi(lambda) n / s^{-1}(1/psi(lambda)); equals 1 on the unscaled schedule.
double schedule_balance(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s,
                        double lambda, double n);

// sqrt(phi(lambda)) ||f*||_phi
double bias_bound(const IndexFunction& phi, double lambda, double norm_phi);
// sqrt(sum a_i^2 lambda^2 phi(mu_i) / (mu_i + lambda)^2)
double exact_bias(const SpectralModel& model, const TargetSpec& target, double lambda);
// sqrt(phi(lambda) ||k^psi||^2 ||f*||_phi^2 / psi(lambda))
double uniform_bias_bound(const IndexFunction& phi, const IndexFunction& psi, double lambda, double k_psi_sup,
                          double norm_phi);

struct VarianceInputs {
  IndexFunction phi = IndexFunction::power(1.0);
  IndexFunction psi = IndexFunction::power(1.0);
  IndexFunction s = IndexFunction::power(1.0);
  double lambda = 0.0;
  double n = 0.0;
  double sigma = 0.0;
  double k_psi_sup = 0.0;
  double norm_phi = 0.0;
  double delta = 0.05;
  // Needed for the sample-size condition; NaN skips the condition.
  double effective_dimension = std::numeric_limits<double>::quiet_NaN();
  double operator_norm = std::numeric_limits<double>::quiet_NaN();
};

struct VarianceBound {
  // log(1/delta) sqrt(1152 sigma^2 ||k^psi||^2 ||f||^2 / (n psi) (phi + 1/n) + s^{-1}(1/psi) / n)
  double value = 0.0;
  // Combined bias-variance form:
  // ||f|| sqrt(phi) + ||k^psi|| ||f|| sqrt(log(2/delta)/n (1/(n psi) + phi/psi + s^{-1}(1/psi)))
  double bv_form = 0.0;
  // 8 log(1/delta) ||k^psi||^2 g_lambda / psi(lambda), with
  // g_lambda = log(2e N(lambda)(1 + lambda/||C||))
  double n_threshold = std::numeric_limits<double>::quiet_NaN();
  bool condition_met = true;
};

VarianceBound variance_bound(const VarianceInputs& in);

struct EffdimCheck {
  std::vector<double> lambdas;
  std::vector<double> ratios;           // N(lambda) / s^{-1}(1/psi(lambda))
  std::vector<bool> truncation_flagged;  // lambda below mu_N
  double sup_ratio = 0.0;
  // max / min over decades of the per-decade supremum
  double decade_drift = 0.0;
};

EffdimCheck effdim_bound_check(const SpectralModel& model, const IndexFunction& psi, const IndexFunction& s,
                               const std::vector<double>& lambda_grid);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width = 0.0;  // 2 standard errors
  double residual_rms = 0.0;
  bool dropped_first = false;
  std::size_t points = 0;
};

// OLS of log(err) on log(n). The smallest n is dropped when its residual
// exceeds 3x the median absolute residual.
SlopeFit fit_slope(const std::vector<double>& n, const std::vector<double>& err);

struct RateExperiment {
  IndexFunction phi = IndexFunction::power(0.75);
  IndexFunction psi = IndexFunction::power(0.5);
  IndexFunction s = IndexFunction::power(1.0);
  double sigma = 0.5;
  std::vector<std::size_t> n_grid = {64, 128, 256, 512, 1024, 2048};
  std::size_t trials = 20;
  std::uint64_t master_seed = 1;
  double lambda_scale = 1.0;
  double delta = 0.05;
  unsigned jobs = 1;
  // Refuse to run when the psi-tail exceeds 1e-6 of the head.
  bool tail_gate = false;
};

struct RateRecord {
  std::size_t n = 0;
  double lambda = 0.0;
  std::vector<double> errors;           // ||f_D - f*||, one per trial
  std::vector<double> variance_errors;  // ||f_D - f_lambda||
  std::vector<std::uint64_t> seeds;
  double mean = 0.0;
  double stderr_ = 0.0;
  double predicted = 0.0;
  double exact_bias = 0.0;
  double bias_bound = 0.0;
  double uniform_bias_bound = 0.0;
  double sup_bias = 0.0;  // grid sup-error of f_lambda
  VarianceBound variance;
  double balance = 0.0;
};

struct RateReport {
  std::vector<RateRecord> records;
  SlopeFit fit;
  double k_psi_sup = 0.0;
  TailEstimate psi_tail;
  // Sum 1/s(n) diverges for the declared s.
  bool summability_violated = false;
  std::uint64_t master_seed = 0;
};

RateReport run_experiment(const SpectralModel& model, const TargetSpec& target, const RateExperiment& exp);

}  // namespace hslab

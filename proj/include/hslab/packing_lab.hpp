#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hslab/index_function.hpp"
#include "hslab/spectral_model.hpp"

namespace hslab {

// Bit i of a string is omega_{i+1}; block lengths are limited to 64.
using BitString = std::uint64_t;

constexpr std::size_t kMinBlock = 9;
constexpr std::size_t kMaxBlock = 64;

int hamming(BitString a, BitString b);
std::string to_bits(BitString w, std::size_t m);

// ceil(m / 8)
std::size_t required_distance(std::size_t m);
// ceil(2^{m/8})
std::size_t required_size(std::size_t m);

// Randomized greedy code with pairwise Hamming distance >= ceil(m/8).
// target defaults to required_size(m) and may not exceed 2^{ceil(m/8)}.
// Throws SearchBudgetError after `budget` rejected candidates.
std::vector<BitString> gilbert_varshamov(std::size_t m, std::optional<std::size_t> target = std::nullopt,
                                         std::uint64_t seed = 1, std::size_t budget = 200000);

// Smallest pairwise distance over all pairs; m + 1 for fewer than two strings.
std::size_t min_pairwise_hamming(const std::vector<BitString>& strings, std::size_t m);

struct PackingOptions {
  IndexFunction phi = IndexFunction::power(0.75);
  double B_phi = 1.0;
  double B_inf = 1.0;
  // Fixed block length; otherwise m grows until a budget fails and backs off.
  std::optional<std::size_t> m;
  std::uint64_t seed = 1;
  std::size_t grid_points = 2048;
  // When both are set the realized constant m / s~(psi(phi^{-1}(eps))) is reported.
  std::optional<IndexFunction> psi;
  std::optional<IndexFunction> s;
};

// f_omega = 2 sqrt(8 eps / m) sum_i omega_i e_{i+m}.
struct PackingFamily {
  std::size_t m = 0;
  double epsilon = 0.0;
  double scale = 0.0;
  std::size_t model_size = 0;
  std::vector<BitString> strings;
  double B_phi = 0.0;
  double B_inf = 0.0;
  double norm_phi_max = 0.0;  // over the family
  double norm_sup_max = 0.0;  // grid sup over the family
  std::optional<double> realized_constant;

  std::size_t size() const { return strings.size(); }
  // L2 coefficients of f_j over the whole model.
  std::vector<double> coefficients(std::size_t j) const;
  // ||f_j||^2 = (32 eps / m) |omega_j|
  double norm_sq(std::size_t j) const;
  // ||f_k - f_l||^2 = (32 eps / m) H(omega_k, omega_l)
  double distance_sq(std::size_t k, std::size_t l) const;
};

PackingFamily build_packing(const SpectralModel& model, double epsilon, const PackingOptions& options);

struct PackingVerification {
  std::size_t min_hamming = 0;
  std::size_t required_hamming = 0;
  std::size_t size = 0;
  std::size_t required_size = 0;
  double min_separation_sq = 0.0;  // from the coefficients
  // max |sum (c_k - c_l)^2 - (32 eps / m) H| over pairs
  double identity_error = 0.0;
  bool hamming_ok = false;
  bool size_ok = false;
  bool separation_ok = false;  // >= 4 eps
  bool pass() const { return hamming_ok && size_ok && separation_ok; }
};

PackingVerification verify_packing(const PackingFamily& family);

struct KlRadius {
  double value = 0.0;       // (n / (2 sigma^2 M)) sum ||f_j||^2
  double alpha_star = 0.0;  // 16 n eps / sigma^2
  bool within = true;
};

KlRadius kl_radius(const PackingFamily& family, double n, double sigma);

// (sqrt M / (1 + sqrt M)) (1 - 48 n eps / (sigma^2 log M) - 1 / (2 log M))
double minimax_floor(std::size_t M, double n, double epsilon, double sigma);

// eps_n = tau phi((phi / (s~ o psi))^{-1}(1/n))
double packing_epsilon(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s, double n,
                       double tau = 0.25);

// Maps a dataset to L2 coefficients in the model span (at most N of them).
using EstimatorHook = std::function<std::vector<double>(const Dataset&)>;

EstimatorHook krr_hook(const SpectralModel& model, double lambda);
EstimatorHook zero_hook();
// Ordinary least squares on all N basis functions; exact on noiseless data.
EstimatorHook least_squares_hook(const SpectralModel& model);
// Runs `command` under /bin/sh with the dataset CSV ("x,y" header) on
// standard input and reads the coefficients, separated by commas or
// newlines, from standard output. A nonzero exit status is an error.
EstimatorHook subprocess_hook(std::string command);

struct MinimaxReport {
  std::size_t n = 0;
  std::size_t trials = 0;
  double sigma = 0.0;
  // Fraction of trials with ||f_D - f_j|| >= sqrt(eps).
  std::vector<double> failure;
  // Fraction of trials where the nearest member is not j.
  std::vector<double> misclassified;
  double max_failure = 0.0;
  double max_misclassified = 0.0;
  double floor = 0.0;
  bool floor_positive = false;
  bool pass = true;  // max_failure >= floor when the floor is positive
};

// Trials run in parallel over (member, trial). Hook errors are rethrown as
// EstimatorError carrying the member index.
MinimaxReport minimax_eval(const EstimatorHook& hook, const SpectralModel& model, const PackingFamily& family,
                           std::size_t n, std::size_t trials, double sigma, std::uint64_t seed, unsigned jobs = 1);

void write_packing_json(std::ostream& out, const PackingFamily& family);

}  // namespace hslab

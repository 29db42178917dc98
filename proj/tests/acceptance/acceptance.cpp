// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "hslab/cli/config.hpp"
#include "hslab/cli/experiments.hpp"
#include "hslab/errors.hpp"
#include "hslab/fourier_capacity.hpp"
#include "hslab/grid.hpp"
#include "hslab/krr.hpp"
#include "hslab/packing_lab.hpp"
#include "hslab/rate_lab.hpp"
#include "hslab/rearrangement.hpp"

using namespace hslab;

namespace {

std::string g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

unsigned workers() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

IndexFunction pw(double rho) { return IndexFunction::power(rho); }

SpectralModel basis_model(BasisFamily fam, std::size_t n, const EigenSpec& spec) {
  ModelOptions o;
  if (fam == BasisFamily::gegenbauer) o.gamma = 0.5;
  return SpectralModel::build(fam, n, spec, o);
}

IndexFunction declared_s(BasisFamily fam) { return fam == BasisFamily::trigonometric ? pw(1.0) : pw(2.0); }

const char* name(BasisFamily fam) { return fam == BasisFamily::trigonometric ? "trigonometric" : "legendre"; }

RateReport c1_report;

// 1. Slope of the canonical configuration.
Verdict rate_reproduction() {
  const auto model = SpectralModel::build(BasisFamily::trigonometric, 512, EigenSpec::power(2.0));
  RateExperiment e;
  e.phi = pw(0.75);
  e.psi = pw(0.5);
  e.s = pw(1.0);
  e.sigma = 0.5;
  e.n_grid = {64, 128, 256, 512, 1024, 2048};
  e.trials = 20;
  e.master_seed = 1;
  e.jobs = workers();
  const auto target = TargetSpec::power_decay(model, e.phi, 0.55);
  const auto t0 = std::chrono::steady_clock::now();
  c1_report = run_experiment(model, target, e);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double slope = c1_report.fit.slope;
  return {std::abs(slope + 0.30) <= 0.07,
          "slope " + g(slope) + " +- " + g(c1_report.fit.half_width) + " (target -0.30 +- 0.07), " + g(secs) + " s"};
}

// 2. phi(lambda_n) n / s^{-1}(1/psi(lambda_n)) in [1/2, 2].
Verdict schedule_balance_check() {
  double lo = 1e300, hi = 0.0, worst_lambda = 0.0;
  std::size_t count = 0;
  for (const auto& r : c1_report.records) {
    lo = std::min(lo, r.balance);
    hi = std::max(hi, r.balance);
    ++count;
  }
  // powers phi = t^a, psi = t^b, s = t^c give lambda_n = n^{-1/(a + b/c)}
  for (auto [a, b, c] : {std::tuple{0.75, 0.5, 1.0}, std::tuple{1.0, 0.5, 2.0}, std::tuple{0.6, 0.3, 1.5},
                         std::tuple{0.9, 0.9, 1.0}, std::tuple{0.5, 0.25, 3.0}}) {
    for (double n : log_grid(1.0, 1e6, 25)) {
      const double lam = schedule(pw(a), pw(b), pw(c), n);
      const double closed = std::pow(n, -1.0 / (a + b / c));
      worst_lambda = std::max(worst_lambda, std::abs(lam / closed - 1.0));
      const double bal = schedule_balance(pw(a), pw(b), pw(c), lam, n);
      lo = std::min(lo, bal);
      hi = std::max(hi, bal);
      ++count;
    }
  }
  // a power-log phi goes through numeric inversion
  const auto phi = IndexFunction::power_log(0.75, 1.0, 0.25);
  for (double n : {64.0, 256.0, 1024.0, 4096.0}) {
    const double lam = schedule(phi, pw(0.5), pw(1.0), n);
    const double bal = schedule_balance(phi, pw(0.5), pw(1.0), lam, n);
    lo = std::min(lo, bal);
    hi = std::max(hi, bal);
    ++count;
  }
  return {lo >= 0.5 && hi <= 2.0 && worst_lambda <= 1e-12,
          std::to_string(count) + " schedules, balance in [" + g(lo) + ", " + g(hi) + "], closed-form lambda error " +
              g(worst_lambda)};
}

// 3. exact bias <= sqrt(phi(lambda)) ||f*||_phi.
Verdict bias_bound_check() {
  const auto lambdas = log_grid(1e-7, 1.0, 40);
  std::size_t viol = 0, checks = 0;
  double worst = -1e300;
  for (auto fam : {BasisFamily::trigonometric, BasisFamily::gegenbauer}) {
    const auto model = basis_model(fam, 256, EigenSpec::power(2.0));
    for (double a : {0.5, 0.75, 1.0}) {
      for (std::size_t t = 0; t < 20; ++t) {
        Rng rng(derive_seed(3, t, std::size_t(a * 100)));
        const auto target = TargetSpec::random(model, pw(a), rng);
        for (double lam : lambdas) {
          const double eb = exact_bias(model, target, lam);
          const double bb = bias_bound(pw(a), lam, target.norm_phi());
          viol += eb > bb + 1e-12;
          worst = std::max(worst, eb - bb);
          ++checks;
        }
      }
    }
  }
  return {viol == 0, std::to_string(viol) + " violations in " + std::to_string(checks) + ", max excess " + g(worst)};
}

// 4. grid sup error of f_lambda <= sqrt(phi ||k^psi||^2 ||f||^2 / psi).
Verdict uniform_bias_check() {
  const auto lambdas = log_grid(1e-7, 1.0, 40);
  std::size_t viol = 0, checks = 0;
  double worst = 0.0;
  for (auto fam : {BasisFamily::trigonometric, BasisFamily::gegenbauer}) {
    const auto model = basis_model(fam, 128, EigenSpec::power(2.0));
    const auto grid = default_x_grid(model);
    const auto phi = pw(0.75), psi = pw(0.5);
    const double kpsi = k_sup_norm(model, psi, grid);
    for (std::size_t t = 0; t < 20; ++t) {
      Rng rng(derive_seed(4, t));
      const auto target = TargetSpec::random(model, phi, rng);
      for (double lam : lambdas) {
        const auto pop = population_solution(model, target, lam);
        const double sup = sup_error(model, pop, target, grid);
        const double bound = uniform_bias_bound(phi, psi, lam, kpsi, target.norm_phi());
        viol += sup > bound;
        worst = std::max(worst, sup / bound);
        ++checks;
      }
    }
  }
  return {viol == 0, std::to_string(viol) + " violations in " + std::to_string(checks) + ", max ratio " + g(worst)};
}

// 5. N(lambda) / s^{-1}(1/psi(lambda)) bounded with drift < 2 over 3 decades.
Verdict effective_dimension_check() {
  std::string detail;
  bool ok = true;
  // sizes keep mu_N below the lambda window, so no ratio is truncated
  for (auto [fam, rho, size] : {std::tuple{BasisFamily::trigonometric, 0.5, 512}, std::tuple{BasisFamily::trigonometric, 0.6, 2048},
                                std::tuple{BasisFamily::gegenbauer, 0.5, 512}, std::tuple{BasisFamily::gegenbauer, 0.75, 512}}) {
    {
      const auto psi = pw(rho), s = declared_s(fam);
      const auto model = basis_model(fam, size, EigenSpec::induced(psi, s));
      const auto grid = log_grid(1e-5, 1e-2, 61);
      const auto r = effdim_bound_check(model, psi, s, grid);
      const bool truncated = std::any_of(r.truncation_flagged.begin(), r.truncation_flagged.end(), [](bool b) { return b; });
      ok = ok && std::isfinite(r.sup_ratio) && r.decade_drift < 2.0 && !truncated;
      detail += std::string(detail.empty() ? "" : "; ") + name(fam) + " psi=t^" + g(rho) + ": sup " + g(r.sup_ratio) +
                " drift " + g(r.decade_drift);
    }
  }
  return {ok, detail};
}

// 6. eig(K_m)/m within [1/4, 4] of psi^{-1}(1/s(i)), i <= 16.
Verdict eigendecay_check() {
  std::string detail;
  bool ok = true;
  std::uint64_t seed = 6;
  for (auto fam : {BasisFamily::trigonometric, BasisFamily::gegenbauer}) {
    const auto psi = pw(0.5), s = declared_s(fam);
    const auto model = basis_model(fam, 64, EigenSpec::induced(psi, s));
    const auto ref = infer_eigendecay(psi, s, 16);
    const auto c = compare_empirical(model, ref, 512, seed++);
    ok = ok && c.min_ratio >= 0.25 && c.max_ratio <= 4.0;
    detail += std::string(detail.empty() ? "" : "; ") + name(fam) + " ratios [" + g(c.min_ratio) + ", " +
              g(c.max_ratio) + "]";
  }
  return {ok, detail};
}

// 7. lambda_min(K) >= Wendland bound on random clouds.
Verdict gram_bound_check() {
  std::size_t viol = 0, clouds = 0;
  double worst = 1e300;
  const std::vector<RadialProfile> profiles = {RadialProfile::gaussian(), RadialProfile::exponential(),
                                               RadialProfile::matern(1.5), RadialProfile::matern(1.0, 0.5)};
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    for (int d = 1; d <= 3; ++d) {
      const RadialKernel kernel(profiles[k], d);
      Rng rng(derive_seed(7, k, d));
      for (int c = 0; c < 200; ++c) {
        const auto cloud = random_cloud(16 + 8 * (c % 4), d, rng);
        const auto b = gram_min_eig_bound(kernel, cloud.points);
        viol += !b.pass;
        if (b.bound > 0.0) worst = std::min(worst, b.observed / b.bound);
        ++clouds;
      }
    }
  }
  return {viol == 0, std::to_string(viol) + " violations in " + std::to_string(clouds) +
                         " clouds, min observed/bound " + g(worst)};
}

// 8. interpolation margin >= -1e-10.
Verdict interpolation_check_all() {
  double worst = 1e300;
  std::size_t draws = 0;
  for (auto fam : {BasisFamily::trigonometric, BasisFamily::gegenbauer}) {
    for (double decay : {1.5, 2.0, 3.0}) {
      const auto model = basis_model(fam, 64, EigenSpec::power(decay));
      for (double rho : {0.3, 0.5, 0.8}) {
        Rng rng(derive_seed(8, std::size_t(decay * 10), std::size_t(rho * 10)));
        const auto r = interpolation_check(model, pw(rho), 1000, rng);
        worst = std::min(worst, r.worst_margin);
        draws += r.draws;
      }
    }
  }
  return {worst >= -1e-10, "worst margin " + g(worst) + " over " + std::to_string(draws) + " functions"};
}

// 9. Packing invariants, checked against direct bit counts and coefficients.
Verdict packing_check() {
  const auto model = SpectralModel::build(BasisFamily::trigonometric, 160, EigenSpec::power(2.0));
  std::size_t families = 0;
  std::string failure;
  for (std::size_t m : {9, 12, 16, 24, 33, 48, 64}) {
    for (double eps : {1e-6, 1e-4}) {
      PackingOptions o;
      o.m = m;
      o.B_phi = 1e9;
      o.B_inf = 1e9;
      o.seed = derive_seed(9, m);
      const auto fam = build_packing(model, eps, o);
      ++families;
      const std::size_t need_d = (m + 7) / 8;
      const double need_m = std::pow(2.0, double(m) / 8.0);
      if (double(fam.size()) < need_m) failure += " M<2^{m/8} at m=" + std::to_string(m);
      std::vector<Eigen::VectorXd> coef;
      for (std::size_t j = 0; j < fam.size(); ++j) {
        const auto c = fam.coefficients(j);
        coef.push_back(Eigen::Map<const Eigen::VectorXd>(c.data(), c.size()));
      }
      for (std::size_t k = 0; k < fam.size(); ++k) {
        for (std::size_t l = k + 1; l < fam.size(); ++l) {
          std::size_t h = 0;
          for (std::size_t b = 0; b < m; ++b) h += ((fam.strings[k] >> b) ^ (fam.strings[l] >> b)) & 1u;
          if (h < need_d) failure += " hamming at m=" + std::to_string(m);
          const double dist = (coef[k] - coef[l]).squaredNorm();
          const double closed = 32.0 * eps / double(m) * double(h);
          if (std::abs(dist - closed) > 1e-12 * closed) failure += " identity at m=" + std::to_string(m);
          if (dist < 4.0 * eps * (1.0 - 1e-12)) failure += " separation at m=" + std::to_string(m);
        }
      }
      for (double n : {16.0, 64.0, 1024.0}) {
        for (double sigma : {0.1, 0.5, 2.0}) {
          double sum = 0.0;
          for (const auto& c : coef) sum += c.squaredNorm();
          const double radius = n / (2.0 * sigma * sigma * double(fam.size())) * sum;
          const auto kl = kl_radius(fam, n, sigma);
          if (std::abs(kl.value - radius) > 1e-12 * radius || radius > 16.0 * n * eps / (sigma * sigma) || !kl.within) {
            failure += " kl at m=" + std::to_string(m);
          }
        }
      }
      if (!verify_packing(fam).pass()) failure += " verify at m=" + std::to_string(m);
    }
  }
  return {failure.empty(), std::to_string(families) + " families" + (failure.empty() ? ", all exact" : ":" + failure)};
}

// 10. ||chi_(0,s)|| = (s^{1-p}/(1-p))^{1/rho} within 1e-6.
Verdict fundamental_check() {
  const auto s = log_grid(1e-3, 1e3, 61);
  double worst = 0.0;
  for (auto [rho, p] : {std::pair{2.0, 0.5}, std::pair{0.75, 0.25}, std::pair{1.5, 0.0}}) {
    const auto r = fundamental_function_check(rho, p, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double closed = std::pow(std::pow(s[i], 1.0 - p) / (1.0 - p), 1.0 / rho);
      worst = std::max(worst, std::abs(r.computed[i] / closed - 1.0));
    }
  }
  return {worst <= 1e-6, "max relative deviation " + g(worst) + " over 3 pairs x 61 points"};
}

// 11. Two-sided Fourier weight inequality on admissible profiles; a
// violating profile is rejected before evaluation.
Verdict boas_check_all() {
  double lo = 1e300, hi = 0.0;
  bool ok = true;
  struct Case {
    RadialProfile f;
    double a;
  };
  for (const auto& c : {Case{RadialProfile::exponential(), 0.25}, Case{RadialProfile::gaussian(), 0.25},
                        Case{RadialProfile::gaussian(), 0.5}, Case{RadialProfile::matern(1.5), 0.25}}) {
    const auto r = boas_check(c.f, pw(c.a), 2.0, 1);
    ok = ok && r.pass;
    lo = std::min(lo, r.min_ratio);
    hi = std::max(hi, r.max_ratio);
  }
  int rejected = 0;
  for (const auto& [f, d] : {std::pair{RadialProfile::exponential(), 2},
                             std::pair{RadialProfile::table({0.0, 1.0, 2.0}, {0.5, 1.0, 0.0}), 1}}) {
    try {
      boas_check(f, pw(0.25), 2.0, d);
    } catch (const PreconditionError&) {
      ++rejected;
    }
  }
  try {
    boas_check(RadialProfile::exponential(), IndexFunction::power(0.0), 2.0, 1, {1.0});
  } catch (const PreconditionError&) {
    ++rejected;
  }
  ok = ok && lo >= 1.0 / 50.0 && hi <= 50.0 && rejected == 3;
  return {ok, "ratios in [" + g(lo) + ", " + g(hi) + "], " + std::to_string(rejected) + "/3 violating profiles rejected"};
}

// 12. Identical artifacts across repeated runs and worker counts.
Verdict determinism_check() {
  const std::string rates = R"(experiment: rates
seed: 12
model: {basis: gegenbauer, gamma: 0.5, terms: 96, eigenvalues: {law: power, decay: 2}}
index:
  phi: {family: power, rho: 0.75}
  psi: {family: power, rho: 0.5}
target: {kind: random}
noise: {sigma: 0.3}
rates: {n_grid: [32, 64, 128, 256], trials: 6}
)";
  const std::string capacity = R"(experiment: capacity
seed: 12
index: {psi: {family: power, rho: 0.5}}
capacity:
  gram: {profiles: [{family: exponential}], dimensions: [2], clouds: 20, points: 12}
  eigendecay: {bases: [{basis: trigonometric}], m: 128, count: 8, terms: 32}
)";
  std::vector<std::pair<std::string, std::string>> configs = {{"rates", rates}, {"capacity", capacity}};
  for (const char* f : {"minimax.yaml", "assumptions_c1.yaml", "bounds.yaml"}) {
    const auto c = cli::load_config(std::string(HSLAB_CONFIGS) + "/" + f, std::nullopt);
    configs.emplace_back(f, c.text);
  }
  std::size_t files = 0;
  std::string diff;
  for (const auto& [label, text] : configs) {
    const auto cfg = cli::parse_config(text, label, std::nullopt);
    const auto a = cli::execute(cfg, 1);
    const auto b = cli::execute(cfg, workers() + 1);
    const auto c = cli::execute(cfg, 1);
    if (a.artifacts.files() != b.artifacts.files() || a.artifacts.files() != c.artifacts.files()) diff += " " + label;
    files += a.artifacts.files().size();
  }
  return {diff.empty(), std::to_string(configs.size()) + " configs, " + std::to_string(files) +
                            " artifacts compared byte for byte" + (diff.empty() ? "" : "; differing:" + diff)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"rate reproduction", rate_reproduction},
      {"schedule balance", schedule_balance_check},
      {"bias bound", bias_bound_check},
      {"uniform bias bound", uniform_bias_check},
      {"effective dimension", effective_dimension_check},
      {"eigendecay inference", eigendecay_check},
      {"gram eigenvalue bound", gram_bound_check},
      {"interpolation inequality", interpolation_check_all},
      {"packing exactness", packing_check},
      {"orlicz-lorentz fundamental function", fundamental_check},
      {"boas two-sidedness", boas_check_all},
      {"determinism", determinism_check},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << v.detail
              << " (" << g(secs) << " s)" << std::endl;
  }
  std::cout << (failed ? "FAILED " : "OK ") << criteria.size() - failed << "/" << criteria.size()
            << " acceptance criteria" << std::endl;
  return failed ? 1 : 0;
}

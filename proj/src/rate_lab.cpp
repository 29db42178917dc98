#include "hslab/rate_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <thread>

#include "hslab/errors.hpp"
#include "hslab/grid.hpp"
#include "hslab/rng.hpp"

namespace hslab {

IndexFunction schedule_composite(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s) {
  return ratio(phi, compose(s.reciprocal_inverse(), psi));
}

double schedule(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s, double n,
                double lambda_scale) {
  if (!(n >= 1.0)) throw DomainError("schedule needs n >= 1");
  if (!(lambda_scale > 0.0)) throw DomainError("lambda_scale must be positive");
  const auto c = schedule_composite(phi, psi, s);
  if (auto p = c.as_power(); p && !(p->second > 0.0)) {
    throw NonMonotoneError("composite phi/(s~ o psi) = " + c.describe() + " is not increasing");
  }
  return lambda_scale * c.inverse(1.0 / n);
}

double predicted_rate(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s, double n,
                      double lambda_scale) {
  return std::sqrt(phi(schedule(phi, psi, s, n, lambda_scale)));
}

double schedule_balance(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s,
                        double lambda, double n) {
  return phi(lambda) * n / s.inverse(1.0 / psi(lambda));
}

double bias_bound(const IndexFunction& phi, double lambda, double norm_phi) {
  return std::sqrt(phi(lambda)) * norm_phi;
}

double exact_bias(const SpectralModel& model, const TargetSpec& target, double lambda) {
  const auto& a = target.a();
  const auto& phi = target.phi();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double m = model.mu(i);
    const double r = lambda / (m + lambda);
    acc += a[i] * a[i] * r * r * phi(m);
  }
  return std::sqrt(acc);
}

double uniform_bias_bound(const IndexFunction& phi, const IndexFunction& psi, double lambda, double k_psi_sup,
                          double norm_phi) {
  return std::sqrt(phi(lambda) * k_psi_sup * k_psi_sup * norm_phi * norm_phi / psi(lambda));
}

VarianceBound variance_bound(const VarianceInputs& in) {
  if (!(in.lambda > 0.0) || !(in.n > 0.0)) throw DomainError("variance bound needs lambda > 0 and n > 0");
  if (!(in.delta > 0.0 && in.delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  const double phi = in.phi(in.lambda);
  const double psi = in.psi(in.lambda);
  const double s_inv = in.s.inverse(1.0 / psi);
  const double k2 = in.k_psi_sup * in.k_psi_sup;
  const double f2 = in.norm_phi * in.norm_phi;
  VarianceBound out;
  out.value = std::log(1.0 / in.delta) *
              std::sqrt(1152.0 * in.sigma * in.sigma * k2 * f2 / (in.n * psi) * (phi + 1.0 / in.n) + s_inv / in.n);
  out.bv_form = in.norm_phi * std::sqrt(phi) +
                in.k_psi_sup * in.norm_phi *
                    std::sqrt(std::log(2.0 / in.delta) / in.n * (1.0 / (in.n * psi) + phi / psi + s_inv));
  if (std::isfinite(in.effective_dimension) && std::isfinite(in.operator_norm)) {
    const double g = std::log(2.0 * std::numbers::e * in.effective_dimension * (1.0 + in.lambda / in.operator_norm));
    out.n_threshold = 8.0 * std::log(1.0 / in.delta) * k2 * g / psi;
    out.condition_met = in.n >= out.n_threshold;
  }
  return out;
}

EffdimCheck effdim_bound_check(const SpectralModel& model, const IndexFunction& psi, const IndexFunction& s,
                               const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) throw GridError("effective dimension check needs a lambda grid");
  EffdimCheck out;
  const double mu_n = model.eigenvalues().back();
  std::map<long, double> decade_sup;
  for (double lambda : lambda_grid) {
    const auto nd = effective_dimension(model, lambda);
    const double r = nd.value / s.inverse(1.0 / psi(lambda));
    out.lambdas.push_back(lambda);
    out.ratios.push_back(r);
    const bool flagged = lambda < mu_n;
    out.truncation_flagged.push_back(flagged);
    if (flagged) continue;
    out.sup_ratio = std::max(out.sup_ratio, r);
    auto& d = decade_sup[static_cast<long>(std::floor(std::log10(lambda)))];
    d = std::max(d, r);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& [k, v] : decade_sup) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  out.decade_drift = decade_sup.empty() ? std::numeric_limits<double>::infinity() : hi / lo;
  return out;
}

namespace {

SlopeFit ols(const std::vector<double>& x, const std::vector<double>& y, std::vector<double>* residuals) {
  const std::size_t m = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw GridError("slope fit needs distinct n values");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = m;
  double rss = 0.0;
  residuals->assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    (*residuals)[i] = r;
    rss += r * r;
  }
  f.residual_rms = std::sqrt(rss / static_cast<double>(m));
  f.half_width = m > 2 ? 2.0 * std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 0.0;
  return f;
}

}  // namespace

SlopeFit fit_slope(const std::vector<double>& n, const std::vector<double>& err) {
  if (n.size() != err.size()) throw GridError("slope fit: n and error lengths differ");
  if (n.size() < 4) throw GridError("slope fit needs at least 4 n-values");
  std::vector<std::size_t> order(n.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return n[a] < n[b]; });
  std::vector<double> x, y;
  for (auto i : order) {
    if (!(n[i] > 0.0) || !(err[i] > 0.0)) throw GridError("slope fit needs positive n and errors");
    x.push_back(std::log(n[i]));
    y.push_back(std::log(err[i]));
  }
  std::vector<double> res;
  SlopeFit f = ols(x, y, &res);
  std::vector<double> abs_res;
  for (double r : res) abs_res.push_back(std::abs(r));
  std::vector<double> sorted = abs_res;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (x.size() > 4 && abs_res[0] > 3.0 * median && abs_res[0] > 1e-9) {
    x.erase(x.begin());
    y.erase(y.begin());
    f = ols(x, y, &res);
    f.dropped_first = true;
  }
  return f;
}

RateReport run_experiment(const SpectralModel& model, const TargetSpec& target, const RateExperiment& exp) {
  if (exp.trials < 1) throw DomainError("trials must be >= 1");
  if (exp.n_grid.empty()) throw DomainError("n-grid is empty");
  for (std::size_t i = 0; i < exp.n_grid.size(); ++i) {
    if (exp.n_grid[i] < 1 || exp.n_grid[i] > kMaxSamples) throw DomainError("n-grid values must lie in [1, 4096]");
    if (i > 0 && exp.n_grid[i] <= exp.n_grid[i - 1]) throw DomainError("n-grid must be strictly increasing");
  }

  RateReport rep;
  rep.master_seed = exp.master_seed;
  rep.psi_tail = model.tail(exp.psi);
  if (exp.tail_gate && !(rep.psi_tail.tail <= 1e-6 * rep.psi_tail.head)) {
    throw BudgetError("psi truncation tail " + std::to_string(rep.psi_tail.tail) + " exceeds 1e-6 of the head");
  }
  if (auto p = model.declared_s().as_power()) rep.summability_violated = p->second <= 1.0;
  const auto xgrid = default_x_grid(model);
  rep.k_psi_sup = k_sup_norm(model, exp.psi, xgrid);

  const std::size_t n_count = exp.n_grid.size();
  rep.records.resize(n_count);
  for (std::size_t k = 0; k < n_count; ++k) {
    auto& r = rep.records[k];
    r.n = exp.n_grid[k];
    r.lambda = schedule(exp.phi, exp.psi, exp.s, static_cast<double>(r.n), exp.lambda_scale);
    r.errors.assign(exp.trials, 0.0);
    r.variance_errors.assign(exp.trials, 0.0);
    r.seeds.resize(exp.trials);
    for (std::size_t t = 0; t < exp.trials; ++t) r.seeds[t] = derive_seed(exp.master_seed, r.n, t);
  }

  // Population solutions per n, shared read-only by the workers.
  std::vector<std::vector<double>> f_lambda(n_count);
  for (std::size_t k = 0; k < n_count; ++k) f_lambda[k] = population_solution(model, target, rep.records[k].lambda);

  const std::size_t tasks = n_count * exp.trials;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= tasks) return;
      // largest n first so long tasks start early
      const std::size_t k = n_count - 1 - task / exp.trials;
      const std::size_t t = task % exp.trials;
      auto& r = rep.records[k];
      try {
        const auto d = draw_dataset(model, target, r.n, exp.sigma, r.seeds[t]);
        const auto est = fit(d, model, r.lambda);
        r.errors[t] = l2_error(model, est, target);
        double v = 0.0;
        for (std::size_t i = 0; i < est.coefficients.size(); ++i) {
          const double diff = est.coefficients[i] - f_lambda[k][i];
          v += diff * diff;
        }
        r.variance_errors[t] = std::sqrt(v);
      } catch (const FactorizationError& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::make_exception_ptr(FactorizationError(
              std::string(e.what()) + " (n=" + std::to_string(r.n) + ", trial " + std::to_string(t) + ")",
              e.min_pivot()));
        }
        next.store(tasks);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks);
      }
    }
  };
  const unsigned jobs = std::max(1u, exp.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  const double op_norm = model.mu(0);
  std::vector<double> ns, means;
  for (std::size_t k = 0; k < n_count; ++k) {
    auto& r = rep.records[k];
    double mean = 0.0;
    for (double e : r.errors) mean += e;
    mean /= static_cast<double>(exp.trials);
    double var = 0.0;
    for (double e : r.errors) var += (e - mean) * (e - mean);
    r.mean = mean;
    r.stderr_ = exp.trials > 1 ? std::sqrt(var / static_cast<double>(exp.trials - 1) / static_cast<double>(exp.trials))
                               : 0.0;
    r.predicted = std::sqrt(exp.phi(r.lambda));
    r.exact_bias = exact_bias(model, target, r.lambda);
    r.bias_bound = bias_bound(exp.phi, r.lambda, target.norm_phi());
    r.uniform_bias_bound = uniform_bias_bound(exp.phi, exp.psi, r.lambda, rep.k_psi_sup, target.norm_phi());
    r.sup_bias = sup_error(model, f_lambda[k], target, xgrid);
    VarianceInputs vin;
    vin.phi = exp.phi;
    vin.psi = exp.psi;
    vin.s = exp.s;
    vin.lambda = r.lambda;
    vin.n = static_cast<double>(r.n);
    vin.sigma = exp.sigma;
    vin.k_psi_sup = rep.k_psi_sup;
    vin.norm_phi = target.norm_phi();
    vin.delta = exp.delta;
    vin.effective_dimension = effective_dimension(model, r.lambda).value;
    vin.operator_norm = op_norm;
    r.variance = variance_bound(vin);
    r.balance = schedule_balance(exp.phi, exp.psi, exp.s, r.lambda, static_cast<double>(r.n));
    ns.push_back(static_cast<double>(r.n));
    means.push_back(r.mean);
  }
  const bool positive = std::all_of(means.begin(), means.end(), [](double m) { return m > 0.0; });
  if (n_count >= 4 && positive) rep.fit = fit_slope(ns, means);
  return rep;
}

}  // namespace hslab

#include "hslab/rearrangement.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hslab/errors.hpp"
#include "hslab/grid.hpp"

namespace hslab {

namespace {

double gk(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, tol < 1e-10 ? 8 : 4, tol, &err);
}

// int over the real line of h(u) du, unit panels outward from 0. Returns
// +inf when either direction fails to settle within the panel budget.
// panel_tol should not be tighter than the accuracy of h.
double integrate_line(const std::function<double(double)>& h, double rtol = 1e-10, int max_panels = 400,
                      double panel_tol = 1e-12) {
  double total = gk(h, -0.5, 0.5, panel_tol);
  for (int dir : {1, -1}) {
    int quiet = 0;
    bool settled = false;
    for (int k = 0; k < max_panels; ++k) {
      const double a = dir * (0.5 + k), b = dir * (1.5 + k);
      const double piece = dir > 0 ? gk(h, a, b, panel_tol) : gk(h, b, a, panel_tol);
      total += piece;
      if (std::abs(piece) <= rtol * std::abs(total)) {
        if (++quiet >= 3) {
          settled = true;
          break;
        }
      } else {
        quiet = 0;
      }
    }
    if (!settled) return std::numeric_limits<double>::infinity();
  }
  return total;
}

double psi_q(const IndexFunction& Psi, double t, double q) {
  return t > 0.0 ? std::pow(Psi(t), q) : 0.0;
}

}  // namespace

StepFunction::StepFunction(std::vector<double> breaks, std::vector<double> values)
    : breaks_(std::move(breaks)), values_(std::move(values)) {
  if (breaks_.size() != values_.size()) throw DomainError("step function needs one value per break");
  for (std::size_t i = 0; i < breaks_.size(); ++i) {
    if (!(breaks_[i] > left(i))) throw DomainError("step breakpoints must increase strictly from 0");
    if (!(values_[i] >= 0.0)) throw DomainError("step values must be nonnegative");
    if (i > 0 && values_[i] > values_[i - 1]) throw NonMonotoneError("step values must be nonincreasing");
  }
}

double StepFunction::operator()(double t) const {
  if (t < 0.0) throw DomainError("step function evaluated at negative t");
  const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), t);
  if (it == breaks_.end()) return 0.0;
  return values_[static_cast<std::size_t>(it - breaks_.begin())];
}

double StepFunction::integral_power(double p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += std::pow(values_[i], p) * (breaks_[i] - left(i));
  return s;
}

StepFunction StepFunction::scaled(double c) const {
  std::vector<double> v = values_;
  for (auto& x : v) x *= std::abs(c);
  return StepFunction(breaks_, std::move(v));
}

StepFunction decreasing_rearrangement(const std::vector<double>& values, const std::vector<double>& weights) {
  if (values.size() != weights.size()) throw DomainError("one weight per value required");
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (double w : weights) {
    if (!(w > 0.0)) throw DomainError("rearrangement weights must be positive");
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });
  std::vector<double> br, v;
  double t = 0.0;
  for (std::size_t i : idx) {
    t += weights[i];
    br.push_back(t);
    v.push_back(std::abs(values[i]));
  }
  return StepFunction(std::move(br), std::move(v));
}

StepFunction indicator(double s) {
  return StepFunction({s}, {1.0});
}

double lorentz_norm(const StepFunction& g, const IndexFunction& Psi, double q) {
  if (!(q >= 1.0)) throw DomainError("lorentz_norm needs q >= 1");
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = g.values()[i];
    if (v == 0.0) continue;
    acc += std::pow(v, q) * (psi_q(Psi, g.breaks()[i], q) - psi_q(Psi, g.left(i), q));
  }
  return std::pow(acc, 1.0 / q);
}

double marcinkiewicz_norm(const StepFunction& g, const IndexFunction& phi) {
  double best = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) best = std::max(best, g.values()[i] * phi(g.breaks()[i]));
  return best;
}

Weight Weight::power(double p) {
  if (!(p < 1.0)) throw DomainError("weight t^{-p} is not integrable at 0 for p >= 1");
  if (!(p >= 0.0)) throw DomainError("weight t^{-p} must be nonincreasing (p >= 0)");
  Weight w;
  w.p_ = p;
  return w;
}

Weight Weight::constant() {
  return power(0.0);
}

Weight Weight::callable(std::function<double(double)> fn) {
  if (!fn) throw DomainError("callable weight needs a function");
  Weight w;
  w.fn_ = std::move(fn);
  return w;
}

double Weight::operator()(double t) const {
  return fn_ ? fn_(t) : std::pow(t, -p_);
}

double Weight::mass(double a, double b) const {
  if (fn_) {
    const double m = gk(fn_, a, b);
    if (!std::isfinite(m)) throw DomainError("weight is not integrable on the step");
    return m;
  }
  const double e = 1.0 - p_;
  return (std::pow(b, e) - std::pow(a, e)) / e;
}

double orlicz_lorentz_norm(const StepFunction& f, const IndexFunction& Phi, const Weight& w, double rtol) {
  std::vector<double> mass(f.size());
  double vmax = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mass[i] = w.mass(f.left(i), f.breaks()[i]);
    vmax = std::max(vmax, f.values()[i]);
  }
  if (vmax == 0.0) return 0.0;
  auto gauge = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double v = f.values()[i];
      if (v > 0.0) s += Phi(v / lambda) * mass[i];
    }
    return s;
  };
  // gauge is nonincreasing in lambda; bracket the crossing of 1.
  double lo = vmax, hi = vmax;
  for (int k = 0; gauge(lo) <= 1.0; ++k) {
    if (k > 2000) throw RangeError("orlicz_lorentz_norm: no lower bracket");
    lo /= 2.0;
  }
  for (int k = 0; gauge(hi) > 1.0; ++k) {
    if (k > 2000) throw RangeError("orlicz_lorentz_norm: no upper bracket");
    hi *= 2.0;
  }
  while (hi / lo - 1.0 > rtol * 1e-3) {
    const double mid = std::sqrt(lo * hi);
    if (gauge(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

FundamentalFunctionCheck fundamental_function_check(double rho, double p, const std::vector<double>& s_grid) {
  if (!(rho > 0.0)) throw DomainError("fundamental_function_check needs rho > 0");
  const auto Phi = IndexFunction::power(rho);
  const auto w = Weight::power(p);
  FundamentalFunctionCheck out;
  out.lemma_constant = std::pow(1.0 - p, -1.0 / rho);
  for (double s : s_grid) {
    const double computed = orlicz_lorentz_norm(indicator(s), Phi, w);
    const double closed = std::pow(std::pow(s, 1.0 - p) / (1.0 - p), 1.0 / rho);
    const double lemma = std::pow(s, (2.0 - p) / rho) / Phi.inverse(s);
    out.s.push_back(s);
    out.computed.push_back(computed);
    out.closed.push_back(closed);
    out.lemma_form.push_back(lemma);
    out.max_deviation = std::max(out.max_deviation, std::abs(computed / closed - 1.0));
    out.lemma_spread = std::max(out.lemma_spread, std::abs(closed / lemma / out.lemma_constant - 1.0));
  }
  return out;
}

double quasi_triangle_ratio(const std::function<double(const StepFunction&)>& norm, const std::vector<double>& u,
                            const std::vector<double>& v, const std::vector<double>& weights) {
  if (u.size() != v.size()) throw DomainError("quasi_triangle_ratio needs equal-length samples");
  std::vector<double> sum(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) sum[i] = u[i] + v[i];
  const double a = norm(decreasing_rearrangement(u, weights));
  const double b = norm(decreasing_rearrangement(v, weights));
  const double c = norm(decreasing_rearrangement(sum, weights));
  return c / (a + b);
}

StepFunction radial_rearrangement(const std::function<double(double)>& profile, int d,
                                  const std::vector<double>& r_grid) {
  if (r_grid.size() < 2) throw GridError("radial_rearrangement needs a grid");
  const double omega = ball_volume(d);
  std::vector<double> mids(r_grid.size()), vals(r_grid.size());
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > (i ? r_grid[i - 1] : 0.0))) throw GridError("radial grid must increase from 0");
    mids[i] = i == 0 ? 0.5 * r_grid[0] : std::sqrt(r_grid[i - 1] * r_grid[i]);
    vals[i] = std::abs(profile(mids[i]));
  }
  const bool monotone = std::is_sorted(vals.rbegin(), vals.rend());
  if (monotone) {
    std::vector<double> br(r_grid.size());
    for (std::size_t i = 0; i < r_grid.size(); ++i) br[i] = omega * std::pow(r_grid[i], d);
    return StepFunction(std::move(br), std::move(vals));
  }
  std::vector<double> w(r_grid.size());
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    const double a = i == 0 ? 0.0 : r_grid[i - 1];
    w[i] = omega * (std::pow(r_grid[i], d) - std::pow(a, d));
  }
  return decreasing_rearrangement(vals, w);
}

namespace {

// W1(t) = int_0^t r^p w^p(1/r) dr/r and W2(t) = int_0^t w^p(r) dr/r as index
// functions; nullopt when the integral diverges at 0.
std::optional<IndexFunction> growth_function(const IndexFunction& w, double p, bool backward) {
  if (auto pw = w.as_power()) {
    const double c = std::pow(pw->first, p);
    const double e = backward ? p * (1.0 - pw->second) : p * pw->second;
    if (!(e > 0.0)) return std::nullopt;
    return IndexFunction::power(e, IndexFunction::kUnbounded, c / e);
  }
  auto integrand = [&](double r) { return backward ? std::pow(r, p) * std::pow(w(1.0 / r), p) : std::pow(w(r), p); };
  const auto grid = log_grid(1e-16, 1e16, 641);
  // int_0^{t0} g(r) dr/r = int_{-inf}^{ln t0} g(e^u) du
  const double u0 = std::log(grid.front());
  double acc = integrate_line([&](double v) { return v <= 0.5 ? integrand(std::exp(u0 + v - 0.5)) : 0.0; });
  if (!std::isfinite(acc) || !(acc > 0.0)) return std::nullopt;
  std::vector<double> vals(grid.size());
  vals[0] = acc;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    acc += gk([&](double u) { return integrand(std::exp(u)); }, std::log(grid[i - 1]), std::log(grid[i]));
    vals[i] = acc;
  }
  return IndexFunction::table(grid, vals);
}

double boas_line(const std::function<double(double)>& g, double rtol = 1e-10, double panel_tol = 1e-12) {
  return integrate_line([&](double u) { return g(std::exp(u)); }, rtol, 400, panel_tol);
}

}  // namespace

void certify_boas_preconditions(const RadialProfile& f, const IndexFunction& w, double p, int d, double* beta_w1,
                                double* beta_w2) {
  if (!(p >= 1.0)) throw DomainError("boas_check needs p >= 1");
  const auto grid = log_grid(1e-6, 1e3, 451);
  double prev = std::numeric_limits<double>::infinity();
  for (double r : grid) {
    const double v = std::abs(f(r)) * std::pow(r, d - 1);
    if (v > prev * (1.0 + 1e-12)) {
      throw PreconditionError("f(r) r^{d-1} increases near r=" + std::to_string(r), r);
    }
    prev = v;
  }
  const double half = boas_line([&](double r) { return std::abs(f(r)) * std::pow(r, 1.5); });
  if (!std::isfinite(half)) throw PreconditionError("f(r) r^{1/2} is not integrable", 0.0);
  const auto W1 = growth_function(w, p, true);
  const auto W2 = growth_function(w, p, false);
  if (!W1) throw PreconditionError("W1 diverges at 0", 1.0);
  if (!W2) throw PreconditionError("W2 diverges at 0", 2.0);
  const double b1 = extension_indices(*W1).beta, b2 = extension_indices(*W2).beta;
  if (beta_w1) *beta_w1 = b1;
  if (beta_w2) *beta_w2 = b2;
  if (!(b1 < p)) throw PreconditionError("beta of W1 is not below p", b1);
  if (!(b2 < p)) throw PreconditionError("beta of W2 is not below p", b2);
}

BoasSides boas_sides(const RadialProfile& f, const IndexFunction& w, double p, int d) {
  const double S = sphere_area(d);
  const bool closed = f.closed_transform(d, 1.0).has_value();
  BoasSides out;
  out.lhs = S * boas_line([&](double r) {
              return std::pow(std::abs(fourier_radial(f, d, r)) * w(std::pow(r, -d)) * std::pow(r, d), p);
            }, closed ? 1e-10 : 1e-7, closed ? 1e-12 : 1e-7);
  out.rhs = S * boas_line([&](double r) { return std::pow(w(std::pow(r, d)) * std::abs(f(r)), p); });
  if (!std::isfinite(out.lhs) || !std::isfinite(out.rhs)) throw QuadratureError("Boas integral did not converge");
  out.ratio = out.lhs / out.rhs;
  return out;
}

BoasReport boas_check(const RadialProfile& f, const IndexFunction& w, double p, int d,
                      const std::vector<double>& dilations, double R) {
  BoasReport out;
  certify_boas_preconditions(f, w, p, d, &out.beta_w1, &out.beta_w2);
  out.min_ratio = std::numeric_limits<double>::infinity();
  out.max_ratio = 0.0;
  for (double c : dilations) {
    const auto s = boas_sides(f.dilate(c), w, p, d);
    out.dilations.push_back(c);
    out.sides.push_back(s);
    out.min_ratio = std::min(out.min_ratio, s.ratio);
    out.max_ratio = std::max(out.max_ratio, s.ratio);
  }
  out.pass = out.min_ratio >= 1.0 / R && out.max_ratio <= R;
  return out;
}

double tight_range_exponent(double p, double rho) {
  return 1.0 + 1.0 / p - 1.0 / rho;
}

double tight_range_lorentz_index(double p, double rho) {
  if (rho == 1.0) return p;
  const double rho_star = rho / (rho - 1.0);
  return p * rho_star / (rho_star + p);
}

TightRangeReport tight_range_check(double rho, double a, const RadialProfile& kernel, int d, double p, double q,
                                   const std::vector<RadialProfile>& profiles, const std::vector<double>& dilations,
                                   double R) {
  if (!(rho > p / (p + 1.0))) throw PreconditionError("tight range check needs rho > p/(p+1)", rho);
  if (!(a >= 1.0)) throw DomainError("tight range check needs a >= 1");
  if (!(q >= 1.0)) throw DomainError("tight range check needs q >= 1");
  const bool identity = kernel.family() == RadialProfile::Family::identity;
  TightRangeReport out;
  out.exponent = tight_range_exponent(p, rho);
  // Psi(t) = t^{1 + 1/p} / psi^{-1}(t) with psi = t^rho
  const auto Psi = IndexFunction::power(out.exponent);
  const auto Lpq = IndexFunction::power(1.0 / p);
  const auto grid = log_grid(1e-4, 1e3, 141);
  out.min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& base : profiles) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double r = grid[k];
      const double prev = k ? std::abs(base(grid[k - 1])) * std::pow(grid[k - 1], d - 1) : 1e300;
      if (std::abs(base(r)) * std::pow(r, d - 1) > prev * (1.0 + 1e-12)) {
        throw PreconditionError(base.describe() + " is not radially decreasing in the required sense", r);
      }
    }
  }
  auto run = [&](const RadialProfile& base) {
    std::vector<std::pair<double, std::string>> rows;
    // Transform of the base profile, tabulated once when it needs quadrature.
    std::function<double(double)> base_fourier;
    if (base.closed_transform(d, 1.0)) {
      base_fourier = [&](double w) { return fourier_radial(base, d, w); };
    } else {
      auto wg = log_grid(1e-6, 1e6, 961);
      std::vector<double> fv(wg.size());
      for (std::size_t j = 0; j < wg.size(); ++j) fv[j] = fourier_radial(base, d, wg[j]);
      const double f0 = fourier_radial(base, d, 0.0);
      base_fourier = [wg = std::move(wg), fv = std::move(fv), f0](double w) {
        if (w <= wg.front()) return f0;
        const double lw = std::log(w), lo = std::log(wg.front()), step = std::log(wg[1]) - lo;
        std::size_t j = std::min(static_cast<std::size_t>((lw - lo) / step), wg.size() - 2);
        if (w >= wg.back() && fv[j] > 0.0 && fv[j + 1] > 0.0) {
          // power-law tail from the last two nodes
          return fv[j + 1] * std::exp(std::log(fv[j + 1] / fv[j]) / step * (lw - std::log(wg.back())));
        }
        const double u = (lw - lo) / step - double(j);
        return (1.0 - u) * fv[j] + u * fv[j + 1];
      };
    }
    for (double c : dilations) {
      const auto f = base.dilate(c);
      const double fn = lorentz_norm(radial_rearrangement([&](double r) { return f(r); }, d, grid), Lpq, q);
      double gn;
      if (identity && a == 1.0) {
        gn = lorentz_norm(radial_rearrangement([&](double r) { return f(r); }, d, grid), Psi, q);
      } else {
        auto multiplier = [&](double w) { return identity ? 1.0 : fourier_radial(kernel, d, std::pow(w, 1.0 / a)); };
        const double cd = std::pow(c, -d);
        const auto Fg = RadialProfile::callable("Tf transform", [&, c, cd](double w) {
          return multiplier(w) * cd * base_fourier(w / c);
        });
        const double inv = std::pow(2.0 * std::numbers::pi, -d);
        auto g = [&](double r) { return inv * hankel_transform(Fg, d, r); };
        gn = lorentz_norm(radial_rearrangement(g, d, grid), Psi, q);
      }
      rows.emplace_back(gn / fn, f.describe());
    }
    return rows;
  };
  std::vector<std::future<std::vector<std::pair<double, std::string>>>> batches;
  for (const auto& base : profiles) batches.push_back(std::async(std::launch::async, run, std::cref(base)));
  for (auto& batch : batches) {
    for (auto& [ratio, label] : batch.get()) {
      out.ratios.push_back(ratio);
      out.labels.push_back(std::move(label));
      out.min_ratio = std::min(out.min_ratio, ratio);
      out.max_ratio = std::max(out.max_ratio, ratio);
    }
  }
  out.spread = out.max_ratio / out.min_ratio;
  out.pass = std::isfinite(out.spread) && out.spread <= R;
  return out;
}

}  // namespace hslab

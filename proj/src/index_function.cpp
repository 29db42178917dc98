#include "hslab/index_function.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "hslab/errors.hpp"
#include "hslab/grid.hpp"

namespace hslab {

struct IndexFunction::Node {
  Family family;
  double upper;
  std::string name;
  std::function<double(double)> fn;
  std::optional<std::pair<double, double>> power;  // (coef, rho)
};

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::shared_ptr<const IndexFunction::Node> make_node(IndexFunction::Family family, double upper,
                                                     std::string name,
                                                     std::function<double(double)> fn,
                                                     std::optional<std::pair<double, double>> pw) {
  return std::make_shared<const IndexFunction::Node>(
      IndexFunction::Node{family, upper, std::move(name), std::move(fn), pw});
}

}  // namespace

IndexFunction IndexFunction::power(double rho, double upper, double coef) {
  if (!std::isfinite(rho) || !(coef > 0.0)) {
    throw DomainError("power index function needs finite rho and positive coefficient");
  }
  if (!(upper > 0.0)) throw DomainError("domain upper endpoint must be positive");
  std::string name = (coef == 1.0 ? std::string{} : fmt_num(coef) + "*") + "t^" + fmt_num(rho);
  auto fn = [coef, rho](double t) { return coef * std::pow(t, rho); };
  return IndexFunction(make_node(Family::power, upper, name, fn, std::make_pair(coef, rho)));
}

IndexFunction IndexFunction::power_log(double rho, double log_exponent, double upper) {
  if (!(upper > 0.0)) throw DomainError("domain upper endpoint must be positive");
  std::string name = "t^" + fmt_num(rho) + "*(1+|ln t|)^" + fmt_num(log_exponent);
  auto fn = [rho, log_exponent](double t) {
    return std::pow(t, rho) * std::pow(1.0 + std::abs(std::log(t)), log_exponent);
  };
  if (log_exponent == 0.0) return power(rho, upper);
  return IndexFunction(make_node(Family::power_log, upper, name, fn, std::nullopt));
}

IndexFunction IndexFunction::table(std::vector<double> t, std::vector<double> values) {
  if (t.size() < 2 || t.size() != values.size()) {
    throw DomainError("table index function needs at least two (t, value) pairs");
  }
  bool positive = true;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0) || !(values[i] >= 0.0)) {
      throw DomainError("table entries must have t > 0 and value >= 0");
    }
    if (i > 0 && !(t[i] > t[i - 1])) throw DomainError("table abscissae must increase strictly");
    if (i > 0 && values[i] < values[i - 1]) throw NonMonotoneError("table values must be nondecreasing");
    positive = positive && values[i] > 0.0;
  }
  const double upper = t.back();
  auto fn = [t = std::move(t), v = std::move(values), positive](double x) {
    if (x <= t.front()) {
      if (!positive) return v.front() * x / t.front();
      // power extrapolation toward 0 with the first segment's log slope
      const double slope = std::log(v[1] / v[0]) / std::log(t[1] / t[0]);
      return v.front() * std::pow(x / t.front(), std::max(slope, 0.0));
    }
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - t.begin()), t.size() - 1);
    const std::size_t lo = hi - 1;
    if (positive) {
      const double w = std::log(x / t[lo]) / std::log(t[hi] / t[lo]);
      return std::exp(std::log(v[lo]) + w * std::log(v[hi] / v[lo]));
    }
    const double w = (x - t[lo]) / (t[hi] - t[lo]);
    return v[lo] + w * (v[hi] - v[lo]);
  };
  return IndexFunction(make_node(Family::table, upper, "table", fn, std::nullopt));
}

IndexFunction IndexFunction::callable(std::string name, std::function<double(double)> fn, double upper) {
  if (!fn) throw DomainError("callable index function needs a function");
  return IndexFunction(make_node(Family::callable, upper, std::move(name), std::move(fn), std::nullopt));
}

double IndexFunction::raw(double t) const { return node_->fn(t); }

double IndexFunction::eval(double t) const {
  if (!(t > 0.0) || t > node_->upper) {
    throw DomainError("index function " + node_->name + " evaluated outside (0, " +
                      fmt_num(node_->upper) + "] at t=" + fmt_num(t));
  }
  const double v = node_->fn(t);
  if (std::isnan(v)) throw DomainError("index function " + node_->name + " is undefined at t=" + fmt_num(t));
  return v;
}

IndexFunction::Family IndexFunction::family() const { return node_->family; }
double IndexFunction::upper() const { return node_->upper; }
std::string IndexFunction::describe() const { return node_->name; }
std::optional<std::pair<double, double>> IndexFunction::as_power() const { return node_->power; }

IndexFunction IndexFunction::with_upper(double upper) const {
  if (!(upper > 0.0)) throw DomainError("domain upper endpoint must be positive");
  auto n = *node_;
  n.upper = upper;
  return IndexFunction(std::make_shared<const Node>(std::move(n)));
}

IndexFunction IndexFunction::scaled(double c) const {
  if (!(c > 0.0)) throw DomainError("scale factor must be positive");
  if (auto p = as_power()) return power(p->second, upper(), p->first * c);
  auto self = node_;
  return IndexFunction(make_node(Family::composed, upper(), fmt_num(c) + "*(" + describe() + ")",
                                 [self, c](double t) { return c * self->fn(t); }, std::nullopt));
}

double IndexFunction::inverse(double y) const {
  if (!(y > 0.0) || !std::isfinite(y)) {
    throw RangeError("inverse of " + describe() + " requested for y=" + fmt_num(y) + " outside (0, f(T)]");
  }
  if (auto p = as_power()) {
    const auto [coef, rho] = *p;
    const double t = std::pow(y / coef, 1.0 / rho);
    if (!(t > 0.0) || t > upper() * (1.0 + 1e-14)) {
      throw RangeError("inverse of " + describe() + " at y=" + fmt_num(y) + " leaves the domain");
    }
    return std::min(t, upper());
  }

  // Bracket in log t. The anchor is the domain end (or 1 when unbounded).
  const double top = std::isfinite(upper()) ? upper() : 1.0;
  const double f_top = raw(top);
  const double probe = top * 1e-6;
  const double f_probe = raw(probe);
  if (!(f_top != f_probe)) {
    throw NonMonotoneError("cannot determine monotone direction of " + describe());
  }
  const bool increasing = f_top > f_probe;

  double lo = top, hi = top;
  double f_lo = f_top, f_hi = f_top;
  // Move lo toward 0 until the bracket holds y from the small-t side.
  auto below = [&](double v) { return increasing ? v <= y : v >= y; };
  auto above = [&](double v) { return increasing ? v >= y : v <= y; };
  int guard = 0;
  while (!below(f_lo)) {
    lo *= 0.5;
    f_lo = raw(lo);
    if (++guard > 2000 || lo < 1e-300) {
      throw RangeError("inverse of " + describe() + " at y=" + fmt_num(y) + ": no bracket near t=0");
    }
  }
  guard = 0;
  while (!above(f_hi)) {
    if (std::isfinite(upper())) {
      throw RangeError("inverse of " + describe() + " at y=" + fmt_num(y) + " exceeds f(T)");
    }
    hi *= 2.0;
    f_hi = raw(hi);
    if (++guard > 2000 || hi > 1e300) {
      throw RangeError("inverse of " + describe() + " at y=" + fmt_num(y) + ": no bracket at large t");
    }
  }
  if (lo == hi) return lo;

  // Reject brackets on which f is visibly non-monotone.
  {
    const auto scan = log_grid(lo, hi, 64);
    double prev = raw(scan.front());
    for (std::size_t i = 1; i < scan.size(); ++i) {
      const double cur = raw(scan[i]);
      const double slack = 1e-12 * std::max(std::abs(prev), std::abs(cur));
      if ((increasing && cur < prev - slack) || (!increasing && cur > prev + slack) || std::isnan(cur)) {
        throw NonMonotoneError("bracketing failed: " + describe() + " is not monotone near t=" +
                               fmt_num(scan[i]));
      }
      prev = cur;
    }
  }

  double a = std::log(lo), b = std::log(hi);
  double best = lo, best_err = std::abs(f_lo - y);
  if (std::abs(f_hi - y) < best_err) {
    best = hi;
    best_err = std::abs(f_hi - y);
  }
  for (int step = 0; step < kMaxBisection && best_err > kInverseRtol * y; ++step) {
    const double mid = 0.5 * (a + b);
    const double t = std::exp(mid);
    const double v = raw(t);
    const double err = std::abs(v - y);
    if (err < best_err) {
      best = t;
      best_err = err;
    }
    if (below(v)) {
      a = mid;
    } else {
      b = mid;
    }
    if (b - a < 1e-17) break;
  }
  return best;
}

IndexFunction IndexFunction::inverse_function() const {
  if (auto p = as_power()) {
    const auto [coef, rho] = *p;
    // (y/c)^(1/rho) = c^(-1/rho) * y^(1/rho)
    const double up = std::isfinite(upper()) ? coef * std::pow(upper(), rho) : kUnbounded;
    return power(1.0 / rho, rho > 0 ? up : kUnbounded, std::pow(coef, -1.0 / rho));
  }
  const IndexFunction self = *this;
  const double up = std::isfinite(upper()) ? raw(upper()) : kUnbounded;
  return IndexFunction(make_node(Family::composed, up, "inv(" + describe() + ")",
                                 [self](double y) { return self.inverse(y); }, std::nullopt));
}

IndexFunction IndexFunction::reciprocal_inverse() const {
  if (auto p = as_power()) {
    const auto [coef, rho] = *p;
    // s^{-1}(1/t) = (1/(c t))^(1/rho)
    return power(-1.0 / rho, kUnbounded, std::pow(coef, -1.0 / rho));
  }
  const IndexFunction self = *this;
  return IndexFunction(make_node(Family::composed, kUnbounded, "inv(" + describe() + ")(1/t)",
                                 [self](double t) { return self.inverse(1.0 / t); }, std::nullopt));
}

IndexFunction compose(const IndexFunction& outer, const IndexFunction& inner) {
  if (auto po = outer.as_power()) {
    if (auto pi = inner.as_power()) {
      // c1 (c2 t^r2)^r1
      return IndexFunction::power(po->second * pi->second, inner.upper(),
                                  po->first * std::pow(pi->first, po->second));
    }
  }
  auto o = outer.node_;
  auto i = inner.node_;
  return IndexFunction(make_node(IndexFunction::Family::composed, inner.upper(),
                                 "(" + outer.describe() + ")o(" + inner.describe() + ")",
                                 [o, i](double t) { return o->fn(i->fn(t)); }, std::nullopt));
}

IndexFunction ratio(const IndexFunction& num, const IndexFunction& den) {
  const double up = std::min(num.upper(), den.upper());
  if (auto pn = num.as_power()) {
    if (auto pd = den.as_power()) {
      return IndexFunction::power(pn->second - pd->second, up, pn->first / pd->first);
    }
  }
  auto a = num.node_;
  auto b = den.node_;
  return IndexFunction(make_node(IndexFunction::Family::composed, up,
                                 "(" + num.describe() + ")/(" + den.describe() + ")",
                                 [a, b](double t) { return a->fn(t) / b->fn(t); }, std::nullopt));
}

IndexFunction product(const IndexFunction& x, const IndexFunction& y) {
  const double up = std::min(x.upper(), y.upper());
  if (auto px = x.as_power()) {
    if (auto py = y.as_power()) {
      return IndexFunction::power(px->second + py->second, up, px->first * py->first);
    }
  }
  auto a = x.node_;
  auto b = y.node_;
  return IndexFunction(make_node(IndexFunction::Family::composed, up,
                                 "(" + x.describe() + ")*(" + y.describe() + ")",
                                 [a, b](double t) { return a->fn(t) * b->fn(t); }, std::nullopt));
}

std::vector<double> default_grid(double lo, double hi) { return log_grid(lo, hi, 512); }

double dilation(const IndexFunction& f, double t, const std::vector<double>& grid) {
  if (grid.empty()) throw GridError("dilation needs a nonempty grid");
  if (!(t > 0.0)) throw DomainError("dilation argument must be positive");
  if (auto p = f.as_power()) return std::pow(t, p->second);
  const double up = f.upper();
  double best = -1.0;
  for (double s : grid) {
    if (s > up || s * t > up) continue;
    const double fs = f.raw(s);
    if (!(fs > 0.0) || !std::isfinite(fs)) continue;
    const double r = f.raw(s * t) / fs;
    if (std::isfinite(r)) best = std::max(best, r);
  }
  if (best < 0.0) throw GridError("dilation grid has no admissible points for t=" + std::to_string(t));
  return best;
}

namespace {

struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::infinity();
};

SlopeFit fit_log_slope(const IndexFunction& f, const std::vector<double>& ts, const std::vector<double>& s_grid) {
  std::vector<double> lt, ld;
  for (double t : ts) {
    try {
      const double d = dilation(f, t, s_grid);
      if (d > 0.0 && std::isfinite(d)) {
        lt.push_back(std::log(t));
        ld.push_back(std::log(d));
      }
    } catch (const GridError&) {
    }
  }
  SlopeFit out;
  if (lt.size() < 4) return out;
  Eigen::MatrixXd a(lt.size(), 3);
  Eigen::VectorXd b(lt.size());
  for (std::size_t i = 0; i < lt.size(); ++i) {
    a(i, 0) = lt[i];
    a(i, 1) = std::log(std::abs(lt[i]));
    a(i, 2) = 1.0;
    b(i) = ld[i];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd r = a * coef - b;
  out.slope = coef(0);
  out.residual = std::sqrt(r.squaredNorm() / static_cast<double>(lt.size()));
  return out;
}

}  // namespace

ExtensionIndices extension_indices(const IndexFunction& f) {
  const double hi = std::isfinite(f.upper()) ? std::min(f.upper(), 1e16) : 1e16;
  return extension_indices(f, log_grid(1e-16, hi, static_cast<std::size_t>(20.0 * std::log10(hi / 1e-16)) + 1));
}

ExtensionIndices extension_indices(const IndexFunction& f, const std::vector<double>& s_grid) {
  ExtensionIndices out;
  if (auto p = f.as_power()) {
    out.alpha = out.beta = p->second;
    return out;
  }
  const auto small = fit_log_slope(f, log_grid(1e-8, 1e-4, 33), s_grid);
  const auto large = fit_log_slope(f, log_grid(1e4, 1e8, 33), s_grid);
  out.alpha = small.slope;
  out.beta = large.slope;
  out.alpha_residual = small.residual;
  out.beta_residual = large.residual;
  out.diverged = !(small.residual <= 0.05) || !(large.residual <= 0.05);
  return out;
}

Delta2Estimate check_delta2(const IndexFunction& f, const std::vector<double>& grid) {
  if (grid.size() < 2) throw GridError("check_delta2 needs a grid");
  Delta2Estimate out;
  out.d1 = std::numeric_limits<double>::infinity();
  out.d2 = 0.0;
  std::map<long, double> decade_max;
  for (double l : grid) {
    if (!(l > 0.0) || 2.0 * l > f.upper()) continue;
    const double a = f.raw(l);
    const double b = f.raw(2.0 * l);
    double r;
    if (a > 0.0) {
      r = b / a;
    } else {
      r = b > 0.0 ? std::numeric_limits<double>::infinity() : std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isnan(r)) continue;
    if (r < out.d1) {
      out.d1 = r;
      if (r <= 0.0) out.witness = l;
    }
    if (r > out.d2) {
      out.d2 = r;
      if (!std::isfinite(r)) out.witness = l;
    }
    const long dec = static_cast<long>(std::floor(std::log10(l)));
    auto& m = decade_max[dec];
    m = std::max(m, r);
  }
  if (decade_max.empty()) throw GridError("check_delta2 grid has no admissible points");
  if (!(out.d1 > 0.0)) {
    out.failed = true;
    out.reason = "D1 <= 0";
    return out;
  }
  if (!std::isfinite(out.d2)) {
    out.failed = true;
    out.reason = "ratio f(2l)/f(l) is unbounded";
    return out;
  }
  // Per-decade maxima that grow monotonically toward a grid end and sit far
  // above the median indicate a ratio that is not bounded.
  std::vector<std::pair<long, double>> dm(decade_max.begin(), decade_max.end());
  if (dm.size() >= 4) {
    std::vector<double> vals;
    for (auto& [k, v] : dm) vals.push_back(v);
    std::vector<double> sorted = vals;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const std::size_t n = vals.size();
    const bool grows_low = vals[0] > vals[1] && vals[1] > vals[2] && vals[0] > 2.0 * median;
    const bool grows_high = vals[n - 1] > vals[n - 2] && vals[n - 2] > vals[n - 3] && vals[n - 1] > 2.0 * median;
    if (grows_low || grows_high) {
      out.failed = true;
      out.reason = "ratio f(2l)/f(l) grows without bound across decades";
      out.witness = std::pow(10.0, static_cast<double>(grows_low ? dm.front().first : dm.back().first));
    }
  }
  return out;
}

bool GrowthReport::all_hold() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const auto& kv) { return kv.second.holds; });
}

std::string GrowthReport::first_failure() const {
  for (const auto& [name, c] : conditions) {
    if (!c.holds) return name;
  }
  return {};
}

namespace {

ConditionResult check_nondecreasing(const std::vector<double>& t, const std::vector<double>& v) {
  ConditionResult out;
  out.margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double scale = std::max({std::abs(v[k]), std::abs(v[k + 1]), 1e-300});
    const double m = (v[k + 1] - v[k]) / scale;
    if (m < out.margin) {
      out.margin = m;
      out.witness = t[k];
    }
  }
  out.holds = out.margin >= -1e-10;
  return out;
}

ConditionResult check_concave(const std::vector<double>& t, const std::vector<double>& v) {
  ConditionResult out;
  out.margin = std::numeric_limits<double>::infinity();
  std::vector<double> slope(t.size() - 1);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) slope[k] = (v[k + 1] - v[k]) / (t[k + 1] - t[k]);
  for (std::size_t k = 0; k + 1 < slope.size(); ++k) {
    const double scale = std::max({std::abs(slope[k]), std::abs(slope[k + 1]), 1e-300});
    const double m = (slope[k] - slope[k + 1]) / scale;
    if (m < out.margin) {
      out.margin = m;
      out.witness = t[k + 1];
    }
  }
  out.holds = out.margin >= -1e-8;
  return out;
}

}  // namespace

GrowthReport check_growth_assumptions(const IndexFunction& phi, const IndexFunction& psi,
                                      const std::vector<double>& grid) {
  const double up = std::min(phi.upper(), psi.upper());
  std::vector<double> t;
  for (double g : grid) {
    if (g > 0.0 && g <= up) t.push_back(g);
  }
  std::sort(t.begin(), t.end());
  if (t.size() < 3) throw GridError("growth check needs at least three grid points in the domain");

  std::vector<double> t_over_phi, phi_over_psi, t_over_psi;
  for (double x : t) {
    const double p = phi.raw(x);
    const double q = psi.raw(x);
    t_over_phi.push_back(x / p);
    phi_over_psi.push_back(p / q);
    t_over_psi.push_back(x / q);
  }

  GrowthReport rep;
  rep.conditions["t/phi nondecreasing"] = check_nondecreasing(t, t_over_phi);
  rep.conditions["phi/psi nondecreasing"] = check_nondecreasing(t, phi_over_psi);
  rep.conditions["t/psi concave"] = check_concave(t, t_over_psi);

  rep.delta2_phi = check_delta2(phi, t);
  rep.delta2_psi = check_delta2(psi, t);
  auto delta2_condition = [](const Delta2Estimate& d) {
    ConditionResult c;
    c.holds = !d.failed && d.d1 > 1.0 && std::isfinite(d.d2);
    c.margin = d.d1 - 1.0;
    c.witness = d.witness;
    return c;
  };
  rep.conditions["phi Delta2 (D1, D2 > 1)"] = delta2_condition(rep.delta2_phi);
  rep.conditions["psi Delta2 (D1, D2 > 1)"] = delta2_condition(rep.delta2_psi);
  rep.indices_phi = extension_indices(phi);
  rep.indices_psi = extension_indices(psi);
  return rep;
}

}  // namespace hslab

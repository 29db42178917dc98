#include "hslab/radial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "hslab/errors.hpp"

namespace hslab {

namespace {

constexpr double kPi = std::numbers::pi;

void check_dimension(int d) {
  if (d < 1 || d > 3) throw DomainError("radial transforms support d in {1, 2, 3}, got " + std::to_string(d));
}

// Limit of the Wynn epsilon table for the partial sums s.
double wynn_epsilon(const std::vector<double>& s) {
  const std::size_t n = s.size();
  if (n < 3) return s.back();
  std::vector<double> prev(n + 1, 0.0), cur(s.begin(), s.end());
  double best = s.back();
  for (std::size_t k = 1; cur.size() >= 2; ++k) {
    std::vector<double> next(cur.size() - 1);
    for (std::size_t j = 0; j + 1 < cur.size(); ++j) {
      const double diff = cur[j + 1] - cur[j];
      if (std::abs(diff) <= 1e-15 * std::max(std::abs(cur[j + 1]), 1e-300)) {
        return (k % 2 == 1) ? cur.back() : best;
      }
      next[j] = prev[j + 1] + 1.0 / diff;
    }
    prev = std::move(cur);
    cur = std::move(next);
    if (k % 2 == 0) {
      if (!std::isfinite(cur.back())) break;
      best = cur.back();
    }
  }
  return best;
}

double panel(const auto& g, double a, double b) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 6, 1e-13, &err);
}

// int_0^inf g by doubling blocks; used for the non-oscillatory r = 0 case.
double integrate_doubling(const auto& g, double atol, int max_panels, const char* what) {
  std::vector<double> sums;
  double s = panel(g, 0.0, 1.0);
  sums.push_back(s);
  double a = 1.0, last = 0.0;
  int quiet = 0;
  for (int k = 0; k < std::min(max_panels, 1000); ++k) {
    const double piece = panel(g, a, 2.0 * a);
    s += piece;
    sums.push_back(s);
    a *= 2.0;
    if (std::abs(piece) <= atol) {
      if (++quiet >= 4) return s;
    } else {
      quiet = 0;
    }
    if (sums.size() > 24) sums.erase(sums.begin());
    const double acc = wynn_epsilon(sums);
    if (k >= 6 && std::abs(acc - last) <= std::max(1e-10 * std::abs(acc), atol)) return acc;
    last = acc;
    if (a > 1e150) break;
  }
  throw QuadratureError(std::string("integral did not converge: ") + what);
}

// Exact transform of a piecewise-linear profile after integration by parts.
// F_1(r) = 2 v_m sin(r t_m)/r - (2/r^2) sum_j s_j (cos(r a_j) - cos(r b_j))
// over segments [a_j, b_j] with slope s_j; F_3 = -(2 pi / r) F_1'. Small r
// is left to quadrature because of cancellation.
std::optional<double> table_transform(const std::vector<double>& tr, const std::vector<double>& tv, int d,
                                      double r) {
  if (d == 2 || r * tr.back() < 1e-2) return std::nullopt;
  std::vector<double> t(tr), v(tv);
  if (t.front() > 0.0) {
    t.insert(t.begin(), 0.0);
    v.insert(v.begin(), v.front());
  }
  const double tm = t.back(), vm = v.back();
  double sum = 0.0, dsum = 0.0;
  for (std::size_t j = 1; j < t.size(); ++j) {
    const double a = t[j - 1], b = t[j];
    const double slope = (v[j] - v[j - 1]) / (b - a);
    sum += slope * (std::cos(r * a) - std::cos(r * b));
    dsum += slope * (-a * std::sin(r * a) + b * std::sin(r * b));
  }
  const double r2 = r * r;
  if (d == 1) return 2.0 * vm * std::sin(r * tm) / r - 2.0 / r2 * sum;
  const double dF1 = 2.0 * vm * (tm * std::cos(r * tm) / r - std::sin(r * tm) / r2) + 4.0 / (r2 * r) * sum -
                     2.0 / r2 * dsum;
  return -2.0 * kPi / r * dF1;
}

}  // namespace

RadialProfile RadialProfile::gaussian() {
  RadialProfile p;
  p.family_ = Family::gaussian;
  return p;
}

RadialProfile RadialProfile::exponential() {
  RadialProfile p;
  p.family_ = Family::exponential;
  return p;
}

RadialProfile RadialProfile::matern(double nu, double length) {
  if (!(nu > 0.0) || !(length > 0.0)) throw DomainError("matern needs nu > 0 and length > 0");
  RadialProfile p;
  p.family_ = Family::matern;
  p.p0_ = nu;
  p.p1_ = length;
  return p;
}

RadialProfile RadialProfile::power_decay(double k) {
  if (!(k > 0.0)) throw DomainError("power_decay needs k > 0");
  RadialProfile p;
  p.family_ = Family::power_decay;
  p.p0_ = k;
  return p;
}

RadialProfile RadialProfile::table(std::vector<double> r, std::vector<double> values) {
  if (r.size() != values.size() || r.size() < 2) throw DomainError("table profile needs >= 2 matching nodes");
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (!(r[i] > r[i - 1])) throw DomainError("table profile nodes must be strictly increasing");
  }
  if (r.front() < 0.0) throw DomainError("table profile nodes must be nonnegative");
  RadialProfile p;
  p.family_ = Family::table;
  p.tr_ = std::make_shared<const std::vector<double>>(std::move(r));
  p.tv_ = std::make_shared<const std::vector<double>>(std::move(values));
  return p;
}

RadialProfile RadialProfile::identity() {
  RadialProfile p;
  p.family_ = Family::identity;
  return p;
}

RadialProfile RadialProfile::callable(std::string name, std::function<double(double)> fn) {
  if (!fn) throw DomainError("callable profile needs a function");
  RadialProfile p;
  p.family_ = Family::callable;
  p.fn_ = std::make_shared<const std::function<double(double)>>(std::move(fn));
  p.name_ = std::move(name);
  return p;
}

RadialProfile RadialProfile::dilate(double c) const {
  if (!(c > 0.0)) throw DomainError("dilation must be positive");
  RadialProfile p = *this;
  p.c_ *= c;
  return p;
}

double RadialProfile::base(double r) const {
  switch (family_) {
    case Family::gaussian:
      return std::exp(-0.5 * r * r);
    case Family::exponential:
      return std::exp(-r);
    case Family::matern: {
      const double x = std::sqrt(2.0 * p0_) * r / p1_;
      if (x < 1e-12) return 1.0;
      if (x > 700.0) return 0.0;
      return std::pow(2.0, 1.0 - p0_) / std::tgamma(p0_) * std::pow(x, p0_) * boost::math::cyl_bessel_k(p0_, x);
    }
    case Family::power_decay:
      return std::pow(1.0 + r, -p0_);
    case Family::table: {
      const auto& tr = *tr_;
      const auto& tv = *tv_;
      if (r <= tr.front()) return tv.front();
      if (r >= tr.back()) return r == tr.back() ? tv.back() : 0.0;
      const auto it = std::upper_bound(tr.begin(), tr.end(), r);
      const std::size_t j = static_cast<std::size_t>(it - tr.begin());
      const double w = (r - tr[j - 1]) / (tr[j] - tr[j - 1]);
      return (1.0 - w) * tv[j - 1] + w * tv[j];
    }
    case Family::identity:
      throw DomainError("identity profile has no pointwise values");
    case Family::callable:
      return (*fn_)(r);
  }
  return 0.0;
}

double RadialProfile::operator()(double r) const {
  if (!(r >= 0.0)) throw DomainError("radial profile evaluated at negative r");
  return base(c_ * r);
}

std::string RadialProfile::describe() const {
  std::ostringstream os;
  switch (family_) {
    case Family::gaussian: os << "gaussian"; break;
    case Family::exponential: os << "exponential"; break;
    case Family::matern: os << "matern(nu=" << p0_ << ",l=" << p1_ << ")"; break;
    case Family::power_decay: os << "power_decay(k=" << p0_ << ")"; break;
    case Family::table: os << "table(" << tr_->size() << ")"; break;
    case Family::identity: os << "identity"; break;
    case Family::callable: os << name_; break;
  }
  if (c_ != 1.0) os << "[c=" << c_ << "]";
  return os.str();
}

std::optional<double> RadialProfile::closed_transform(int d, double r) const {
  check_dimension(d);
  if (!(r >= 0.0)) throw DomainError("transform evaluated at negative r");
  const double w = r / c_;
  const double scale = std::pow(c_, -d);
  const double dd = d;
  switch (family_) {
    case Family::gaussian:
      return scale * std::pow(2.0 * kPi, dd / 2.0) * std::exp(-0.5 * w * w);
    case Family::exponential:
      return scale * std::pow(2.0, dd) * std::pow(kPi, (dd - 1.0) / 2.0) * std::tgamma((dd + 1.0) / 2.0) *
             std::pow(1.0 + w * w, -(dd + 1.0) / 2.0);
    case Family::matern: {
      const double nu = p0_, l = p1_;
      const double lead = std::pow(2.0 * std::sqrt(kPi), dd) * std::tgamma(nu + dd / 2.0) * std::pow(2.0 * nu, nu) /
                          (std::tgamma(nu) * std::pow(l, 2.0 * nu));
      return scale * lead * std::pow(2.0 * nu / (l * l) + w * w, -(nu + dd / 2.0));
    }
    case Family::identity:
      return 1.0;
    case Family::table: {
      const auto v = table_transform(*tr_, *tv_, d, w);
      if (!v) return std::nullopt;
      return scale * *v;
    }
    case Family::power_decay:
    case Family::callable:
      return std::nullopt;
  }
  return std::nullopt;
}

double sphere_area(int d) {
  return 2.0 * std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0);
}

double ball_volume(int d) {
  return std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

double radial_l1_norm(const RadialProfile& f, int d) {
  check_dimension(d);
  if (f.family() == RadialProfile::Family::identity) throw DomainError("identity profile is not integrable");
  const double S = sphere_area(d);
  auto g = [&](double t) { return S * std::abs(f(t)) * std::pow(t, d - 1); };
  return integrate_doubling(g, 1e-300, 1000, "L1 norm");
}

double hankel_transform(const RadialProfile& f, int d, double r, const HankelOptions& opt) {
  check_dimension(d);
  if (!(r >= 0.0)) throw DomainError("transform evaluated at negative r");
  if (f.family() == RadialProfile::Family::identity) return 1.0;
  const double l1 = radial_l1_norm(f, d);
  const double atol = opt.atol_rel * l1;
  if (r == 0.0) {
    const double S = sphere_area(d);
    auto g = [&](double t) { return S * f(t) * std::pow(t, d - 1); };
    return integrate_doubling(g, atol, opt.max_panels, "hankel r=0");
  }
  auto g = [&](double t) -> double {
    const double v = f(t);
    if (v == 0.0) return 0.0;
    switch (d) {
      case 1:
        return 2.0 * v * std::cos(r * t);
      case 2:
        return 2.0 * kPi * v * t * boost::math::cyl_bessel_j(0, r * t);
      default: {
        const double x = r * t;
        const double sinc = x < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
        return 4.0 * kPi * v * t * t * sinc;
      }
    }
  };
  // Half-period panels, each split into at most 64 pieces of width <= 1.
  const double h = kPi / r;
  const int split = static_cast<int>(std::min(64.0, std::ceil(h)));
  std::vector<double> sums;
  double s = 0.0, last = std::numeric_limits<double>::quiet_NaN();
  double prev_piece = std::numeric_limits<double>::infinity(), max_piece = 0.0;
  double prev_signed = 0.0;
  int quiet = 0, stable = 0, shrinking = 0, alternating = 0;
  for (int k = 0; k < opt.max_panels; ++k) {
    double piece = 0.0;
    for (int j = 0; j < split; ++j) piece += panel(g, (k + double(j) / split) * h, (k + double(j + 1) / split) * h);
    s += piece;
    if (std::abs(piece) <= 1e-3 * atol) {
      if (++quiet >= 8) return s;
    } else {
      quiet = 0;
    }
    sums.push_back(s);
    if (sums.size() > 30) sums.erase(sums.begin());
    max_piece = std::max(max_piece, std::abs(piece));
    shrinking = std::abs(piece) <= prev_piece * (1.0 + 1e-12) ? shrinking + 1 : 0;
    alternating = piece * prev_signed < 0.0 ? alternating + 1 : 0;
    prev_signed = piece;
    // A long run of alternating, shrinking pieces is the regime Wynn handles well.
    const bool decaying = (shrinking >= 3 && std::abs(piece) <= 0.1 * max_piece) ||
                          (shrinking >= 12 && alternating >= 12) || std::abs(piece) <= atol;
    prev_piece = std::abs(piece);
    const double acc = wynn_epsilon(sums);
    if (k >= 8 && decaying && std::abs(acc - last) <= std::max(0.1 * opt.rtol * std::abs(acc), atol)) {
      if (++stable >= 3) return acc;
    } else {
      stable = 0;
    }
    last = acc;
  }
  throw QuadratureError("Hankel transform of " + f.describe() + " at r=" + std::to_string(r) +
                        " did not converge in " + std::to_string(opt.max_panels) + " panels");
}

double fourier_radial(const RadialProfile& f, int d, double r) {
  if (auto v = f.closed_transform(d, r)) return *v;
  return hankel_transform(f, d, r);
}

}  // namespace hslab

#include "hslab/spectral_model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "hslab/csv.hpp"
#include "hslab/errors.hpp"
#include "hslab/grid.hpp"

namespace hslab {

EigenSpec EigenSpec::power(double decay) {
  if (!(decay > 0.0)) throw DomainError("eigenvalue decay exponent must be positive");
  EigenSpec s;
  s.kind = Kind::power;
  s.decay = decay;
  return s;
}

EigenSpec EigenSpec::induced(IndexFunction psi, IndexFunction s) {
  EigenSpec e;
  e.kind = Kind::induced;
  e.psi = std::move(psi);
  e.s = std::move(s);
  return e;
}

EigenSpec EigenSpec::explicit_values(std::vector<double> values) {
  EigenSpec e;
  e.kind = Kind::values;
  e.values = std::move(values);
  return e;
}

double EigenSpec::law(std::size_t i) const {
  switch (kind) {
    case Kind::power:
      return std::pow(static_cast<double>(i), -decay);
    case Kind::induced:
      return psi->inverse(1.0 / s->raw(static_cast<double>(i)));
    case Kind::values:
      return i >= 1 && i <= values.size() ? values[i - 1] : std::numeric_limits<double>::quiet_NaN();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

double jacobi_b(double gamma, std::size_t k) {
  if (gamma == 0.0) return k == 1 ? std::numbers::sqrt2 / 2.0 : 0.5;
  const double kk = static_cast<double>(k);
  return std::sqrt(kk * (kk + 2.0 * gamma - 1.0) / (4.0 * (kk + gamma) * (kk + gamma - 1.0)));
}

}  // namespace

QuadratureRule gegenbauer_gauss(double gamma, std::size_t count) {
  if (count < 1) throw DomainError("quadrature needs at least one node");
  if (!(gamma >= 0.0)) throw DomainError("Gegenbauer parameter must be >= 0");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(count > 1 ? count - 1 : 0));
  for (Eigen::Index k = 0; k < sub.size(); ++k) sub(k) = jacobi_b(gamma, static_cast<std::size_t>(k + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw CertificationError("Golub-Welsch eigensolver failed");
  QuadratureRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    rule.nodes[j] = es.eigenvalues()(static_cast<Eigen::Index>(j));
    const double v = es.eigenvectors()(0, static_cast<Eigen::Index>(j));
    rule.weights[j] = v * v;
  }
  return rule;
}

SpectralModel SpectralModel::build(BasisFamily family, std::size_t n_terms, const EigenSpec& spec,
                                   const ModelOptions& options) {
  if (n_terms < 1) throw DomainError("truncation level N must be >= 1");
  if (family == BasisFamily::gegenbauer && !(options.gamma >= 0.0)) {
    throw DomainError("Gegenbauer parameter must be >= 0");
  }
  if (spec.kind == EigenSpec::Kind::values && spec.values.size() < n_terms) {
    throw DomainError("explicit eigenvalue list shorter than N");
  }
  SpectralModel m;
  m.family_ = family;
  m.gamma_ = family == BasisFamily::gegenbauer ? options.gamma : 0.0;
  m.pairing_ = family == BasisFamily::trigonometric ? options.pairing : Pairing::per_function;
  m.spec_ = spec;
  m.mu_.resize(n_terms);
  for (std::size_t i = 0; i < n_terms; ++i) {
    std::size_t law_index = i + 1;
    if (m.pairing_ == Pairing::stationary) law_index = (i + 1) / 2 + 1;
    m.mu_[i] = spec.law(law_index);
  }
  for (std::size_t i = 0; i < n_terms; ++i) {
    if (!(m.mu_[i] > 0.0) || !std::isfinite(m.mu_[i])) {
      throw DomainError("eigenvalue " + std::to_string(i + 1) + " is not positive and finite");
    }
    if (i > 0 && m.mu_[i] > m.mu_[i - 1] * (1.0 + 1e-12)) {
      throw DomainError("eigenvalues must be nonincreasing (index " + std::to_string(i + 1) + ")");
    }
  }
  if (family == BasisFamily::gegenbauer) {
    m.b_.resize(n_terms + 1);
    m.b_[0] = 0.0;
    for (std::size_t k = 1; k <= n_terms; ++k) m.b_[k] = jacobi_b(m.gamma_, k);
    m.declared_s_ = IndexFunction::power(2.0 * m.gamma_ + 1.0);
  } else {
    m.declared_s_ = IndexFunction::power(1.0);
  }
  if (options.certify) m.certify();
  return m;
}

void SpectralModel::certify() {
  const std::size_t n = size();
  QuadratureRule rule;
  if (family_ == BasisFamily::gegenbauer) {
    rule = gegenbauer_gauss(gamma_, n + 16);
  } else {
    const std::size_t count = 2 * n + 2;
    rule.nodes = linspace(0.0, 2.0 * std::numbers::pi, count + 1);
    rule.nodes.pop_back();
    rule.weights.assign(count, 1.0 / static_cast<double>(count));
  }
  const Eigen::MatrixXd f = features(rule.nodes);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), static_cast<Eigen::Index>(rule.weights.size()));
  const Eigen::MatrixXd g = f.transpose() * w.asDiagonal() * f;
  const Eigen::Index nn = static_cast<Eigen::Index>(n);
  ortho_error_ = (g - Eigen::MatrixXd::Identity(nn, nn)).cwiseAbs().maxCoeff();
  if (!(ortho_error_ <= kOrthonormalTol)) {
    throw CertificationError("basis orthonormality certification failed: max |G - I| = " +
                             std::to_string(ortho_error_));
  }
}

double SpectralModel::domain_lo() const { return family_ == BasisFamily::gegenbauer ? -1.0 : 0.0; }
double SpectralModel::domain_hi() const {
  return family_ == BasisFamily::gegenbauer ? 1.0 : 2.0 * std::numbers::pi;
}

std::string SpectralModel::describe() const {
  std::ostringstream os;
  if (family_ == BasisFamily::gegenbauer) {
    os << "gegenbauer(gamma=" << gamma_ << ")";
  } else {
    os << "trigonometric" << (pairing_ == Pairing::stationary ? "(stationary)" : "");
  }
  os << " N=" << size();
  return os.str();
}

void SpectralModel::basis(double x, double* out, std::size_t n) const {
  if (n == 0) return;
  if (family_ == BasisFamily::trigonometric) {
    out[0] = 1.0;
    const double c1 = std::cos(x), s1 = std::sin(x);
    double c = 1.0, s = 0.0;
    // angle addition recurrence, renormalized every 64 steps against drift
    for (std::size_t i = 1, k = 1; i < n; ++k) {
      const double cn = c * c1 - s * s1;
      const double sn = s * c1 + c * s1;
      c = cn;
      s = sn;
      if (k % 64 == 0) {
        c = std::cos(static_cast<double>(k) * x);
        s = std::sin(static_cast<double>(k) * x);
      }
      out[i++] = std::numbers::sqrt2 * c;
      if (i < n) out[i++] = std::numbers::sqrt2 * s;
    }
    return;
  }
  out[0] = 1.0;
  if (n == 1) return;
  out[1] = x / b_[1];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    out[k + 1] = (x * out[k] - b_[k] * out[k - 1]) / b_[k + 1];
  }
}

std::vector<double> SpectralModel::basis(double x) const { return basis(x, size()); }

std::vector<double> SpectralModel::basis(double x, std::size_t n) const {
  if (n > size()) throw DomainError("basis request beyond the truncation level");
  std::vector<double> out(n);
  basis(x, out.data(), n);
  return out;
}

Eigen::MatrixXd SpectralModel::features(const std::vector<double>& xs) const {
  const std::size_t n = size();
  // fill column-major transpose then transpose once: rows stay contiguous per point
  Eigen::MatrixXd ft(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) basis(xs[j], ft.col(static_cast<Eigen::Index>(j)).data(), n);
  return ft.transpose();
}

double SpectralModel::kernel(double x, double y) const {
  const auto ex = basis(x);
  const auto ey = basis(y);
  double acc = 0.0;
  for (std::size_t i = 0; i < size(); ++i) acc += mu_[i] * ex[i] * ey[i];
  return acc;
}

Eigen::MatrixXd SpectralModel::gram(const std::vector<double>& xs) const {
  const Eigen::MatrixXd f = features(xs);
  const Eigen::Map<const Eigen::VectorXd> mu(mu_.data(), static_cast<Eigen::Index>(mu_.size()));
  const Eigen::MatrixXd scaled = f * mu.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd k(xs.size(), xs.size());
  k.setZero();
  k.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  return k.selfadjointView<Eigen::Lower>();
}

double SpectralModel::sample(Rng& rng) const {
  if (family_ == BasisFamily::trigonometric) {
    return std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  }
  std::uniform_real_distribution<double> theta(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double t = theta(rng);
    if (gamma_ == 0.0 || u(rng) <= std::pow(std::sin(t), 2.0 * gamma_)) return std::cos(t);
  }
}

std::vector<double> SpectralModel::sample(Rng& rng, std::size_t n) const {
  std::vector<double> out(n);
  for (auto& x : out) x = sample(rng);
  return out;
}

std::vector<double> SpectralModel::grid(std::size_t count) const { return linspace(domain_lo(), domain_hi(), count); }

TailEstimate SpectralModel::tail(const IndexFunction& f) const {
  TailEstimate out;
  for (double m : mu_) out.head += f.raw(m);
  if (spec_.kind == EigenSpec::Kind::values) return out;

  auto g = [&](double i) {
    double law;
    if (spec_.kind == EigenSpec::Kind::power) {
      law = std::pow(i, -spec_.decay);
    } else {
      law = spec_.psi->inverse(1.0 / spec_.s->raw(i));
    }
    return f.raw(law);
  };
  // stationary pairs share one eigenvalue: e_i uses law(floor(i/2)+1)
  auto law_index = [&](double i) { return pairing_ == Pairing::stationary ? std::floor(i / 2.0) + 1.0 : i; };

  // block sums over [a, 2a) with Simpson's rule in i
  double a = static_cast<double>(size()) + 1.0;
  double prev = -1.0;
  for (int k = 0; k < 60; ++k) {
    const double b = 2.0 * a;
    const double block = (b - a) * (g(law_index(a)) + 4.0 * g(law_index(0.5 * (a + b))) + g(law_index(b))) / 6.0;
    if (!std::isfinite(block)) {
      out.tail = std::numeric_limits<double>::infinity();
      return out;
    }
    out.tail += block;
    if (prev > 0.0 && k >= 4) {
      const double r = block / prev;
      if (r >= 1.0 - 1e-9) {
        out.tail = std::numeric_limits<double>::infinity();
        return out;
      }
      if (block < 1e-17 * out.tail || k == 59) {
        out.tail += block * r / (1.0 - r);
        return out;
      }
    }
    prev = block;
    a = b;
  }
  return out;
}

TargetSpec TargetSpec::from_coefficients(const SpectralModel& model, const IndexFunction& phi, std::vector<double> a) {
  if (a.size() > model.size()) throw DomainError("target has more coefficients than the model");
  a.resize(model.size(), 0.0);
  std::vector<double> c(a.size());
  double n2 = 0.0, l2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double p = phi(model.mu(i));
    if (!(p >= 0.0)) throw DomainError("phi(mu_i) must be nonnegative");
    c[i] = a[i] * std::sqrt(p);
    n2 += a[i] * a[i];
    l2 += c[i] * c[i];
  }
  TargetSpec t(std::move(a), std::move(c), phi);
  t.norm_phi_ = std::sqrt(n2);
  t.norm_l2_ = std::sqrt(l2);
  double sup = 0.0;
  for (double x : default_x_grid(model)) sup = std::max(sup, std::abs(t(model, x)));
  t.norm_sup_ = sup;
  return t;
}

TargetSpec TargetSpec::power_decay(const SpectralModel& model, const IndexFunction& phi, double exponent,
                                   double norm) {
  std::vector<double> a(model.size());
  double n2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::pow(static_cast<double>(i + 1), -exponent);
    n2 += a[i] * a[i];
  }
  const double scale = norm / std::sqrt(n2);
  for (auto& v : a) v *= scale;
  return from_coefficients(model, phi, std::move(a));
}

TargetSpec TargetSpec::random(const SpectralModel& model, const IndexFunction& phi, Rng& rng, double norm) {
  std::normal_distribution<double> nd;
  std::vector<double> a(model.size());
  double n2 = 0.0;
  for (auto& v : a) {
    v = nd(rng);
    n2 += v * v;
  }
  const double scale = norm / std::sqrt(n2);
  for (auto& v : a) v *= scale;
  return from_coefficients(model, phi, std::move(a));
}

double TargetSpec::operator()(const SpectralModel& model, double x) const {
  const auto e = model.basis(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < c_.size(); ++i) acc += c_[i] * e[i];
  return acc;
}

Dataset draw_dataset(const SpectralModel& model, const TargetSpec& target, std::size_t n, double sigma,
                     std::uint64_t seed) {
  if (n < 1) throw DomainError("dataset size must be >= 1");
  if (!(sigma >= 0.0)) throw DomainError("noise level must be >= 0");
  Rng rng(seed);
  Dataset d;
  d.sigma = sigma;
  d.L = sigma;
  d.seed = seed;
  d.x = model.sample(rng, n);
  const Eigen::MatrixXd f = model.features(d.x);
  const Eigen::Map<const Eigen::VectorXd> c(target.coefficients().data(),
                                            static_cast<Eigen::Index>(target.coefficients().size()));
  const Eigen::VectorXd clean = f * c;
  std::normal_distribution<double> nd(0.0, 1.0);
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.y[i] = clean(static_cast<Eigen::Index>(i)) + sigma * nd(rng);
  return d;
}

void write_dataset_csv(std::ostream& out, const Dataset& d) {
  out << "x,y\n";
  for (std::size_t i = 0; i < d.size(); ++i) write_csv_row(out, {d.x[i], d.y[i]});
}

Dataset read_dataset_csv(std::istream& in) {
  const auto t = read_csv(in);
  Dataset d;
  d.x = t.column_values("x");
  d.y = t.column_values("y");
  return d;
}

double hilbert_norm(const SpectralModel& model, const std::vector<double>& coeffs, const IndexFunction& f) {
  if (coeffs.size() > model.size()) throw DomainError("more coefficients than basis functions");
  double acc = 0.0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const double v = f(model.mu(i));
    if (!(v > 0.0)) {
      throw DomainError("hilbert_norm: f(mu_" + std::to_string(i + 1) + ") = 0, division undefined");
    }
    acc += coeffs[i] * coeffs[i] / v;
  }
  return std::sqrt(acc);
}

double k_sup_norm(const SpectralModel& model, const std::vector<double>& weights, const std::vector<double>& grid) {
  std::vector<double> e(model.size());
  double best = 0.0;
  for (double x : grid) {
    model.basis(x, e.data(), e.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * e[i] * e[i];
    best = std::max(best, acc);
  }
  return std::sqrt(best);
}

double k_sup_norm(const SpectralModel& model, const IndexFunction& f, const std::vector<double>& grid) {
  std::vector<double> w(model.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = f.raw(model.mu(i));
  return k_sup_norm(model, w, grid);
}

double christoffel(const SpectralModel& model, std::size_t n, const std::vector<double>& grid) {
  if (n > model.size()) throw DomainError("christoffel: n exceeds the truncation level");
  std::vector<double> w(model.size(), 0.0);
  std::fill(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n), 1.0);
  return k_sup_norm(model, w, grid);
}

std::vector<double> default_x_grid(const SpectralModel& model) { return model.grid(4096); }

}  // namespace hslab

#include "hslab/fourier_capacity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hslab/csv.hpp"
#include "hslab/errors.hpp"
#include "hslab/grid.hpp"

namespace hslab {

namespace {

constexpr double kWendlandRadius = 12.76;

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& K) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  return es.eigenvalues();
}

}  // namespace

RadialKernel::RadialKernel(RadialProfile profile, int d) : profile_(std::move(profile)), d_(d) {
  if (d < 1 || d > 3) throw DomainError("radial kernels support d in {1, 2, 3}");
  if (profile_.family() == RadialProfile::Family::identity) {
    throw CertificationError("identity profile is not a kernel");
  }
  closed_ = profile_.closed_transform(d_, 0.0).has_value();
  l1_ = radial_l1_norm(profile_, d_);
  if (!std::isfinite(l1_)) throw CertificationError(profile_.describe() + " is not integrable");
  std::vector<double> test = log_grid(1e-2, 10.0, 25);
  test.insert(test.begin(), 0.0);
  for (double r : test) {
    const double F = fourier(r);
    if (!(F > 0.0)) {
      throw CertificationError(profile_.describe() + " has nonpositive transform " + std::to_string(F) +
                               " at r=" + std::to_string(r));
    }
  }
}

Eigen::MatrixXd RadialKernel::gram(const Eigen::MatrixXd& points) const {
  if (points.cols() != d_) throw DomainError("point dimension does not match the kernel");
  const Eigen::Index m = points.rows();
  Eigen::MatrixXd K(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    K(i, i) = profile_(0.0);
    for (Eigen::Index j = i + 1; j < m; ++j) {
      K(i, j) = K(j, i) = profile_((points.row(i) - points.row(j)).norm());
    }
  }
  return K;
}

double fourier_radial(const RadialKernel& kernel, double r) {
  return kernel.fourier(r);
}

void write_transform_csv(std::ostream& out, const RadialKernel& kernel, const std::vector<double>& r) {
  out << "r,F\n";
  for (double v : r) write_csv_row(out, {v, kernel.fourier(v)});
}

OptSmoothness check_opt_smoothness(const IndexFunction& psi, const IndexFunction& s, const RadialKernel& kernel,
                                   const std::vector<double>& t_grid, double tolerance, bool dilated) {
  if (t_grid.empty()) throw GridError("empty t-grid");
  const auto [lo, hi] = std::minmax_element(t_grid.begin(), t_grid.end());
  if (*lo > 10.0 || *hi < 1e4) throw GridError("t-grid must span at least [10, 1e4]");
  const int d = kernel.dimension();
  OptSmoothness out;
  out.min = std::numeric_limits<double>::infinity();
  out.max = 0.0;
  for (double t : t_grid) {
    const double arg = dilated ? kWendlandRadius * d * std::pow(2.0 * t, 1.0 / d) : std::pow(t, 1.0 / d);
    const double st = s(t);
    const double v = st * psi(kernel.fourier(arg) / st);
    out.t.push_back(t);
    out.values.push_back(v);
    out.min = std::min(out.min, v);
    out.max = std::max(out.max, v);
  }
  out.ratio = out.min > 0.0 ? out.max / out.min : std::numeric_limits<double>::infinity();
  out.pass = out.ratio <= tolerance;
  return out;
}

double min_separation(const Eigen::MatrixXd& points) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      best = std::min(best, (points.row(i) - points.row(j)).norm());
    }
  }
  return best;
}

PointCloud equispaced_cloud(std::size_t n, int d) {
  if (n < 2 || d < 1) throw DomainError("equispaced_cloud needs n >= 2 and d >= 1");
  std::size_t k = 1;
  while (std::pow(double(k), d) < double(n)) ++k;
  PointCloud c;
  c.points.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t idx = i;
    for (int a = 0; a < d; ++a) {
      c.points(static_cast<Eigen::Index>(i), a) = k == 1 ? 0.0 : double(idx % k) / double(k - 1);
      idx /= k;
    }
  }
  c.separation = min_separation(c.points);
  return c;
}

PointCloud halton_cloud(std::size_t n, int d) {
  static constexpr int kBases[] = {2, 3, 5};
  if (d < 1 || d > 3) throw DomainError("halton_cloud supports d in {1, 2, 3}");
  PointCloud c;
  c.points.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) {
      double f = 1.0, v = 0.0;
      for (std::size_t k = i + 1; k > 0; k /= kBases[a]) {
        f /= kBases[a];
        v += f * double(k % kBases[a]);
      }
      c.points(static_cast<Eigen::Index>(i), a) = v;
    }
  }
  c.separation = min_separation(c.points);
  return c;
}

PointCloud random_cloud(std::size_t n, int d, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud c;
  c.points.resize(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < c.points.rows(); ++i) {
    for (int a = 0; a < d; ++a) c.points(i, a) = u(rng);
  }
  c.separation = min_separation(c.points);
  return c;
}

PointCloud read_point_cloud_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error("point cloud CSV: bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw Error("point cloud CSV: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("point cloud CSV is empty");
  PointCloud c;
  c.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t a = 0; a < rows[i].size(); ++a) {
      c.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = rows[i][a];
    }
  }
  c.separation = rows.size() > 1 ? min_separation(c.points) : 0.0;
  return c;
}

double wendland_constant(int d) {
  // M_d and C_d for d = 1, 2, 3; see the header for the closed forms.
  struct Entry {
    double M, C;
  };
  static const std::array<Entry, 3> table = [] {
    std::array<Entry, 3> out{};
    for (int k = 1; k <= 3; ++k) {
      const double g = std::tgamma(k / 2.0 + 1.0);
      const double M = 12.0 * std::pow(std::numbers::pi * g * g / 9.0, 1.0 / (k + 1));
      const double C = std::pow(2.0 * std::numbers::pi, -k / 2.0) / (2.0 * g) *
                       std::pow(M / (std::pow(2.0, 1.5) * kWendlandRadius * k), k);
      out[std::size_t(k - 1)] = {M, C};
    }
    return out;
  }();
  if (d < 1 || d > 3) throw DomainError("Wendland constant is tabulated for d in {1, 2, 3} only");
  return table[d - 1].C;
}

GramBound gram_min_eig_bound(const RadialKernel& kernel, const Eigen::MatrixXd& points) {
  if (points.rows() < 2) throw DomainError("gram_min_eig_bound needs at least two points");
  const int d = kernel.dimension();
  GramBound out;
  out.separation = min_separation(points);
  if (!(out.separation > 0.0)) throw DomainError("duplicate points in cloud");
  const Eigen::MatrixXd K = kernel.gram(points);
  out.observed = symmetric_eigenvalues(K)(0);
  const double q = out.separation / 2.0;
  const double R = kWendlandRadius * d / q;
  const double F = kernel.fourier(R);
  out.bound = F > 0.0 ? wendland_constant(d) * std::pow(R, d) * F : 0.0;
  out.slack = 16.0 * std::numeric_limits<double>::epsilon() * double(points.rows()) * kernel(0.0);
  out.pass = out.observed >= out.bound - out.slack;
  return out;
}

std::vector<double> infer_eigendecay(const IndexFunction& psi, const IndexFunction& s, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = psi.inverse(1.0 / s(double(i + 1)));
  return out;
}

namespace {

EmpiricalComparison finish_comparison(const Eigen::MatrixXd& K, const std::vector<double>& reference) {
  const std::size_t m = static_cast<std::size_t>(K.rows());
  if (reference.size() > m) throw DomainError("reference longer than the sample");
  const Eigen::VectorXd ev = symmetric_eigenvalues(K);
  EmpiricalComparison out;
  out.reference = reference;
  out.min_ratio = std::numeric_limits<double>::infinity();
  out.max_ratio = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double e = ev(static_cast<Eigen::Index>(m - 1 - i)) / double(m);
    const double r = e > 0.0 ? reference[i] / e : std::numeric_limits<double>::infinity();
    out.empirical.push_back(e);
    out.ratios.push_back(r);
    out.min_ratio = std::min(out.min_ratio, r);
    out.max_ratio = std::max(out.max_ratio, r);
  }
  return out;
}

}  // namespace

EmpiricalComparison compare_empirical(const std::function<double(double, double)>& kernel,
                                      const std::function<double(Rng&)>& sampler,
                                      const std::vector<double>& reference, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(m);
  for (auto& v : x) v = sampler(rng);
  Eigen::MatrixXd K(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      K(Eigen::Index(i), Eigen::Index(j)) = K(Eigen::Index(j), Eigen::Index(i)) = kernel(x[i], x[j]);
    }
  }
  return finish_comparison(K, reference);
}

EmpiricalComparison compare_empirical(const SpectralModel& model, const std::vector<double>& reference,
                                      std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  return finish_comparison(model.gram(model.sample(rng, m)), reference);
}

EmpiricalComparison compare_empirical(const SpectralModel& model, std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n > model.size()) throw DomainError("n exceeds the model size");
  std::vector<double> ref(model.eigenvalues().begin(), model.eigenvalues().begin() + std::ptrdiff_t(n));
  return compare_empirical(model, ref, m, seed);
}

double bernstein_width_upper_sq(const SpectralModel& model, const IndexFunction& psi, std::size_t n,
                                double k_psi_sup) {
  if (n < 1 || n > model.size()) throw DomainError("bernstein_width_upper needs 1 <= n <= N");
  const double mu = model.mu(n - 1);
  return k_psi_sup * k_psi_sup * mu / psi(mu);
}

double bernstein_width_upper(const SpectralModel& model, const IndexFunction& psi, std::size_t n,
                             double k_psi_sup) {
  return std::sqrt(bernstein_width_upper_sq(model, psi, n, k_psi_sup));
}

double bernstein_width_lower(const RadialKernel& kernel, std::size_t n) {
  if (n < 1) throw DomainError("bernstein_width_lower needs n >= 1");
  const int d = kernel.dimension();
  return std::sqrt(wendland_constant(d) * kernel.fourier(std::pow(double(n), 1.0 / d)));
}

double bernstein_width_search(const SpectralModel& model, std::size_t subspaces, std::size_t angles,
                              const std::vector<double>& x_grid, Rng& rng) {
  const std::size_t N = model.size();
  const Eigen::MatrixXd F = model.features(x_grid);
  std::normal_distribution<double> g;
  Eigen::ArrayXd inv_mu(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) inv_mu(Eigen::Index(i)) = 1.0 / model.mu(i);
  double best = 0.0;
  for (std::size_t k = 0; k < subspaces; ++k) {
    Eigen::VectorXd u(static_cast<Eigen::Index>(N)), v(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) {
      const double w = std::sqrt(model.mu(i));
      u(Eigen::Index(i)) = g(rng) * w;
      v(Eigen::Index(i)) = g(rng) * w;
    }
    const Eigen::VectorXd fu = F * u, fv = F * v;
    double width = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < angles; ++a) {
      const double th = std::numbers::pi * double(a) / double(angles);
      const double c = std::cos(th), s = std::sin(th);
      const double sup = (c * fu + s * fv).cwiseAbs().maxCoeff();
      const Eigen::ArrayXd z = c * u.array() + s * v.array();
      const double knorm = std::sqrt((z * z * inv_mu).sum());
      width = std::min(width, sup / knorm);
    }
    best = std::max(best, width);
  }
  return best;
}

double interpolation_margin(const SpectralModel& model, const IndexFunction& psi, const std::vector<double>& c) {
  double l2 = 0.0, hk = 0.0, hpsi = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double mu = model.mu(i), c2 = c[i] * c[i];
    l2 += c2;
    hk += c2 / mu;
    hpsi += c2 / psi(mu);
  }
  if (!(hk > 0.0)) throw DomainError("interpolation_margin needs a nonzero function");
  const double x = l2 / hk;
  return x / psi(x) - hpsi / hk;
}

InterpolationCheck interpolation_check(const SpectralModel& model, const IndexFunction& psi, std::size_t draws,
                                       Rng& rng) {
  const std::size_t N = model.size();
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);
  InterpolationCheck out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  std::vector<double> c(N);
  for (std::size_t k = 0; k < draws; ++k) {
    std::fill(c.begin(), c.end(), 0.0);
    // Sparse draws probe near-extremal configurations, dense ones the bulk.
    const bool sparse = k % 2 == 0;
    const double tilt = 2.0 * u(rng);
    const std::size_t active = sparse ? 1 + k % 3 : N;
    for (std::size_t j = 0; j < active; ++j) {
      const std::size_t i = sparse ? pick(rng) : j;
      c[i] = g(rng) * std::pow(model.mu(i), 0.5 * tilt);
    }
    if (std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; })) c[0] = 1.0;
    out.worst_margin = std::min(out.worst_margin, interpolation_margin(model, psi, c));
    ++out.draws;
  }
  return out;
}

HNormCheck hnorm_check(const SpectralModel& model, const IndexFunction& psi, const std::vector<double>& lambdas,
                       const std::vector<double>& x_grid, double k_psi_sup) {
  const Eigen::MatrixXd F = model.features(x_grid);
  const Eigen::ArrayXXd F2 = F.array().square();
  const std::size_t N = model.size();
  HNormCheck out;
  for (double lambda : lambdas) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) w(Eigen::Index(i)) = model.mu(i) / (model.mu(i) + lambda);
    const double lhs = std::sqrt((F2.matrix() * w).maxCoeff());
    const double rhs = k_psi_sup / std::sqrt(psi(lambda));
    const double r = lhs / rhs;
    if (r > out.worst_ratio) {
      out.worst_ratio = r;
      out.worst_lambda = lambda;
    }
  }
  return out;
}

}  // namespace hslab

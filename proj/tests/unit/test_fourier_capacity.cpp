#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "hslab/csv.hpp"
#include "hslab/errors.hpp"
#include "hslab/fourier_capacity.hpp"
#include "hslab/grid.hpp"

using namespace hslab;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite Simpson on [a, b] with n (even) intervals.
template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

SpectralModel legendre_model(std::size_t n, const IndexFunction& psi, const IndexFunction& s) {
  ModelOptions o;
  o.gamma = 0.5;
  return SpectralModel::build(BasisFamily::gegenbauer, n, EigenSpec::induced(psi, s), o);
}

}  // namespace

TEST_CASE("fourier_radial closed forms") {
  SUBCASE("gaussian d=2 at the origin matches a tensor-product integral") {
    const double closed = fourier_radial(RadialProfile::gaussian(), 2, 0.0);
    auto row = [](double x) { return simpson([x](double y) { return std::exp(-0.5 * (x * x + y * y)); }, -12, 12, 400); };
    const double tensor = simpson(row, -12.0, 12.0, 400);
    CHECK(closed == doctest::Approx(2.0 * kPi).epsilon(1e-14));
    CHECK(tensor == doctest::Approx(closed).epsilon(1e-9));
  }
  SUBCASE("exponential d=1 is 2 / (1 + r^2)") {
    for (double r : {0.0, 0.3, 1.0, 4.0, 17.0}) {
      CHECK(fourier_radial(RadialProfile::exponential(), 1, r) == doctest::Approx(2.0 / (1.0 + r * r)).epsilon(1e-14));
      CHECK(hankel_transform(RadialProfile::exponential(), 1, r) == doctest::Approx(2.0 / (1.0 + r * r)).epsilon(1e-8));
    }
  }
  SUBCASE("matern nu=1/2 reduces to the exponential kernel") {
    const auto m = RadialProfile::matern(0.5, 1.0);
    for (double r : {0.0, 0.5, 2.0}) {
      CHECK(m(r) == doctest::Approx(std::exp(-r)).epsilon(1e-12));
      for (int d = 1; d <= 3; ++d) {
        CHECK(fourier_radial(m, d, r) == doctest::Approx(fourier_radial(RadialProfile::exponential(), d, r)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("closed forms agree with Hankel quadrature on [0, 50]") {
  const std::vector<RadialProfile> profiles = {RadialProfile::gaussian(), RadialProfile::exponential(),
                                               RadialProfile::matern(1.0), RadialProfile::matern(2.5, 0.7).dilate(1.3)};
  const auto rs = linspace(0.0, 50.0, 26);
  for (const auto& p : profiles) {
    for (int d = 1; d <= 3; ++d) {
      const double F0 = *p.closed_transform(d, 0.0);
      for (double r : rs) {
        const double c = *p.closed_transform(d, r);
        const double q = hankel_transform(p, d, r);
        INFO(p.describe(), " d=", d, " r=", r);
        // Below 1e-10 F(0) only an absolute comparison is meaningful.
        if (c > 1e-10 * F0) {
          CHECK(std::abs(q - c) <= 1e-5 * c);
        } else {
          CHECK(std::abs(q - c) <= 1e-12 * F0);
        }
      }
    }
  }
}

TEST_CASE("Hankel quadrature without a closed form") {
  const auto pd = RadialProfile::power_decay(3.0);
  // 2 int (1+t)^{-3} cos(r t) dt and 2 pi int t (1+t)^{-3} J0(10 t) dt to 15 digits
  CHECK(hankel_transform(pd, 1, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(hankel_transform(pd, 1, 1.0) == doctest::Approx(0.656622038443573).epsilon(1e-7));
  CHECK(hankel_transform(pd, 1, 10.0) == doctest::Approx(0.0511460983645193).epsilon(1e-7));
  CHECK(hankel_transform(pd, 2, 10.0) == doctest::Approx(0.014937014164224).epsilon(1e-7));
  CHECK(hankel_transform(pd, 2, 0.0) == doctest::Approx(kPi).epsilon(1e-9));

  // F[f(c .)](r) = c^{-d} F[f](r / c)
  const double c = 2.5;
  for (int d = 1; d <= 3; ++d) {
    const auto base = RadialProfile::power_decay(4.5);
    CHECK(hankel_transform(base.dilate(c), d, 3.0) ==
          doctest::Approx(std::pow(c, -d) * hankel_transform(base, d, 3.0 / c)).epsilon(1e-6));
  }

  // A piecewise-linear hat: F_1 = 2 (1 - cos r) / r^2.
  const auto hat = RadialProfile::table({0.0, 1.0}, {1.0, 0.0});
  for (double r : {0.5, 2.0, 7.0}) {
    const double exact = 2.0 * (1.0 - std::cos(r)) / (r * r);
    CHECK(hankel_transform(hat, 1, r) == doctest::Approx(exact).epsilon(1e-6));
    CHECK(*hat.closed_transform(1, r) == doctest::Approx(exact).epsilon(1e-12));
    // F_3 = -(2 pi / r) F_1'
    const double dF1 = 2.0 * std::sin(r) / (r * r) - 4.0 * (1.0 - std::cos(r)) / (r * r * r);
    CHECK(*hat.closed_transform(3, r) == doctest::Approx(-2.0 * kPi / r * dF1).epsilon(1e-12));
    CHECK(hankel_transform(hat, 3, r) == doctest::Approx(-2.0 * kPi / r * dF1).epsilon(1e-6));
  }
  CHECK_FALSE(hat.closed_transform(2, 1.0).has_value());
  CHECK_THROWS_AS(hankel_transform(pd, 4, 1.0), DomainError);
  CHECK_THROWS_AS(hankel_transform(pd, 1, -1.0), DomainError);
}

TEST_CASE("transforms are nonincreasing for the built-in kernels") {
  for (int d = 1; d <= 3; ++d) {
    for (const auto& p : {RadialProfile::gaussian(), RadialProfile::exponential(), RadialProfile::matern(1.5, 0.5)}) {
      const RadialKernel k(p, d);
      double prev = k.fourier(0.0);
      for (double r : linspace(0.0, 30.0, 121)) {
        const double F = k.fourier(r);
        CHECK(F >= 0.0);
        CHECK(F <= prev * (1.0 + 1e-14));
        prev = F;
      }
    }
  }
}

TEST_CASE("RadialKernel certification") {
  CHECK(RadialKernel(RadialProfile::exponential(), 2).has_closed_form());
  CHECK(RadialKernel(RadialProfile::exponential(), 1).l1_norm() == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(RadialKernel(RadialProfile::gaussian(), 3).l1_norm() == doctest::Approx(std::pow(2.0 * kPi, 1.5)).epsilon(1e-9));
  // A box profile has a sign-changing transform.
  CHECK_THROWS_AS(RadialKernel(RadialProfile::table({0.0, 1.0, 1.0 + 1e-9}, {1.0, 1.0, 0.0}), 1), CertificationError);
  CHECK_THROWS_AS(RadialKernel(RadialProfile::identity(), 1), CertificationError);

  std::ostringstream os;
  write_transform_csv(os, RadialKernel(RadialProfile::exponential(), 1), {0.0, 1.0});
  std::istringstream is(os.str());
  const auto t = read_csv(is);
  CHECK(t.header == std::vector<std::string>{"r", "F"});
  CHECK(t.column_values("F")[1] == doctest::Approx(1.0));
}

TEST_CASE("check_opt_smoothness") {
  const auto grid = log_grid(10.0, 1e4, 61);
  const RadialKernel expo(RadialProfile::exponential(), 1);

  SUBCASE("exponential kernel with s = t^2, psi = t^{1/2} is balanced") {
    const auto r = check_opt_smoothness(IndexFunction::power(0.5), IndexFunction::power(2.0), expo, grid);
    // s psi(F/s) = t^2 (2/(1+t^2) / t^2)^{1/2} -> sqrt(2)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid[i];
      CHECK(r.values[i] == doctest::Approx(t * t * std::sqrt(2.0 / (1.0 + t * t) / (t * t))).epsilon(1e-12));
    }
    CHECK(r.pass);
    CHECK(r.ratio < 1.01);
  }
  SUBCASE("identity psi with mismatched decay drifts") {
    const auto r = check_opt_smoothness(IndexFunction::power(1.0), IndexFunction::power(2.0), expo, grid);
    CHECK_FALSE(r.pass);
    // F itself, so two decades of decay per decade of t.
    CHECK(r.values[0] / r.values[20] >= 10.0);
  }
  SUBCASE("psi built as the inverse relation on a table kernel gives 1") {
    std::vector<double> r, v;
    for (double x = 0.0; x <= 30.0; x += 0.05) {
      r.push_back(x);
      v.push_back(std::exp(-x));
    }
    const RadialKernel table(RadialProfile::table(r, v), 1);
    // psi(F(t)/t) = 1/t at every grid point
    std::map<double, double> lookup;
    for (double t : grid) lookup[table.fourier(t) / t] = 1.0 / t;
    const auto psi = IndexFunction::callable("inverse relation", [&](double u) {
      const auto it = lookup.find(u);
      return it == lookup.end() ? std::nan("") : it->second;
    });
    const auto res = check_opt_smoothness(psi, IndexFunction::power(1.0), table, grid);
    CHECK(res.min == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.max == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.pass);
  }
  SUBCASE("dilated form keeps power-law balance") {
    const auto r = check_opt_smoothness(IndexFunction::power(0.5), IndexFunction::power(2.0), expo, grid, 10.0, true);
    CHECK(r.pass);
  }
  CHECK_THROWS_AS(check_opt_smoothness(IndexFunction::power(0.5), IndexFunction::power(2.0), expo, log_grid(100, 1e3, 5)),
                  GridError);
}

TEST_CASE("Wendland constant") {
  CHECK(wendland_constant(1) == doctest::Approx(0.039185).epsilon(1e-4));
  // direct evaluation of the closed form at d = 2
  const double M2 = 12.0 * std::cbrt(kPi / 9.0);
  CHECK(wendland_constant(2) == doctest::Approx(1.0 / (2.0 * kPi) / 2.0 * std::pow(M2 / (std::pow(2.0, 1.5) * 25.52), 2)).epsilon(1e-12));
  CHECK(wendland_constant(3) > 0.0);
  CHECK_THROWS_AS(wendland_constant(4), DomainError);
}

TEST_CASE("gram_min_eig_bound") {
  SUBCASE("two points: kappa(0) - kappa(q)") {
    const RadialKernel k(RadialProfile::exponential(), 1);
    Eigen::MatrixXd p(2, 1);
    p << 0.0, 0.3;
    const auto g = gram_min_eig_bound(k, p);
    CHECK(g.observed == doctest::Approx(1.0 - std::exp(-0.3)).epsilon(1e-12));
    CHECK(g.separation == doctest::Approx(0.3));
    CHECK(g.pass);
  }
  SUBCASE("32 equispaced points, exponential kernel") {
    const RadialKernel k(RadialProfile::exponential(), 1);
    const auto cloud = equispaced_cloud(32, 1);
    CHECK(cloud.separation == doctest::Approx(1.0 / 31));
    const auto g = gram_min_eig_bound(k, cloud.points);
    // dense oracle: tridiagonal inverse structure gives a closed-form check of the matrix
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.gram(cloud.points));
    CHECK(g.observed == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-12));
    CHECK(g.bound > 0.0);
    CHECK(g.observed >= g.bound);
  }
  SUBCASE("near-duplicate points collapse both sides") {
    const RadialKernel k(RadialProfile::exponential(), 2);
    Eigen::MatrixXd p(3, 2);
    p << 0.0, 0.0, 1e-7, 0.0, 0.5, 0.5;
    const auto g = gram_min_eig_bound(k, p);
    CHECK(g.observed < 1e-6);
    CHECK(g.bound < 1e-9);
    CHECK(g.pass);
  }
  SUBCASE("duplicates are rejected") {
    const RadialKernel k(RadialProfile::gaussian(), 2);
    Eigen::MatrixXd p(2, 2);
    p << 0.1, 0.2, 0.1, 0.2;
    CHECK_THROWS_AS(gram_min_eig_bound(k, p), DomainError);
  }
  SUBCASE("random clouds") {
    Rng rng(7);
    for (int d = 1; d <= 3; ++d) {
      for (const auto& prof : {RadialProfile::gaussian(), RadialProfile::exponential(), RadialProfile::matern(1.0, 0.5)}) {
        const RadialKernel k(prof, d);
        for (int c = 0; c < 10; ++c) {
          const auto cloud = random_cloud(24, d, rng);
          const auto g = gram_min_eig_bound(k, cloud.points);
          INFO(prof.describe(), " d=", d, " observed=", g.observed, " bound=", g.bound);
          CHECK(g.pass);
        }
      }
    }
  }
}

TEST_CASE("point clouds") {
  const auto h = halton_cloud(64, 2);
  CHECK(h.points.rows() == 64);
  CHECK(h.points(0, 0) == doctest::Approx(0.5));
  CHECK(h.points(0, 1) == doctest::Approx(1.0 / 3));
  CHECK(h.separation > 0.0);
  const auto e = equispaced_cloud(27, 3);
  CHECK(e.separation == doctest::Approx(0.5));
  std::istringstream is("# cloud\n0,0\n1,0\n0,2\n");
  const auto c = read_point_cloud_csv(is);
  CHECK(c.points.rows() == 3);
  CHECK(c.separation == doctest::Approx(1.0));
  std::istringstream bad("0,0\n1\n");
  CHECK_THROWS_AS(read_point_cloud_csv(bad), Error);
}

TEST_CASE("infer_eigendecay") {
  const auto a = infer_eigendecay(IndexFunction::power(0.5), IndexFunction::power(1.0), 10);
  const auto b = infer_eigendecay(IndexFunction::power(1.0), IndexFunction::power(1.0), 10);
  for (std::size_t i = 0; i < 10; ++i) {
    const double n = double(i + 1);
    CHECK(a[i] == doctest::Approx(1.0 / (n * n)).epsilon(1e-12));
    CHECK(b[i] == doctest::Approx(1.0 / n).epsilon(1e-12));
  }
}

TEST_CASE("compare_empirical") {
  SUBCASE("trigonometric model, mu_i = i^{-2}") {
    const auto model = SpectralModel::build(BasisFamily::trigonometric, 64, EigenSpec::power(2.0));
    const auto r = compare_empirical(model, 16, 512, 11);
    CHECK(r.min_ratio >= 0.5);
    CHECK(r.max_ratio <= 2.0);
  }
  SUBCASE("Legendre model, mu_i = i^{-2}") {
    ModelOptions o;
    o.gamma = 0.5;
    const auto model = SpectralModel::build(BasisFamily::gegenbauer, 64, EigenSpec::power(2.0), o);
    const auto r = compare_empirical(model, 16, 512, 12);
    CHECK(r.min_ratio >= 0.5);
    CHECK(r.max_ratio <= 2.0);
  }
  SUBCASE("generic kernel and sampler") {
    const auto model = SpectralModel::build(BasisFamily::trigonometric, 32, EigenSpec::power(2.0));
    const auto ref = infer_eigendecay(IndexFunction::power(0.5), IndexFunction::power(1.0), 8);
    const auto r = compare_empirical([&](double x, double y) { return model.kernel(x, y); },
                                     [&](Rng& g) { return model.sample(g); }, ref, 256, 3);
    CHECK(r.empirical.size() == 8);
    CHECK(r.min_ratio >= 0.25);
    CHECK(r.max_ratio <= 4.0);
    for (std::size_t i = 1; i < 8; ++i) CHECK(r.empirical[i] <= r.empirical[i - 1]);
  }
}

TEST_CASE("Bernstein widths") {
  SUBCASE("single-mode model") {
    const auto model = SpectralModel::build(BasisFamily::trigonometric, 1, EigenSpec::explicit_values({0.25}));
    const auto psi = IndexFunction::power(0.5);
    const double kpsi = k_sup_norm(model, psi, default_x_grid(model));
    CHECK(kpsi == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(bernstein_width_upper_sq(model, psi, 1, kpsi) == doctest::Approx(kpsi * kpsi * 0.25 / 0.5));
    CHECK(bernstein_width_upper(model, psi, 1, kpsi) == doctest::Approx(std::sqrt(0.25)));
  }
  SUBCASE("random two-dimensional subspaces never beat the upper bound") {
    const auto psi = IndexFunction::power(0.5);
    for (auto fam : {BasisFamily::trigonometric, BasisFamily::gegenbauer}) {
      const auto model = SpectralModel::build(fam, 24, EigenSpec::power(2.0));
      const auto grid = default_x_grid(model);
      const double kpsi = k_sup_norm(model, psi, grid);
      Rng rng(5);
      const double found = bernstein_width_search(model, 200, 64, grid, rng);
      CHECK(found > 0.0);
      CHECK(found <= bernstein_width_upper(model, psi, 2, kpsi));
    }
  }
  SUBCASE("consistent configuration: stable upper/lower ratio") {
    // Legendre basis (s = t^2), psi = t^{0.6}: mu_n = n^{-10/3}, matched by a
    // Matern kernel with F(r) ~ r^{-4/3}, i.e. nu = 1/6 in one dimension.
    const auto psi = IndexFunction::power(0.6);
    const auto model = legendre_model(96, psi, IndexFunction::power(2.0));
    const double kpsi = k_sup_norm(model, psi, default_x_grid(model));
    const RadialKernel kernel(RadialProfile::matern(1.0 / 6.0), 1);
    double lo = 1e300, hi = 0.0;
    for (std::size_t n : {4, 8, 16, 32, 64}) {
      const double up = bernstein_width_upper(model, psi, n, kpsi);
      const double low = bernstein_width_lower(kernel, n);
      CHECK(up >= low);
      lo = std::min(lo, up / low);
      hi = std::max(hi, up / low);
    }
    CHECK(hi / lo < 2.0);
  }
}

TEST_CASE("interpolation_check") {
  const auto psi = IndexFunction::power(0.5);
  const auto model = SpectralModel::build(BasisFamily::trigonometric, 32, EigenSpec::power(2.0));
  SUBCASE("single mode is an equality") {
    for (std::size_t i : {0, 5, 31}) {
      std::vector<double> c(32, 0.0);
      c[i] = 1.7;
      CHECK(std::abs(interpolation_margin(model, psi, c)) <= 1e-12);
    }
  }
  SUBCASE("two modes are strict") {
    std::vector<double> c(32, 0.0);
    c[1] = 1.0;
    c[6] = 0.5;
    // direct: l2 = 1.25, K = 4 + 0.25 * 49, psi-norm = 2 + 0.25 * 7
    const double K = 4.0 + 0.25 * 49.0, P = 2.0 + 0.25 * 7.0, x = 1.25 / K;
    CHECK(interpolation_margin(model, psi, c) == doctest::Approx(std::sqrt(x) - P / K).epsilon(1e-12));
    CHECK(interpolation_margin(model, psi, c) > 1e-6);
  }
  SUBCASE("identity psi gives equality") {
    Rng rng(1);
    const auto r = interpolation_check(model, IndexFunction::power(1.0), 200, rng);
    CHECK(std::abs(r.worst_margin) <= 1e-12);
  }
  SUBCASE("random draws") {
    Rng rng(2);
    const auto r = interpolation_check(model, psi, 1000, rng);
    CHECK(r.draws == 1000);
    CHECK(r.worst_margin >= -1e-10);
  }
}

TEST_CASE("hnorm_check") {
  const auto psi = IndexFunction::power(0.5);
  for (auto fam : {BasisFamily::trigonometric, BasisFamily::gegenbauer}) {
    const auto model = SpectralModel::build(fam, 48, EigenSpec::power(2.5));
    const auto grid = default_x_grid(model);
    const double kpsi = k_sup_norm(model, psi, grid);
    const auto r = hnorm_check(model, psi, log_grid(1e-6, 1.0, 40), grid, kpsi);
    CHECK(r.worst_ratio > 0.0);
    CHECK(r.worst_ratio <= 1.0 + 1e-12);
  }
}

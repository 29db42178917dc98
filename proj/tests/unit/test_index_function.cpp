#include <cmath>

#include "doctest.h"
#include "hslab/errors.hpp"
#include "hslab/grid.hpp"
#include "hslab/index_function.hpp"

using namespace hslab;

namespace {

IndexFunction min_t_t2() {
  return IndexFunction::callable("min(t,t^2)", [](double t) { return std::min(t, t * t); });
}

}  // namespace

TEST_CASE("eval of closed-form families") {
  CHECK(IndexFunction::power(2.0)(3.0) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(IndexFunction::power(1.0)(0.5) == 0.5);
  CHECK(IndexFunction::power_log(0.5, 1.0)(1.0) == doctest::Approx(1.0));
}

TEST_CASE("eval rejects points outside the domain") {
  const auto f = IndexFunction::power(0.5, 1.0);
  CHECK_THROWS_AS(f(0.0), DomainError);
  CHECK_THROWS_AS(f(-1.0), DomainError);
  CHECK_THROWS_AS(f(1.5), DomainError);
  CHECK_NOTHROW(f(1.0));
}

TEST_CASE("inverse") {
  CHECK(IndexFunction::power(2.0).inverse(4.0) == doctest::Approx(2.0).epsilon(1e-15));

  SUBCASE("power 5/8 against the closed form and against bisection") {
    const double y = 1.0 / 1024.0;
    const double expected = std::pow(1024.0, -8.0 / 5.0);
    const auto f = IndexFunction::power(5.0 / 8.0);
    CHECK(f.inverse(y) == doctest::Approx(expected).epsilon(1e-13));
    // same function hidden behind a callable takes the bisection path
    const auto g = IndexFunction::callable("t^(5/8)", [](double t) { return std::pow(t, 0.625); });
    CHECK(std::abs(g.inverse(y) - expected) <= 1e-11 * expected);
  }

  SUBCASE("power-log round trip") {
    const auto f = IndexFunction::power_log(0.5, 1.0, 0.25);
    const double y = f(0.1);
    const double t = f.inverse(y);
    CHECK(std::abs(f(t) - y) <= 1e-12 * y);
    CHECK(t == doctest::Approx(0.1).epsilon(1e-10));
  }

  SUBCASE("range errors") {
    const auto f = IndexFunction::power(2.0, 1.0);
    CHECK_THROWS_AS(f.inverse(0.0), RangeError);
    CHECK_THROWS_AS(f.inverse(2.0), RangeError);
    const auto g = IndexFunction::power_log(0.5, 1.0, 0.25);
    CHECK_THROWS_AS(g.inverse(10.0), RangeError);
  }

  SUBCASE("non-monotone bracket is refused") {
    // t^(1/2)(1+|ln t|) has a local maximum at t = e^{-1}
    const auto f = IndexFunction::power_log(0.5, 1.0, 1.0);
    CHECK_THROWS_AS(f.inverse(f(0.05)), NonMonotoneError);
  }
}

TEST_CASE("round trip over a range of values") {
  const auto table = IndexFunction::table({1e-6, 1e-3, 1e-1, 1.0}, {1e-4, 1e-2, 0.3, 1.0});
  const std::vector<IndexFunction> fns = {
      IndexFunction::power(0.75), IndexFunction::power(3.0, 1.0, 2.5),
      IndexFunction::power_log(0.5, 1.0, 0.25), table,
      IndexFunction::callable("t/(1+t)", [](double t) { return t / (1.0 + t); }, 100.0)};
  for (const auto& f : fns) {
    for (double t : log_grid(1e-5, std::min(f.upper(), 1e3), 37)) {
      const double y = f(t);
      const double back = f.inverse(y);
      CHECK(std::abs(f(back) - y) <= 1e-12 * y);
    }
  }
}

TEST_CASE("closed forms survive algebra") {
  const auto phi = IndexFunction::power(0.75);
  const auto psi = IndexFunction::power(0.5);
  const auto s = IndexFunction::power(1.0);
  const auto composite = ratio(phi, compose(s.reciprocal_inverse(), psi));
  REQUIRE(composite.as_power());
  CHECK(composite.as_power()->second == doctest::Approx(1.25));
  CHECK(composite.as_power()->first == doctest::Approx(1.0));
  const auto p = product(phi, psi);
  CHECK(p.as_power()->second == doctest::Approx(1.25));
  const auto inv = IndexFunction::power(2.0, IndexFunction::kUnbounded, 3.0).inverse_function();
  CHECK(inv(12.0) == doctest::Approx(2.0));
}

TEST_CASE("composed functions without a closed form") {
  const auto f = IndexFunction::power_log(0.5, 1.0, 0.25);
  const auto g = IndexFunction::power(2.0);
  const auto h = compose(g, f);
  CHECK(h(0.1) == doctest::Approx(std::pow(f(0.1), 2.0)));
  const auto r = ratio(f, g);
  CHECK(r(0.1) == doctest::Approx(f(0.1) / 0.01));
  // s(t) = t^2 (1+|ln t|): s^{-1}(1/t) by bisection against the closed form of the power part
  const auto s = IndexFunction::power(2.0);
  const auto st = s.reciprocal_inverse();
  CHECK(st(4.0) == doctest::Approx(0.5));
}

TEST_CASE("dilation") {
  const auto grid = log_grid(1e-6, 1e6, 2001);
  SUBCASE("power is exact") {
    for (double t : {0.01, 0.5, 2.0, 100.0}) {
      CHECK(dilation(IndexFunction::power(0.7), t, grid) == doctest::Approx(std::pow(t, 0.7)).epsilon(1e-14));
    }
  }
  SUBCASE("min(t, t^2) at t = 2 lies in [2, 4] and matches a dense oracle") {
    const auto f = min_t_t2();
    const double d = dilation(f, 2.0, grid);
    CHECK(d >= 2.0);
    CHECK(d <= 4.0);
    double dense = 0.0;
    for (double s : log_grid(1e-6, 1e6, 200001)) dense = std::max(dense, std::min(2 * s, 4 * s * s) / std::min(s, s * s));
    CHECK(d == doctest::Approx(dense).epsilon(1e-3));
  }
  SUBCASE("t = 1") { CHECK(dilation(min_t_t2(), 1.0, grid) == doctest::Approx(1.0)); }
  SUBCASE("empty grid") { CHECK_THROWS_AS(dilation(min_t_t2(), 2.0, {}), GridError); }
}

TEST_CASE("extension indices") {
  SUBCASE("powers are exact") {
    for (double rho : {0.25, 0.5, 1.0, 2.5}) {
      const auto e = extension_indices(IndexFunction::power(rho));
      CHECK(e.alpha == doctest::Approx(rho).epsilon(1e-6));
      CHECK(e.beta == doctest::Approx(rho).epsilon(1e-6));
      CHECK_FALSE(e.diverged);
    }
  }
  SUBCASE("power-log") {
    const auto e = extension_indices(IndexFunction::power_log(0.5, 1.0));
    CHECK(e.alpha == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(e.alpha - 0.5) <= 0.05);
    CHECK(std::abs(e.beta - 0.5) <= 0.05);
  }
  SUBCASE("min(t, t^2) follows the sup definition") {
    // sup_s f(st)/f(s) is t for small t and t^2 for large t
    const auto e = extension_indices(min_t_t2());
    CHECK(e.alpha == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(e.beta == doctest::Approx(2.0).epsilon(1e-3));
  }
}

TEST_CASE("check_delta2") {
  const auto grid = log_grid(1e-8, 1.0, 512);
  SUBCASE("power homogeneity") {
    const auto d = check_delta2(IndexFunction::power(0.75), grid);
    CHECK(std::abs(d.d1 - std::pow(2.0, 0.75)) <= 1e-10);
    CHECK(std::abs(d.d2 - std::pow(2.0, 0.75)) <= 1e-10);
    CHECK_FALSE(d.failed);
  }
  SUBCASE("exp(-1/t) is flagged") {
    const auto f = IndexFunction::callable("exp(-1/t)", [](double t) { return std::exp(-1.0 / t); }, 1.0);
    const auto d = check_delta2(f, log_grid(1e-6, 0.5, 512));
    CHECK(d.failed);
    CHECK(d.witness > 0.0);
  }
  SUBCASE("t(2 + sin ln t) stays bracketed") {
    const auto f = IndexFunction::callable("t(2+sin ln t)", [](double t) { return t * (2.0 + std::sin(std::log(t))); });
    const auto d = check_delta2(f, log_grid(1e-6, 1e6, 4096));
    CHECK_FALSE(d.failed);
    CHECK(d.d1 >= 2.0 / 3.0);
    CHECK(d.d2 <= 6.0);
    CHECK(d.d1 < d.d2);
  }
}

TEST_CASE("growth assumptions") {
  const auto grid = log_grid(1e-8, 1.0, 512);
  SUBCASE("phi = t^3/4, psi = t^1/2 passes") {
    const auto rep = check_growth_assumptions(IndexFunction::power(0.75), IndexFunction::power(0.5), grid);
    CHECK(rep.all_hold());
    CHECK(rep.first_failure().empty());
  }
  SUBCASE("reversed exponents fail phi/psi with a witness") {
    const auto rep = check_growth_assumptions(IndexFunction::power(0.5), IndexFunction::power(0.75), grid);
    CHECK_FALSE(rep.all_hold());
    const auto& c = rep.conditions.at("phi/psi nondecreasing");
    CHECK_FALSE(c.holds);
    CHECK(c.witness > 0.0);
    CHECK(c.margin < 0.0);
    CHECK(rep.conditions.at("t/psi concave").holds);
  }
  SUBCASE("psi = t^1/2 makes t/psi concave") {
    const auto rep = check_growth_assumptions(IndexFunction::power(0.9), IndexFunction::power(0.5), grid);
    CHECK(rep.conditions.at("t/psi concave").holds);
  }
  SUBCASE("property: 0 < alpha < beta < 1 always passes") {
    for (double a = 0.05; a < 0.95; a += 0.1) {
      for (double b = a + 0.05; b < 1.0; b += 0.1) {
        const auto rep = check_growth_assumptions(IndexFunction::power(b), IndexFunction::power(a), grid);
        CHECK_MESSAGE(rep.all_hold(), "alpha=" << a << " beta=" << b << " fails " << rep.first_failure());
      }
    }
  }
}

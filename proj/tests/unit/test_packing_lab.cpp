#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "doctest.h"
#include "hslab/errors.hpp"
#include "hslab/packing_lab.hpp"
#include "hslab/rate_lab.hpp"

using namespace hslab;

namespace {

int bit_distance(BitString a, BitString b, std::size_t m) {
  int d = 0;
  for (std::size_t i = 0; i < m; ++i) d += ((a >> i) & 1U) != ((b >> i) & 1U);
  return d;
}

SpectralModel trig_model(std::size_t n = 128) {
  return SpectralModel::build(BasisFamily::trigonometric, n, EigenSpec::power(2.0));
}

PackingFamily two_strings(BitString a, BitString b, std::size_t m, double eps, std::size_t N) {
  PackingFamily f;
  f.m = m;
  f.epsilon = eps;
  f.scale = 2.0 * std::sqrt(8.0 * eps / static_cast<double>(m));
  f.model_size = N;
  f.strings = {a, b};
  return f;
}

double spectral_distance_sq(const PackingFamily& f, std::size_t k, std::size_t l) {
  const auto a = f.coefficients(k), b = f.coefficients(l);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

}  // namespace

TEST_CASE("gilbert_varshamov") {
  SUBCASE("m = 16, M = 4 with distance >= 2") {
    const auto s = gilbert_varshamov(16, 4, 3);
    REQUIRE(s.size() == 4);
    for (std::size_t k = 0; k < s.size(); ++k) {
      CHECK(s[k] < (BitString{1} << 16));
      for (std::size_t l = k + 1; l < s.size(); ++l) CHECK(bit_distance(s[k], s[l], 16) >= 2);
    }
  }
  SUBCASE("m = 9, M = 2") {
    const auto s = gilbert_varshamov(9, 2, 1);
    CHECK(bit_distance(s[0], s[1], 9) >= 2);
    CHECK(hamming(0, (BitString{1} << 9) - 1) == 9);
  }
  SUBCASE("default sizes satisfy both packing invariants") {
    for (std::size_t m : {9u, 12u, 16u, 24u, 33u, 48u, 64u}) {
      const auto s = gilbert_varshamov(m);
      CHECK(static_cast<double>(s.size()) >= std::exp2(static_cast<double>(m) / 8.0));
      int worst = static_cast<int>(m) + 1;
      for (std::size_t k = 0; k < s.size(); ++k) {
        for (std::size_t l = k + 1; l < s.size(); ++l) worst = std::min(worst, bit_distance(s[k], s[l], m));
      }
      CHECK(static_cast<std::size_t>(worst) >= (m + 7) / 8);
      CHECK(min_pairwise_hamming(s, m) == static_cast<std::size_t>(worst));
    }
  }
  SUBCASE("block length limits") {
    CHECK_THROWS_AS(gilbert_varshamov(8), PreconditionError);
    CHECK_THROWS_AS(gilbert_varshamov(65), DomainError);
    CHECK_THROWS_AS(gilbert_varshamov(16, 5), DomainError);
  }
  SUBCASE("deterministic per seed") {
    CHECK(gilbert_varshamov(40, std::nullopt, 9) == gilbert_varshamov(40, std::nullopt, 9));
    CHECK(gilbert_varshamov(40, std::nullopt, 9) != gilbert_varshamov(40, std::nullopt, 10));
  }
  SUBCASE("exhausted search budget") {
    bool thrown = false;
    for (std::uint64_t seed = 1; seed <= 200 && !thrown; ++seed) {
      try {
        gilbert_varshamov(9, 4, seed, 0);
      } catch (const SearchBudgetError&) {
        thrown = true;
      }
    }
    CHECK(thrown);
  }
}

TEST_CASE("packing family distances") {
  const std::size_t m = 24, N = 64;
  const double eps = 0.01;
  SUBCASE("all ones against all zeros") {
    const auto f = two_strings(0, (BitString{1} << m) - 1, m, eps, N);
    CHECK(f.distance_sq(0, 1) == doctest::Approx(32.0 * eps).epsilon(1e-14));
    CHECK(spectral_distance_sq(f, 0, 1) == doctest::Approx(32.0 * eps).epsilon(1e-14));
  }
  SUBCASE("pair at the minimum distance") {
    const std::size_t d = (m + 7) / 8;
    const auto f = two_strings(0, (BitString{1} << d) - 1, m, eps, N);
    const double expected = 4.0 * eps * (static_cast<double>(d) / (static_cast<double>(m) / 8.0));
    CHECK(spectral_distance_sq(f, 0, 1) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(f.distance_sq(0, 1) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("coefficients sit on e_{m+1}..e_{2m}") {
    const auto f = two_strings(0b101, 0, m, eps, N);
    const auto c = f.coefficients(0);
    CHECK(c[m] == f.scale);
    CHECK(c[m + 1] == 0.0);
    CHECK(c[m + 2] == f.scale);
    CHECK(std::accumulate(c.begin(), c.end(), 0.0) == doctest::Approx(2.0 * f.scale));
  }
}

TEST_CASE("build_packing") {
  const auto model = trig_model();
  PackingOptions opt;
  opt.phi = IndexFunction::power(0.75);
  opt.B_phi = 1.0;
  opt.B_inf = 1.0;

  SUBCASE("budgets pick the block length and the family verifies") {
    const auto fam = build_packing(model, 1e-4, opt);
    CHECK(fam.m >= 9);
    CHECK(2 * fam.m <= model.size());
    CHECK(fam.norm_phi_max <= opt.B_phi);
    CHECK(fam.norm_sup_max <= opt.B_inf);
    const auto v = verify_packing(fam);
    CHECK(v.pass());
    CHECK(v.identity_error <= 1e-15);
    CHECK(v.min_separation_sq >= 4.0 * fam.epsilon * (1.0 - 1e-12));
    // One more step breaks a budget unless the cap was reached.
    if (fam.m < std::min<std::size_t>(64, model.size() / 2)) {
      PackingOptions bigger = opt;
      bigger.m = fam.m + 1;
      CHECK_THROWS_AS(build_packing(model, 1e-4, bigger), BudgetError);
    }
  }
  SUBCASE("reported norms match direct evaluation") {
    PackingOptions o = opt;
    o.m = 16;
    const auto fam = build_packing(model, 1e-4, o);
    const auto grid = model.grid(o.grid_points);
    double sup = 0.0, phi_max = 0.0;
    for (std::size_t j = 0; j < fam.size(); ++j) {
      const auto c = fam.coefficients(j);
      for (double x : grid) {
        const auto e = model.basis(x);
        double v = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) v += c[i] * e[i];
        sup = std::max(sup, std::abs(v));
      }
      phi_max = std::max(phi_max, hilbert_norm(model, c, o.phi));
      CHECK(fam.norm_sq(j) == doctest::Approx(std::inner_product(c.begin(), c.end(), c.begin(), 0.0)));
    }
    CHECK(fam.norm_sup_max == doctest::Approx(sup).epsilon(1e-12));
    CHECK(fam.norm_phi_max == doctest::Approx(phi_max).epsilon(1e-12));
  }
  SUBCASE("realized constant") {
    PackingOptions o = opt;
    o.psi = IndexFunction::power(0.5);
    o.s = IndexFunction::power(1.0);
    const auto fam = build_packing(model, 1e-4, o);
    REQUIRE(fam.realized_constant.has_value());
    // s~(psi(phi^{-1}(eps))) = eps^{-2/3} for these powers
    CHECK(*fam.realized_constant == doctest::Approx(static_cast<double>(fam.m) * std::pow(1e-4, 2.0 / 3.0)));
  }
  SUBCASE("degenerate and infeasible requests") {
    CHECK_THROWS_AS(build_packing(model, 0.0, opt), DomainError);
    PackingOptions tight = opt;
    tight.B_phi = 1e-6;
    try {
      build_packing(model, 1e-4, tight);
      FAIL("expected a budget error");
    } catch (const BudgetError& e) {
      CHECK(std::string(e.what()).find("phi-norm") != std::string::npos);
    }
    tight = opt;
    tight.B_inf = 1e-6;
    CHECK_THROWS_WITH_AS(build_packing(model, 1e-4, tight), doctest::Contains("sup-norm"), BudgetError);
    CHECK_THROWS_AS(build_packing(trig_model(17), 1e-4, opt), DomainError);
  }
  SUBCASE("json export") {
    PackingOptions o = opt;
    o.m = 16;
    const auto fam = build_packing(model, 1e-4, o);
    std::ostringstream out;
    write_packing_json(out, fam);
    const auto j = nlohmann::json::parse(out.str());
    CHECK(j["m"] == 16);
    CHECK(j["strings"].size() == fam.size());
    CHECK(j["strings"][0].get<std::string>() == to_bits(fam.strings[0], 16));
    CHECK(j["min_hamming"].get<std::size_t>() >= 2);
  }
}

TEST_CASE("kl_radius") {
  const std::size_t m = 16, N = 64;
  const double eps = 0.02, n = 100.0, sigma = 0.5;
  SUBCASE("all-ones strings attain the radius") {
    auto f = two_strings((BitString{1} << m) - 1, (BitString{1} << m) - 1, m, eps, N);
    const auto r = kl_radius(f, n, sigma);
    CHECK(r.value == doctest::Approx(16.0 * n * eps / (sigma * sigma)).epsilon(1e-14));
    CHECK(r.within);
  }
  SUBCASE("other families stay strictly inside") {
    const auto f = two_strings(0b1011, 0xff00, m, eps, N);
    const auto r = kl_radius(f, n, sigma);
    const double direct = n / (2.0 * sigma * sigma * 2.0) * (32.0 * eps / m) * (3 + 8);
    CHECK(r.value == doctest::Approx(direct).epsilon(1e-14));
    CHECK(r.value < r.alpha_star);
  }
  SUBCASE("no samples or infinite noise") {
    const auto f = two_strings(1, 2, m, eps, N);
    CHECK(kl_radius(f, 0.0, sigma).value == 0.0);
    CHECK(kl_radius(f, n, std::numeric_limits<double>::infinity()).value == 0.0);
  }
}

TEST_CASE("minimax floor and epsilon schedule") {
  const double M = 16.0;
  const double expected = 4.0 / 5.0 * (1.0 - 48.0 * 10.0 * 1e-3 / (0.25 * std::log(M)) - 1.0 / (2.0 * std::log(M)));
  CHECK(minimax_floor(16, 10.0, 1e-3, 0.5) == doctest::Approx(expected));
  CHECK(minimax_floor(1, 10.0, 1e-3, 0.5) < 0.0);
  const auto phi = IndexFunction::power(0.75), psi = IndexFunction::power(0.5), s = IndexFunction::power(1.0);
  const double lambda = schedule(phi, psi, s, 512.0);
  CHECK(packing_epsilon(phi, psi, s, 512.0) == doctest::Approx(0.25 * phi(lambda)));
  CHECK_THROWS_AS(packing_epsilon(phi, psi, s, 512.0, 1.0), DomainError);
}

TEST_CASE("minimax_eval") {
  const auto model = trig_model(64);
  PackingOptions opt;
  opt.B_phi = 10.0;
  opt.B_inf = 10.0;
  opt.m = 16;
  const auto fam = build_packing(model, 0.01, opt);

  SUBCASE("exact recovery never fails") {
    const auto r = minimax_eval(least_squares_hook(model), model, fam, 200, 5, 1e-10, 42);
    CHECK(r.max_failure == 0.0);
    CHECK(r.max_misclassified == 0.0);
  }
  SUBCASE("zero estimator fails exactly on members with ||f_j||^2 >= eps") {
    const auto r = minimax_eval(zero_hook(), model, fam, 10, 3, 0.5, 1);
    for (std::size_t j = 0; j < fam.size(); ++j) {
      const bool far = 32 * std::popcount(fam.strings[j]) >= static_cast<int>(fam.m);
      CHECK(r.failure[j] == (far ? 1.0 : 0.0));
    }
  }
  SUBCASE("KRR at the scheduled epsilon respects the floor") {
    const auto phi = IndexFunction::power(0.75), psi = IndexFunction::power(0.5), s = IndexFunction::power(1.0);
    const double n = 64.0;
    const double eps = packing_epsilon(phi, psi, s, n);
    const auto f = build_packing(model, eps, opt);
    const auto r = minimax_eval(krr_hook(model, schedule(phi, psi, s, n)), model, f, 64, 200, 0.5, 7, 2);
    CHECK(r.floor == doctest::Approx(minimax_floor(f.size(), n, eps, 0.5)));
    CHECK(r.pass);
    CHECK(r.max_failure >= r.max_misclassified);
  }
  SUBCASE("parallel runs match serial runs") {
    const auto a = minimax_eval(krr_hook(model, 1e-3), model, fam, 32, 10, 0.5, 5, 1);
    const auto b = minimax_eval(krr_hook(model, 1e-3), model, fam, 32, 10, 0.5, 5, 3);
    CHECK(a.failure == b.failure);
    CHECK(a.misclassified == b.misclassified);
  }
  SUBCASE("hook errors carry the member index") {
    auto bad = [](const Dataset& d) -> std::vector<double> {
      if (d.size() > 0) throw Error("boom");
      return {};
    };
    try {
      minimax_eval(bad, model, fam, 10, 1, 0.5, 1);
      FAIL("expected an estimator error");
    } catch (const EstimatorError& e) {
      CHECK(e.member() == 0);
      CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
  }
}

TEST_CASE("subprocess estimator hook") {
  const auto model = trig_model(64);
  TargetSpec target = TargetSpec::power_decay(model, IndexFunction::power(0.75), 1.0);
  const auto data = draw_dataset(model, target, 50, 0.3, 11);
  SUBCASE("mean estimator over standard input") {
    const auto hook = subprocess_hook("awk -F, 'NR > 1 { s += $2; n++ } END { printf \"%.17g,0,0\\n\", s / n }'");
    const auto c = hook(data);
    REQUIRE(c.size() == 3);
    const double mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) / static_cast<double>(data.size());
    CHECK(c[0] == doctest::Approx(mean).epsilon(1e-14));
    CHECK(c[1] == 0.0);
  }
  SUBCASE("failures are reported") {
    CHECK_THROWS_AS(subprocess_hook("cat > /dev/null; exit 3")(data), Error);
    CHECK_THROWS_AS(subprocess_hook("echo nope")(data), Error);
    CHECK(subprocess_hook("true")(data).empty());
  }
  SUBCASE("runs inside minimax_eval") {
    PackingOptions opt;
    opt.B_phi = 10.0;
    opt.B_inf = 10.0;
    opt.m = 9;
    const auto fam = build_packing(model, 0.01, opt);
    const auto r = minimax_eval(subprocess_hook("cat > /dev/null; echo 0"), model, fam, 20, 2, 0.5, 3, 2);
    const auto z = minimax_eval(zero_hook(), model, fam, 20, 2, 0.5, 3);
    CHECK(r.failure == z.failure);
  }
}

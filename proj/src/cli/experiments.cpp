#include "hslab/cli/experiments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include "hslab/cli/plot.hpp"
#include "hslab/csv.hpp"
#include "hslab/fourier_capacity.hpp"
#include "hslab/grid.hpp"
#include "hslab/krr.hpp"
#include "hslab/packing_lab.hpp"
#include "hslab/rate_lab.hpp"
#include "hslab/rearrangement.hpp"

namespace hslab::cli {

using Json = nlohmann::ordered_json;

namespace {

std::string g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Seed streams, one per randomized component.
enum Stream : std::uint64_t {
  kBoundsTargets = 0xb1a5,
  kInterpolation = 0x1e7,
  kGramClouds = 0x6a4,
  kEigendecay = 0xe16,
  kMinimax = 0x3a3,
  kPacking = 0x9ac,
};

struct Context {
  const Config& cfg;
  Section root;
  unsigned jobs;
  RunResult result;

  void check(const std::string& name, bool pass, const std::string& detail) {
    result.assertions.push_back({result.experiment + "." + name, pass, detail});
  }
  void note(const std::string& text) { result.notes.push_back(text); }

  Json header() const {
    Json j;
    j["experiment"] = result.experiment;
    j["seed"] = cfg.seed;
    return j;
  }
  Json assertions_json() const {
    Json a = Json::array();
    for (const auto& x : result.assertions) a.push_back({{"name", x.name}, {"pass", x.pass}, {"detail", x.detail}});
    return a;
  }
};

const std::vector<std::string> kCommonKeys = {"experiment", "seed", "output"};

void allow_top(const Section& root, std::vector<std::string> extra) {
  extra.insert(extra.end(), kCommonKeys.begin(), kCommonKeys.end());
  root.allow(extra);
}

double parse_sigma(const Section& root) {
  const Section n = root.child("noise");
  n.allow({"sigma"});
  const double s = n.number("sigma");
  if (!(s >= 0.0) || !std::isfinite(s)) n.fail("sigma", "must be finite and nonnegative");
  return s;
}

Json index_json(const IndexTriple& idx) {
  return {{"phi", idx.phi.describe()}, {"psi", idx.psi.describe()}, {"s", idx.s.describe()}};
}

// ---------------------------------------------------------------- rates

void run_rates(Context& ctx) {
  const Section& root = ctx.root;
  allow_top(root, {"model", "index", "target", "noise", "rates"});
  IndexTriple idx = parse_index(root);
  const SpectralModel model = parse_model(root, idx);
  const TargetSpec target = parse_target(root, model, idx.phi, ctx.cfg.seed);
  const Section r = root.child("rates");
  r.allow({"n_grid", "trials", "lambda_scale", "delta", "tail_gate", "envelope_constant", "expect_slope"});

  RateExperiment e;
  e.phi = idx.phi;
  e.psi = idx.psi;
  e.s = idx.s;
  e.sigma = parse_sigma(root);
  e.n_grid = r.counts("n_grid");
  if (e.n_grid.empty()) r.fail("n_grid", "needs at least one sample size");
  for (std::size_t i = 0; i < e.n_grid.size(); ++i) {
    if (e.n_grid[i] < 1 || e.n_grid[i] > kMaxSamples) r.fail("n_grid", "sample sizes must lie in [1, 4096]");
    if (i && e.n_grid[i] <= e.n_grid[i - 1]) r.fail("n_grid", "sample sizes must be increasing");
  }
  e.trials = r.count("trials");
  if (e.trials < 1) r.fail("trials", "must be at least 1");
  e.lambda_scale = r.number("lambda_scale", 1.0);
  if (!(e.lambda_scale > 0.0)) r.fail("lambda_scale", "must be positive");
  e.delta = r.number("delta", 0.05);
  if (!(e.delta > 0.0 && e.delta < 1.0)) r.fail("delta", "must lie in (0, 1)");
  e.tail_gate = r.flag("tail_gate", false);
  e.master_seed = ctx.cfg.seed;
  e.jobs = ctx.jobs;
  std::optional<double> envelope;
  if (r.has("envelope_constant")) {
    envelope = r.number("envelope_constant");
    if (!(*envelope > 0.0)) r.fail("envelope_constant", "must be positive");
  }
  std::optional<std::pair<double, double>> expect;
  if (auto es = r.optional_child("expect_slope")) {
    es->allow({"value", "tol"});
    expect = std::pair{es->number("value"), es->number("tol")};
    if (!(expect->second >= 0.0)) es->fail("tol", "must be nonnegative");
  }

  const RateReport rep = run_experiment(model, target, e);

  double bal_lo = std::numeric_limits<double>::infinity(), bal_hi = 0.0;
  double bias_excess = -std::numeric_limits<double>::infinity();
  double ubias_ratio = 0.0, env_ratio = 0.0;
  std::size_t var_below = 0, var_total = 0, cond_unmet = 0;
  for (const auto& rec : rep.records) {
    bal_lo = std::min(bal_lo, rec.balance);
    bal_hi = std::max(bal_hi, rec.balance);
    bias_excess = std::max(bias_excess, rec.exact_bias - rec.bias_bound);
    ubias_ratio = std::max(ubias_ratio, rec.sup_bias / rec.uniform_bias_bound);
    env_ratio = std::max(env_ratio, rec.mean / rec.predicted);
    for (double v : rec.variance_errors) var_below += v <= rec.variance.value;
    var_total += rec.variance_errors.size();
    cond_unmet += !rec.variance.condition_met;
  }
  ctx.check("schedule_balance", bal_lo >= 0.5 && bal_hi <= 2.0,
            "balance in [" + g(bal_lo) + ", " + g(bal_hi) + "], required [0.5, 2]");
  ctx.check("bias_bound", bias_excess <= 1e-12, "max exact_bias - bias_bound = " + g(bias_excess));
  ctx.check("uniform_bias_bound", ubias_ratio <= 1.0, "max sup_bias / uniform_bound = " + g(ubias_ratio));
  if (envelope) {
    ctx.check("rate_envelope", env_ratio <= *envelope,
              "max mean_err / predicted = " + g(env_ratio) + ", constant " + g(*envelope));
  }
  if (expect) {
    const bool ok = std::abs(rep.fit.slope - expect->first) <= expect->second;
    ctx.check("slope", ok,
              "fitted " + g(rep.fit.slope) + " +- " + g(rep.fit.half_width) + ", expected " + g(expect->first) +
                  " +- " + g(expect->second) + (rep.fit.dropped_first ? " (smallest n dropped)" : ""));
  }
  if (rep.summability_violated) ctx.note("sum 1/s(n) diverges for the declared s; bounds are evaluated regardless");
  if (!std::isfinite(rep.psi_tail.tail)) {
    ctx.note("psi tail beyond the truncation diverges; the model is finite-rank, so reported errors are exact");
  }
  ctx.note("variance bound held in " + std::to_string(var_below) + " of " + std::to_string(var_total) +
           " trials; sample-size condition unmet at " + std::to_string(cond_unmet) + " grid points");

  std::vector<std::vector<double>> rows, trial_rows;
  Json records = Json::array();
  for (const auto& rec : rep.records) {
    rows.push_back({double(rec.n), rec.lambda, rec.mean, rec.stderr_, rec.predicted});
    for (std::size_t t = 0; t < rec.errors.size(); ++t) {
      trial_rows.push_back({double(rec.n), double(t), rec.errors[t], rec.variance_errors[t]});
    }
    Json j;
    j["n"] = rec.n;
    j["lambda"] = rec.lambda;
    j["mean_err"] = rec.mean;
    j["stderr"] = rec.stderr_;
    j["predicted"] = rec.predicted;
    j["exact_bias"] = rec.exact_bias;
    j["bias_bound"] = rec.bias_bound;
    j["sup_bias"] = rec.sup_bias;
    j["uniform_bias_bound"] = rec.uniform_bias_bound;
    j["variance_bound"] = rec.variance.value;
    j["bias_variance_form"] = rec.variance.bv_form;
    j["variance_condition_met"] = rec.variance.condition_met;
    j["balance"] = rec.balance;
    j["seeds"] = rec.seeds;
    records.push_back(j);
  }
  auto& art = ctx.result.artifacts;
  art.add_csv("rates.csv", {"n", "lambda", "mean_err", "stderr", "predicted"}, rows);
  art.add_csv("trials.csv", {"n", "trial", "error", "variance_error"}, trial_rows);

  Json j = ctx.header();
  j["model"] = model.describe();
  j["index"] = index_json(idx);
  j["sigma"] = e.sigma;
  j["trials"] = e.trials;
  j["lambda_scale"] = e.lambda_scale;
  j["target_norm_phi"] = target.norm_phi();
  j["fit"] = {{"slope", rep.fit.slope},
              {"intercept", rep.fit.intercept},
              {"half_width", rep.fit.half_width},
              {"residual_rms", rep.fit.residual_rms},
              {"dropped_first", rep.fit.dropped_first},
              {"points", rep.fit.points}};
  j["k_psi_sup"] = rep.k_psi_sup;
  j["psi_tail"] = {{"head", rep.psi_tail.head},
                   {"tail", std::isfinite(rep.psi_tail.tail) ? Json(rep.psi_tail.tail) : Json("diverges")}};
  j["summability_violated"] = rep.summability_violated;
  j["records"] = records;
  j["assertions"] = ctx.assertions_json();
  art.add_json("rates.json", j);

  std::istringstream csv(art.content("rates.csv"));
  art.add_text("rates.svg", render_rate_svg(read_csv(csv)));
}

// ---------------------------------------------------------------- bounds

void run_bounds(Context& ctx) {
  const Section& root = ctx.root;
  allow_top(root, {"model", "index", "bounds"});
  IndexTriple idx = parse_index(root);
  const SpectralModel model = parse_model(root, idx);
  const Section b = root.child("bounds");
  b.allow({"lambda_grid", "random_targets", "target_norm", "effdim_grid", "max_drift", "interpolation_draws",
           "hnorm"});
  const auto lambdas = parse_log_grid(b.child("lambda_grid"));
  const std::size_t targets = b.count("random_targets", 20);
  const double norm = b.number("target_norm", 1.0);
  if (!(norm > 0.0)) b.fail("target_norm", "must be positive");
  const double max_drift = b.number("max_drift", 2.0);
  const std::size_t draws = b.count("interpolation_draws", 1000);

  const auto grid = default_x_grid(model);
  const double kpsi = k_sup_norm(model, idx.psi, grid);
  const Eigen::MatrixXd F = model.features(grid);
  const std::size_t N = model.size(), L = lambdas.size();

  std::vector<std::vector<double>> rows;
  std::size_t bias_viol = 0, ubias_viol = 0;
  double worst_bias = -std::numeric_limits<double>::infinity(), worst_ubias = 0.0;
  for (std::size_t t = 0; t < targets; ++t) {
    Rng rng(derive_seed(ctx.cfg.seed, kBoundsTargets, t));
    const auto target = TargetSpec::random(model, idx.phi, rng, norm);
    Eigen::MatrixXd D(N, L);
    for (std::size_t l = 0; l < L; ++l) {
      const auto pop = population_solution(model, target, lambdas[l]);
      for (std::size_t i = 0; i < N; ++i) D(i, l) = pop[i] - target.coefficients()[i];
    }
    const Eigen::VectorXd sup = (F * D).cwiseAbs().colwise().maxCoeff().transpose();
    for (std::size_t l = 0; l < L; ++l) {
      const double eb = exact_bias(model, target, lambdas[l]);
      const double bb = bias_bound(idx.phi, lambdas[l], target.norm_phi());
      const double ub = uniform_bias_bound(idx.phi, idx.psi, lambdas[l], kpsi, target.norm_phi());
      bias_viol += eb > bb + 1e-12;
      ubias_viol += sup(l) > ub;
      worst_bias = std::max(worst_bias, eb - bb);
      worst_ubias = std::max(worst_ubias, sup(l) / ub);
      rows.push_back({double(t), lambdas[l], eb, bb, sup(l), ub});
    }
  }
  const std::string pairs = std::to_string(targets * L) + " (target, lambda) pairs";
  ctx.check("bias_bound", bias_viol == 0,
            std::to_string(bias_viol) + " violations over " + pairs + ", max excess " + g(worst_bias));
  ctx.check("uniform_bias_bound", ubias_viol == 0,
            std::to_string(ubias_viol) + " violations over " + pairs + ", max ratio " + g(worst_ubias));

  Json j = ctx.header();
  j["model"] = model.describe();
  j["index"] = index_json(idx);
  j["k_psi_sup"] = kpsi;
  j["bias"] = {{"targets", targets}, {"lambdas", L}, {"violations", bias_viol}, {"max_excess", worst_bias}};
  j["uniform_bias"] = {{"violations", ubias_viol}, {"max_ratio", worst_ubias}};
  auto& art = ctx.result.artifacts;
  art.add_csv("bias.csv", {"target", "lambda", "exact_bias", "bias_bound", "sup_error", "uniform_bound"}, rows);

  if (b.has("effdim_grid")) {
    const auto eg = parse_log_grid(b.child("effdim_grid"));
    const auto ec = effdim_bound_check(model, idx.psi, idx.s, eg);
    std::size_t flagged = 0;
    std::vector<std::vector<double>> er;
    for (std::size_t i = 0; i < ec.lambdas.size(); ++i) {
      flagged += ec.truncation_flagged[i];
      er.push_back({ec.lambdas[i], ec.ratios[i], ec.truncation_flagged[i] ? 1.0 : 0.0});
    }
    ctx.check("effective_dimension",
              std::isfinite(ec.sup_ratio) && ec.decade_drift < max_drift,
              "sup ratio " + g(ec.sup_ratio) + ", decade drift " + g(ec.decade_drift) + " (limit " + g(max_drift) +
                  ")");
    if (flagged) ctx.note(std::to_string(flagged) + " effective-dimension lambdas lie below mu_N");
    art.add_csv("effdim.csv", {"lambda", "ratio", "truncated"}, er);
    j["effective_dimension"] = {{"sup_ratio", ec.sup_ratio}, {"decade_drift", ec.decade_drift},
                                {"truncated", flagged}};
  }
  if (draws > 0) {
    Rng rng(derive_seed(ctx.cfg.seed, kInterpolation));
    const auto ic = interpolation_check(model, idx.psi, draws, rng);
    ctx.check("interpolation", ic.worst_margin >= -1e-10,
              "worst margin " + g(ic.worst_margin) + " over " + std::to_string(ic.draws) + " functions");
    j["interpolation"] = {{"draws", ic.draws}, {"worst_margin", ic.worst_margin}};
  }
  if (b.flag("hnorm", true)) {
    const auto hc = hnorm_check(model, idx.psi, lambdas, grid, kpsi);
    ctx.check("hnorm", hc.worst_ratio <= 1.0 + 1e-12,
              "worst ratio " + g(hc.worst_ratio) + " at lambda " + g(hc.worst_lambda));
    j["hnorm"] = {{"worst_ratio", hc.worst_ratio}, {"worst_lambda", hc.worst_lambda}};
  }
  j["assertions"] = ctx.assertions_json();
  art.add_json("bounds.json", j);
}

// ---------------------------------------------------------------- capacity

std::vector<int> parse_dimensions(const Section& s) {
  std::vector<int> out;
  for (std::size_t d : s.counts("dimensions")) {
    if (d < 1 || d > 3) s.fail("dimensions", "dimensions must lie in {1, 2, 3}");
    out.push_back(static_cast<int>(d));
  }
  if (out.empty()) s.fail("dimensions", "needs at least one dimension");
  return out;
}

RadialKernel make_kernel(const Section& s, const RadialProfile& p, int d) {
  try {
    return RadialKernel(p, d);
  } catch (const CertificationError& e) {
    s.fail("", e.what());
  }
}

void run_capacity(Context& ctx) {
  const Section& root = ctx.root;
  allow_top(root, {"model", "index", "capacity"});
  IndexTriple idx = parse_index(root, false);
  const Section c = root.child("capacity");
  c.allow({"transforms", "gram", "eigendecay", "opt_smoothness", "bernstein"});
  auto& art = ctx.result.artifacts;
  Json j = ctx.header();

  if (auto t = c.optional_child("transforms")) {
    t->allow({"profiles", "dimensions", "r"});
    const auto dims = parse_dimensions(*t);
    const auto r = parse_log_grid(t->child("r"));
    std::vector<std::vector<double>> rows;
    Json names = Json::array();
    std::size_t k = 0;
    for (const auto& ps : t->list("profiles")) {
      const auto prof = parse_profile(ps);
      names.push_back(prof.describe());
      for (int d : dims) {
        const auto kern = make_kernel(ps, prof, d);
        for (double x : r) rows.push_back({double(k), double(d), x, kern.fourier(x)});
      }
      ++k;
    }
    art.add_csv("transforms.csv", {"profile", "d", "r", "F"}, rows);
    j["transforms"] = {{"profiles", names}};
  }

  if (auto gs = c.optional_child("gram")) {
    gs->allow({"profiles", "dimensions", "clouds", "points"});
    const auto dims = parse_dimensions(*gs);
    const std::size_t clouds = gs->count("clouds", 200);
    const std::size_t points = gs->count("points", 24);
    if (points < 2) gs->fail("points", "needs at least two points per cloud");
    std::vector<std::vector<double>> rows;
    std::size_t viol = 0, total = 0, k = 0;
    double worst = std::numeric_limits<double>::infinity();
    Json names = Json::array();
    for (const auto& ps : gs->list("profiles")) {
      const auto prof = parse_profile(ps);
      names.push_back(prof.describe());
      for (int d : dims) {
        const auto kern = make_kernel(ps, prof, d);
        Rng rng(derive_seed(ctx.cfg.seed, kGramClouds, 8 * k + d));
        for (std::size_t i = 0; i < clouds; ++i) {
          const auto cloud = random_cloud(points, d, rng);
          const auto gb = gram_min_eig_bound(kern, cloud.points);
          viol += !gb.pass;
          ++total;
          if (gb.bound > 0.0) worst = std::min(worst, gb.observed / gb.bound);
          rows.push_back({double(k), double(d), double(i), gb.separation, gb.observed, gb.bound});
        }
      }
      ++k;
    }
    ctx.check("gram_min_eigenvalue", viol == 0,
              std::to_string(viol) + " violations over " + std::to_string(total) + " clouds, min observed/bound " +
                  g(worst));
    art.add_csv("gram.csv", {"profile", "d", "cloud", "separation", "observed", "bound"}, rows);
    j["gram"] = {{"profiles", names}, {"clouds", total}, {"violations", viol}, {"min_ratio", worst}};
  }

  if (auto es = c.optional_child("eigendecay")) {
    es->allow({"bases", "m", "count", "terms", "band"});
    const std::size_t m = es->count("m", 512);
    const std::size_t count = es->count("count", 16);
    const std::size_t terms = es->count("terms", 64);
    const double band = es->number("band", 4.0);
    if (count < 1 || count > terms) es->fail("count", "must lie in [1, terms]");
    if (m < count) es->fail("m", "must be at least count");
    if (!(band > 1.0)) es->fail("band", "must exceed 1");
    std::vector<std::vector<double>> rows;
    Json out = Json::array();
    std::size_t k = 0;
    for (const auto& bs : es->list("bases")) {
      bs.allow({"basis", "gamma"});
      const std::string basis = bs.text("basis");
      ModelOptions opt;
      BasisFamily fam;
      if (basis == "trigonometric") {
        fam = BasisFamily::trigonometric;
      } else if (basis == "gegenbauer") {
        fam = BasisFamily::gegenbauer;
        opt.gamma = bs.number("gamma", 0.5);
      } else {
        bs.fail("basis", "expected trigonometric or gegenbauer");
      }
      const auto s = fam == BasisFamily::trigonometric ? IndexFunction::power(1.0)
                                                       : IndexFunction::power(2.0 * opt.gamma + 1.0);
      const auto model = SpectralModel::build(fam, terms, EigenSpec::induced(idx.psi, s), opt);
      const auto ref = infer_eigendecay(idx.psi, s, count);
      const auto cmp = compare_empirical(model, ref, m, derive_seed(ctx.cfg.seed, kEigendecay, k));
      const bool ok = cmp.min_ratio >= 1.0 / band && cmp.max_ratio <= band;
      ctx.check("eigendecay." + basis, ok,
                "reference/empirical in [" + g(cmp.min_ratio) + ", " + g(cmp.max_ratio) + "], band " + g(band));
      for (std::size_t i = 0; i < cmp.ratios.size(); ++i) {
        rows.push_back({double(k), double(i + 1), cmp.empirical[i], cmp.reference[i], cmp.ratios[i]});
      }
      out.push_back({{"basis", model.describe()}, {"s", s.describe()}, {"min_ratio", cmp.min_ratio},
                     {"max_ratio", cmp.max_ratio}});
      ++k;
    }
    art.add_csv("eigendecay.csv", {"basis", "i", "empirical", "reference", "ratio"}, rows);
    j["eigendecay"] = {{"m", m}, {"bases", out}};
  }

  if (auto os = c.optional_child("opt_smoothness")) {
    os->allow({"profile", "d", "t", "tolerance", "dilated"});
    const int d = static_cast<int>(os->count("d", 1));
    if (d < 1 || d > 3) os->fail("d", "must lie in {1, 2, 3}");
    const auto prof = parse_profile(os->child("profile"));
    const auto kern = make_kernel(*os, prof, d);
    const auto t = parse_log_grid(os->child("t"));
    const double tol = os->number("tolerance", 10.0);
    const auto r = check_opt_smoothness(idx.psi, idx.s, kern, t, tol, os->flag("dilated", false));
    ctx.check("opt_smoothness", r.pass, "max/min of s psi(F/s) = " + g(r.ratio) + ", tolerance " + g(tol));
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.t.size(); ++i) rows.push_back({r.t[i], r.values[i]});
    art.add_csv("opt_smoothness.csv", {"t", "value"}, rows);
    j["opt_smoothness"] = {{"profile", prof.describe()}, {"min", r.min}, {"max", r.max}, {"ratio", r.ratio}};
  }

  if (auto bs = c.optional_child("bernstein")) {
    bs->allow({"profile", "d", "n"});
    const SpectralModel model = parse_model(root, idx);
    const int d = static_cast<int>(bs->count("d", 1));
    if (d < 1 || d > 3) bs->fail("d", "must lie in {1, 2, 3}");
    const auto kern = make_kernel(*bs, parse_profile(bs->child("profile")), d);
    const auto ns = bs->counts("n");
    const double kpsi = k_sup_norm(model, idx.psi, default_x_grid(model));
    std::vector<std::vector<double>> rows;
    std::size_t viol = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t n : ns) {
      if (n < 1 || n > model.size()) bs->fail("n", "widths need 1 <= n <= model.terms");
      const double up = bernstein_width_upper(model, idx.psi, n, kpsi);
      const double low = bernstein_width_lower(kern, n);
      viol += up < low;
      lo = std::min(lo, up / low);
      hi = std::max(hi, up / low);
      rows.push_back({double(n), up, low, up / low});
    }
    ctx.check("bernstein", viol == 0,
              "upper/lower in [" + g(lo) + ", " + g(hi) + "], " + std::to_string(viol) + " violations");
    art.add_csv("bernstein.csv", {"n", "upper", "lower", "ratio"}, rows);
    j["bernstein"] = {{"model", model.describe()}, {"k_psi_sup", kpsi}, {"min_ratio", lo}, {"max_ratio", hi}};
  }
  j["assertions"] = ctx.assertions_json();
  art.add_json("capacity.json", j);
}

// ---------------------------------------------------------------- rearrangement

void run_rearrangement(Context& ctx) {
  const Section& root = ctx.root;
  allow_top(root, {"rearrangement"});
  const Section rs = root.child("rearrangement");
  rs.allow({"fundamental", "boas", "tight_range"});
  auto& art = ctx.result.artifacts;
  Json j = ctx.header();

  if (auto fs = rs.optional_child("fundamental")) {
    fs->allow({"s", "pairs", "tolerance"});
    const auto s = parse_log_grid(fs->child("s"));
    const double tol = fs->number("tolerance", 1e-6);
    std::vector<std::vector<double>> rows;
    Json out = Json::array();
    for (const auto& ps : fs->list("pairs")) {
      ps.allow({"rho", "p"});
      const double rho = ps.number("rho"), p = ps.number("p");
      if (!(rho > 0.0)) ps.fail("rho", "must be positive");
      if (!(p >= 0.0 && p < 1.0)) ps.fail("p", "must lie in [0, 1)");
      const auto r = fundamental_function_check(rho, p, s);
      ctx.check("fundamental(rho=" + g(rho) + ",p=" + g(p) + ")", r.max_deviation <= tol,
                "max relative deviation " + g(r.max_deviation) + ", tolerance " + g(tol));
      for (std::size_t i = 0; i < r.s.size(); ++i) rows.push_back({rho, p, r.s[i], r.computed[i], r.closed[i]});
      out.push_back({{"rho", rho}, {"p", p}, {"max_deviation", r.max_deviation},
                     {"lemma_constant", r.lemma_constant}, {"lemma_spread", r.lemma_spread}});
    }
    art.add_csv("fundamental.csv", {"rho", "p", "s", "computed", "closed"}, rows);
    j["fundamental"] = out;
  }

  if (auto bs = rs.optional_child("boas")) {
    bs->allow({"R", "dilations", "cases"});
    const double R = bs->number("R", 50.0);
    const auto dil = bs->has("dilations") ? bs->numbers("dilations") : std::vector<double>{0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<std::vector<double>> rows;
    Json out = Json::array();
    std::size_t k = 0;
    for (const auto& cs : bs->list("cases")) {
      cs.allow({"profile", "weight", "p", "d", "expect"});
      const auto prof = parse_profile(cs.child("profile"));
      const auto w = parse_index_function(cs.child("weight"));
      const double p = cs.number("p");
      const int d = static_cast<int>(cs.count("d", 1));
      if (d < 1 || d > 3) cs.fail("d", "must lie in {1, 2, 3}");
      const std::string expect = cs.text("expect", "pass");
      if (expect != "pass" && expect != "reject") cs.fail("expect", "expected pass or reject");
      const std::string label = "boas[" + std::to_string(k) + "]";
      try {
        const auto r = boas_check(prof, w, p, d, dil, R);
        ctx.check(label, expect == "pass" && r.pass,
                  prof.describe() + " d=" + std::to_string(d) + ": ratios in [" + g(r.min_ratio) + ", " +
                      g(r.max_ratio) + "], R " + g(R) + (expect == "reject" ? ", expected rejection" : ""));
        for (std::size_t i = 0; i < r.dilations.size(); ++i) {
          rows.push_back({double(k), r.dilations[i], r.sides[i].lhs, r.sides[i].rhs, r.sides[i].ratio});
        }
        out.push_back({{"profile", prof.describe()}, {"weight", w.describe()}, {"p", p}, {"d", d},
                       {"outcome", "evaluated"}, {"min_ratio", r.min_ratio}, {"max_ratio", r.max_ratio},
                       {"beta_w1", r.beta_w1}, {"beta_w2", r.beta_w2}});
      } catch (const PreconditionError& e) {
        ctx.check(label, expect == "reject",
                  prof.describe() + " d=" + std::to_string(d) + ": rejected (" + e.what() + "), witness " +
                      g(e.witness()));
        out.push_back({{"profile", prof.describe()}, {"weight", w.describe()}, {"p", p}, {"d", d},
                       {"outcome", "rejected"}, {"reason", e.what()}, {"witness", e.witness()}});
      }
      ++k;
    }
    art.add_csv("boas.csv", {"case", "dilation", "lhs", "rhs", "ratio"}, rows);
    j["boas"] = {{"R", R}, {"cases", out}};
  }

  if (auto ts = rs.optional_child("tight_range")) {
    ts->allow({"rho", "a", "kernel", "d", "p", "q", "R", "profiles", "dilations"});
    const double rho = ts->number("rho"), a = ts->number("a"), p = ts->number("p"), q = ts->number("q");
    const int d = static_cast<int>(ts->count("d", 1));
    if (d < 1 || d > 3) ts->fail("d", "must lie in {1, 2, 3}");
    const double R = ts->number("R", 50.0);
    const auto kernel = parse_profile(ts->child("kernel"));
    std::vector<RadialProfile> profiles;
    for (const auto& ps : ts->list("profiles")) profiles.push_back(parse_profile(ps));
    const auto dil = ts->has("dilations") ? ts->numbers("dilations") : std::vector<double>{0.25, 0.5, 1.0, 2.0, 4.0};
    try {
      const auto r = tight_range_check(rho, a, kernel, d, p, q, profiles, dil, R);
      ctx.check("tight_range", r.pass,
                "ratios in [" + g(r.min_ratio) + ", " + g(r.max_ratio) + "], spread " + g(r.spread) + ", R " + g(R));
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < r.ratios.size(); ++i) rows.push_back({double(i), r.ratios[i]});
      art.add_csv("tight_range.csv", {"case", "ratio"}, rows);
      j["tight_range"] = {{"exponent", r.exponent}, {"labels", r.labels}, {"min_ratio", r.min_ratio},
                          {"max_ratio", r.max_ratio}, {"spread", r.spread}};
    } catch (const PreconditionError& e) {
      ts->fail("p", e.what());
    }
  }
  j["assertions"] = ctx.assertions_json();
  art.add_json("rearrangement.json", j);
}

// ---------------------------------------------------------------- minimax

void run_minimax(Context& ctx) {
  const Section& root = ctx.root;
  allow_top(root, {"model", "index", "noise", "minimax"});
  IndexTriple idx = parse_index(root);
  const SpectralModel model = parse_model(root, idx);
  const double sigma = parse_sigma(root);
  const Section ms = root.child("minimax");
  ms.allow({"n", "epsilon", "tau", "block", "B_phi", "B_inf", "trials", "estimator"});
  const std::size_t n = ms.count("n");
  if (n < 1 || n > kMaxSamples) ms.fail("n", "must lie in [1, 4096]");
  const double tau = ms.number("tau", 0.25);
  const double eps = ms.has("epsilon") ? ms.number("epsilon") : packing_epsilon(idx.phi, idx.psi, idx.s, double(n), tau);
  const std::size_t trials = ms.count("trials", 200);

  PackingOptions po;
  po.phi = idx.phi;
  po.psi = idx.psi;
  po.s = idx.s;
  po.B_phi = ms.number("B_phi", 1.0);
  po.B_inf = ms.number("B_inf", 1.0);
  if (ms.has("block")) po.m = ms.count("block");
  po.seed = derive_seed(ctx.cfg.seed, kPacking);

  const Section es = ms.child("estimator");
  const std::string kind = es.text("kind");
  EstimatorHook hook;
  Json est = {{"kind", kind}};
  if (kind == "krr") {
    es.allow({"kind", "lambda_scale"});
    const double lam = schedule(idx.phi, idx.psi, idx.s, double(n), es.number("lambda_scale", 1.0));
    hook = krr_hook(model, lam);
    est["lambda"] = lam;
  } else if (kind == "zero") {
    es.allow({"kind"});
    hook = zero_hook();
  } else if (kind == "least_squares") {
    es.allow({"kind"});
    hook = least_squares_hook(model);
  } else if (kind == "subprocess") {
    es.allow({"kind", "command"});
    est["command"] = es.text("command");
    hook = subprocess_hook(es.text("command"));
  } else {
    es.fail("kind", "unknown estimator '" + kind + "' (expected krr, zero, least_squares or subprocess)");
  }

  PackingFamily fam;
  try {
    fam = build_packing(model, eps, po);
  } catch (const BudgetError& e) {
    ms.fail(ms.has("block") ? "block" : "epsilon", e.what());
  } catch (const DomainError& e) {
    ms.fail("epsilon", e.what());
  }
  const auto v = verify_packing(fam);
  ctx.check("packing.hamming", v.hamming_ok,
            "min distance " + std::to_string(v.min_hamming) + ", required " + std::to_string(v.required_hamming));
  ctx.check("packing.size", v.size_ok, "M = " + std::to_string(v.size) + ", required " + std::to_string(v.required_size));
  ctx.check("packing.separation", v.separation_ok,
            "min ||f_k - f_l||^2 = " + g(v.min_separation_sq) + " vs 4 eps = " + g(4 * eps) + ", identity error " +
                g(v.identity_error));
  const auto kl = kl_radius(fam, double(n), sigma);
  ctx.check("kl_radius", kl.within, "radius " + g(kl.value) + " vs 16 n eps / sigma^2 = " + g(kl.alpha_star));

  const auto rep = minimax_eval(hook, model, fam, n, trials, sigma, derive_seed(ctx.cfg.seed, kMinimax), ctx.jobs);
  ctx.check("failure_floor", rep.pass,
            "max failure " + g(rep.max_failure) + ", floor " + g(rep.floor) +
                (rep.floor_positive ? "" : " (floor not positive, comparison vacuous)"));

  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < rep.failure.size(); ++k) rows.push_back({double(k), rep.failure[k], rep.misclassified[k]});
  auto& art = ctx.result.artifacts;
  art.add_csv("minimax.csv", {"member", "failure", "misclassified"}, rows);

  std::ostringstream pj;
  write_packing_json(pj, fam);
  Json pack = ctx.header();
  pack["family"] = Json::parse(pj.str());
  art.add_json("packing.json", pack);

  Json j = ctx.header();
  j["model"] = model.describe();
  j["index"] = index_json(idx);
  j["n"] = n;
  j["sigma"] = sigma;
  j["epsilon"] = eps;
  j["m"] = fam.m;
  j["M"] = fam.size();
  j["estimator"] = est;
  j["kl_radius"] = {{"value", kl.value}, {"alpha_star", kl.alpha_star}};
  j["trials"] = trials;
  j["max_failure"] = rep.max_failure;
  j["max_misclassified"] = rep.max_misclassified;
  j["floor"] = rep.floor;
  j["floor_positive"] = rep.floor_positive;
  j["assertions"] = ctx.assertions_json();
  art.add_json("minimax.json", j);
}

// ---------------------------------------------------------------- assumptions

std::string condition_slug(const std::string& name) {
  if (name == "t/phi nondecreasing") return "t_over_phi_nondecreasing";
  if (name == "phi/psi nondecreasing") return "phi_over_psi_nondecreasing";
  if (name == "t/psi concave") return "t_over_psi_concave";
  if (name.rfind("phi Delta2", 0) == 0) return "phi_delta2";
  if (name.rfind("psi Delta2", 0) == 0) return "psi_delta2";
  std::string out;
  for (char ch : name) out += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
  return out;
}

void run_assumptions(Context& ctx) {
  const Section& root = ctx.root;
  allow_top(root, {"model", "index", "assumptions"});
  IndexTriple idx = parse_index(root);
  std::optional<SpectralModel> model;
  if (root.has("model")) model = parse_model(root, idx);
  std::vector<double> grid = default_grid(1e-8, 1.0);
  std::vector<double> s_grid = log_grid(1.0, 1e6, 512);
  if (auto as = root.optional_child("assumptions")) {
    as->allow({"grid", "s_grid"});
    if (as->has("grid")) grid = parse_log_grid(as->child("grid"));
    if (as->has("s_grid")) s_grid = parse_log_grid(as->child("s_grid"));
  }

  const auto rep = check_growth_assumptions(idx.phi, idx.psi, grid);
  Json conds;
  for (const auto& [name, c] : rep.conditions) {
    ctx.check(condition_slug(name), c.holds,
              name + (c.holds ? ", margin " + g(c.margin) : ": witness t = " + g(c.witness) + ", margin " + g(c.margin)));
    conds[name] = {{"holds", c.holds}, {"witness", c.witness}, {"margin", c.margin}};
  }
  const auto d2 = check_delta2(idx.s, s_grid);
  ctx.check("s_delta2", !d2.failed,
            "D1 " + g(d2.d1) + ", D2 " + g(d2.d2) + (d2.failed ? ": " + d2.reason + " at " + g(d2.witness) : ""));

  Json j = ctx.header();
  j["index"] = index_json(idx);
  j["grid"] = {{"lo", grid.front()}, {"hi", grid.back()}, {"count", grid.size()}};
  j["conditions"] = conds;
  j["delta2_phi"] = {{"d1", rep.delta2_phi.d1}, {"d2", rep.delta2_phi.d2}};
  j["delta2_psi"] = {{"d1", rep.delta2_psi.d1}, {"d2", rep.delta2_psi.d2}};
  j["delta2_s"] = {{"d1", d2.d1}, {"d2", d2.d2}, {"failed", d2.failed}};
  j["indices_phi"] = {{"alpha", rep.indices_phi.alpha}, {"beta", rep.indices_phi.beta}};
  j["indices_psi"] = {{"alpha", rep.indices_psi.alpha}, {"beta", rep.indices_psi.beta}};

  std::optional<bool> summable;
  if (auto pw = idx.s.as_power()) summable = pw->second > 1.0;
  if (summable) {
    j["s_summable"] = *summable;
    if (!*summable) ctx.note("sum 1/s(n) diverges for s = " + idx.s.describe() + "; flagged, not enforced");
  } else {
    j["s_summable"] = "unknown";
  }
  if (model) {
    const auto tail = model->tail(idx.psi);
    j["model"] = model->describe();
    j["psi_tail"] = {{"head", tail.head}, {"tail", std::isfinite(tail.tail) ? Json(tail.tail) : Json("diverges")}};
    if (!std::isfinite(tail.tail)) ctx.note("psi tail beyond the truncation diverges for " + model->describe());
  }

  std::vector<std::vector<double>> rows;
  for (double t : grid) rows.push_back({t, idx.phi.raw(t), idx.psi.raw(t), idx.s.raw(t)});
  j["assertions"] = ctx.assertions_json();
  ctx.result.artifacts.add_json("assumptions.json", j);
  ctx.result.artifacts.add_csv("index_functions.csv", {"t", "phi", "psi", "s"}, rows);
}

}  // namespace

bool RunResult::pass() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

RunResult execute(const Config& config, unsigned jobs) {
  Context ctx{config, config.root(), std::max(1u, jobs), RunResult{}};
  ctx.result.experiment = config.experiment;
  ctx.result.artifacts = ArtifactSet(config.digest);
  if (config.experiment == "rates") run_rates(ctx);
  else if (config.experiment == "bounds") run_bounds(ctx);
  else if (config.experiment == "capacity") run_capacity(ctx);
  else if (config.experiment == "rearrangement") run_rearrangement(ctx);
  else if (config.experiment == "minimax") run_minimax(ctx);
  else if (config.experiment == "assumptions") run_assumptions(ctx);
  else throw ConfigError(config.path, 0, "experiment", "unknown experiment '" + config.experiment + "'");
  if (ctx.result.assertions.empty()) {
    throw ConfigError(config.path, 0, config.experiment, "the configuration enables no checks");
  }
  return std::move(ctx.result);
}

void print_summary(std::ostream& out, const RunResult& result) {
  for (const auto& a : result.assertions) out << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << a.detail << '\n';
  for (const auto& n : result.notes) out << "NOTE " << n << '\n';
}

int run_command(const std::string& config_path, const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const Config cfg = load_config(config_path, seed_from_environment());
    const RunResult res = execute(cfg, options.jobs);
    print_summary(out, res);
    std::string dir = options.out_dir;
    if (dir.empty()) dir = cfg.output.empty() ? "hslab-out/" + cfg.experiment : cfg.output;
    const auto written = res.artifacts.commit(dir);
    out << "wrote " << written.size() << " artifacts to " << dir << '\n';
    out << (res.pass() ? "OK" : "FAILED") << ' ' << cfg.experiment << ": "
        << std::count_if(res.assertions.begin(), res.assertions.end(), [](const Assertion& a) { return a.pass; })
        << '/' << res.assertions.size() << " assertions passed\n";
    return res.exit_code();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const YAML::Exception& e) {
    err << "config error: " << config_path << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace hslab::cli

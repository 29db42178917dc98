#include "hslab/cli/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hslab/cli/artifacts.hpp"
#include "hslab/grid.hpp"

namespace hslab::cli {

namespace {

std::string format_error(const std::string& file, int line, const std::string& field, const std::string& what) {
  std::string out = file;
  if (line > 0) out += ":" + std::to_string(line);
  if (!field.empty()) out += ": field '" + field + "'";
  return out + ": " + what;
}

}  // namespace

ConfigError::ConfigError(const std::string& file, int line, const std::string& field, const std::string& what)
    : Error(format_error(file, line, field, what)), line_(line), field_(field) {}

Section::Section(YAML::Node node, std::string path, std::string file)
    : node_(std::move(node)), path_(std::move(path)), file_(std::move(file)) {
  if (!node_.IsMap()) throw ConfigError(file_, line(), path_, "expected a mapping");
}

int Section::line() const { return node_.Mark().is_null() ? 0 : node_.Mark().line + 1; }

std::string Section::field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

void Section::fail(const std::string& key, const std::string& what) const {
  int ln = line();
  if (!key.empty() && node_[key] && !node_[key].Mark().is_null()) ln = node_[key].Mark().line + 1;
  throw ConfigError(file_, ln, key.empty() ? path_ : field(key), what);
}

bool Section::has(const std::string& key) const { return static_cast<bool>(node_[key]); }

YAML::Node Section::at(const std::string& key) const {
  YAML::Node n = node_[key];
  if (!n) fail("", "missing required field '" + field(key) + "'");
  if (n.IsNull()) fail(key, "value is empty");
  return n;
}

void Section::allow(const std::vector<std::string>& keys) const {
  for (const auto& kv : node_) {
    const auto k = kv.first.as<std::string>();
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError(file_, kv.first.Mark().line + 1, field(k), "unknown field");
    }
  }
}

Section Section::child(const std::string& key) const {
  YAML::Node n = at(key);
  if (!n.IsMap()) fail(key, "expected a mapping");
  return Section(n, field(key), file_);
}

std::optional<Section> Section::optional_child(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return child(key);
}

std::vector<Section> Section::list(const std::string& key) const {
  YAML::Node n = at(key);
  if (!n.IsSequence()) fail(key, "expected a list");
  std::vector<Section> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string p = field(key) + "[" + std::to_string(i) + "]";
    if (!n[i].IsMap()) throw ConfigError(file_, n[i].Mark().line + 1, p, "expected a mapping");
    out.emplace_back(n[i], p, file_);
  }
  return out;
}

namespace {

double scalar_number(const YAML::Node& n, const std::function<void(const std::string&)>& fail) {
  if (!n.IsScalar()) fail("expected a number");
  const std::string s = n.Scalar();
  if (s == ".inf" || s == "inf") return std::numeric_limits<double>::infinity();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE || std::isnan(v)) fail("'" + s + "' is not a number");
  return v;
}

std::size_t scalar_count(const YAML::Node& n, const std::function<void(const std::string&)>& fail) {
  const double v = scalar_number(n, fail);
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e15) fail("expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

double Section::number(const std::string& key) const {
  return scalar_number(at(key), [&](const std::string& w) { fail(key, w); });
}

double Section::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::size_t Section::count(const std::string& key) const {
  return scalar_count(at(key), [&](const std::string& w) { fail(key, w); });
}

std::size_t Section::count(const std::string& key, std::size_t fallback) const {
  return has(key) ? count(key) : fallback;
}

std::string Section::text(const std::string& key) const {
  YAML::Node n = at(key);
  if (!n.IsScalar()) fail(key, "expected a string");
  return n.Scalar();
}

std::string Section::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

bool Section::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = text(key);
  if (s == "true" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "no" || s == "off") return false;
  fail(key, "expected true or false");
}

std::vector<double> Section::numbers(const std::string& key) const {
  YAML::Node n = at(key);
  if (!n.IsSequence()) fail(key, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    out.push_back(scalar_number(n[i], [&](const std::string& w) { fail(key, w + " at position " + std::to_string(i)); }));
  }
  return out;
}

std::vector<std::size_t> Section::counts(const std::string& key) const {
  YAML::Node n = at(key);
  if (!n.IsSequence()) fail(key, "expected a list of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    out.push_back(scalar_count(n[i], [&](const std::string& w) { fail(key, w + " at position " + std::to_string(i)); }));
  }
  return out;
}

Section Config::root() const { return Section(node_, "", path); }

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"rates",   "bounds",  "capacity",
                                                 "rearrangement", "minimax", "assumptions"};
  return names;
}

Config parse_config(const std::string& text, const std::string& path, std::optional<std::uint64_t> seed_override) {
  Config c;
  c.path = path;
  c.text = text;
  try {
    c.node_ = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path, e.mark.is_null() ? 0 : e.mark.line + 1, "", e.msg);
  }
  if (!c.node_ || c.node_.IsNull()) throw ConfigError(path, 0, "", "config is empty");
  if (!c.node_.IsMap()) throw ConfigError(path, c.node_.Mark().line + 1, "", "top level must be a mapping");

  const Section root = c.root();
  c.experiment = root.text("experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    root.fail("experiment", "unknown experiment '" + c.experiment +
                                "' (expected rates, bounds, capacity, rearrangement, minimax or assumptions)");
  }
  c.seed = root.has("seed") ? static_cast<std::uint64_t>(root.count("seed")) : 1;
  c.output = root.text("output", "");
  std::string hashed = text;
  if (seed_override) {
    c.seed = *seed_override;
    c.seed_overridden = true;
    hashed += "\nHSLAB_SEED=" + std::to_string(*seed_override) + "\n";
  }
  c.digest = sha256_hex(hashed);
  return c;
}

Config load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "", "cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, seed_override);
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* v = std::getenv("HSLAB_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0' || errno == ERANGE || v[0] == '-') {
    throw ConfigError("HSLAB_SEED", 0, "", "'" + std::string(v) + "' is not an unsigned integer");
  }
  return static_cast<std::uint64_t>(s);
}

IndexFunction parse_index_function(const Section& s) {
  const std::string fam = s.text("family");
  try {
    if (fam == "power") {
      s.allow({"family", "rho", "coef", "upper"});
      const double rho = s.number("rho");
      if (!(rho > 0.0)) s.fail("rho", "must be positive");
      return IndexFunction::power(rho, s.number("upper", IndexFunction::kUnbounded), s.number("coef", 1.0));
    }
    if (fam == "power_log") {
      s.allow({"family", "rho", "log_exponent", "upper"});
      return IndexFunction::power_log(s.number("rho"), s.number("log_exponent"),
                                      s.number("upper", IndexFunction::kUnbounded));
    }
    if (fam == "table") {
      s.allow({"family", "t", "values"});
      return IndexFunction::table(s.numbers("t"), s.numbers("values"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    s.fail("", e.what());
  }
  s.fail("family", "unknown index function family '" + fam + "' (expected power, power_log or table)");
}

RadialProfile parse_profile(const Section& s) {
  const std::string fam = s.text("family");
  try {
    if (fam == "gaussian" || fam == "exponential" || fam == "identity") {
      s.allow({"family", "dilation"});
      auto p = fam == "gaussian" ? RadialProfile::gaussian()
               : fam == "exponential" ? RadialProfile::exponential()
                                      : RadialProfile::identity();
      return s.has("dilation") ? p.dilate(s.number("dilation")) : p;
    }
    if (fam == "matern") {
      s.allow({"family", "nu", "length", "dilation"});
      auto p = RadialProfile::matern(s.number("nu"), s.number("length", 1.0));
      return s.has("dilation") ? p.dilate(s.number("dilation")) : p;
    }
    if (fam == "power_decay") {
      s.allow({"family", "k", "dilation"});
      auto p = RadialProfile::power_decay(s.number("k"));
      return s.has("dilation") ? p.dilate(s.number("dilation")) : p;
    }
    if (fam == "table") {
      s.allow({"family", "r", "values"});
      return RadialProfile::table(s.numbers("r"), s.numbers("values"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    s.fail("", e.what());
  }
  s.fail("family", "unknown profile family '" + fam +
                       "' (expected gaussian, exponential, matern, power_decay, table or identity)");
}

std::vector<double> parse_log_grid(const Section& s) {
  s.allow({"lo", "hi", "count"});
  const double lo = s.number("lo"), hi = s.number("hi");
  const std::size_t n = s.count("count");
  if (!(lo > 0.0) || !(hi > lo)) s.fail("hi", "grid needs 0 < lo < hi");
  if (n < 2) s.fail("count", "grid needs at least two points");
  return log_grid(lo, hi, n);
}

IndexTriple parse_index(const Section& root, bool need_phi) {
  IndexTriple out;
  const Section idx = root.child("index");
  idx.allow({"phi", "psi", "s"});
  if (need_phi || idx.has("phi")) out.phi = parse_index_function(idx.child("phi"));
  out.psi = parse_index_function(idx.child("psi"));
  if (idx.has("s")) {
    out.s = parse_index_function(idx.child("s"));
    out.s_declared = true;
  }
  return out;
}

SpectralModel parse_model(const Section& root, IndexTriple& index) {
  const Section m = root.child("model");
  m.allow({"basis", "terms", "gamma", "pairing", "eigenvalues"});
  const std::string basis = m.text("basis");
  BasisFamily fam;
  if (basis == "trigonometric") {
    fam = BasisFamily::trigonometric;
  } else if (basis == "gegenbauer") {
    fam = BasisFamily::gegenbauer;
  } else {
    m.fail("basis", "unknown basis '" + basis + "' (expected trigonometric or gegenbauer)");
  }
  ModelOptions opt;
  opt.gamma = m.number("gamma", fam == BasisFamily::gegenbauer ? 0.5 : 1.0);
  if (fam == BasisFamily::gegenbauer && !(opt.gamma > -0.5)) m.fail("gamma", "must exceed -1/2");
  const std::string pairing = m.text("pairing", "per_function");
  if (pairing == "per_function") {
    opt.pairing = Pairing::per_function;
  } else if (pairing == "stationary") {
    opt.pairing = Pairing::stationary;
  } else {
    m.fail("pairing", "expected per_function or stationary");
  }
  const std::size_t terms = m.count("terms", 512);
  if (terms < 1) m.fail("terms", "must be at least 1");
  if (!index.s_declared) {
    index.s = fam == BasisFamily::trigonometric ? IndexFunction::power(1.0)
                                                : IndexFunction::power(2.0 * opt.gamma + 1.0);
  }

  EigenSpec spec;
  const Section ev = m.child("eigenvalues");
  const std::string law = ev.text("law");
  if (law == "power") {
    ev.allow({"law", "decay"});
    const double decay = ev.number("decay");
    if (!(decay > 0.0)) ev.fail("decay", "must be positive");
    spec = EigenSpec::power(decay);
  } else if (law == "induced") {
    ev.allow({"law"});
    spec = EigenSpec::induced(index.psi, index.s);
  } else if (law == "values") {
    ev.allow({"law", "values"});
    auto v = ev.numbers("values");
    if (v.size() < terms) ev.fail("values", "needs at least model.terms entries");
    spec = EigenSpec::explicit_values(std::move(v));
  } else {
    ev.fail("law", "unknown eigenvalue law '" + law + "' (expected power, induced or values)");
  }
  try {
    return SpectralModel::build(fam, terms, spec, opt);
  } catch (const Error& e) {
    m.fail("", e.what());
  }
}

TargetSpec parse_target(const Section& root, const SpectralModel& model, const IndexFunction& phi,
                        std::uint64_t seed) {
  const Section t = root.child("target");
  const std::string kind = t.text("kind");
  try {
    if (kind == "power_decay") {
      t.allow({"kind", "exponent", "norm"});
      return TargetSpec::power_decay(model, phi, t.number("exponent"), t.number("norm", 1.0));
    }
    if (kind == "random") {
      t.allow({"kind", "norm"});
      Rng rng(derive_seed(seed, 0x7a7));
      return TargetSpec::random(model, phi, rng, t.number("norm", 1.0));
    }
    if (kind == "coefficients") {
      t.allow({"kind", "a"});
      auto a = t.numbers("a");
      a.resize(model.size(), 0.0);
      return TargetSpec::from_coefficients(model, phi, std::move(a));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    t.fail("", e.what());
  }
  t.fail("kind", "unknown target kind '" + kind + "' (expected power_decay, random or coefficients)");
}

}  // namespace hslab::cli

#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hslab/errors.hpp"
#include "hslab/index_function.hpp"
#include "hslab/radial.hpp"
#include "hslab/spectral_model.hpp"

namespace hslab::cli {

// Schema violation; maps to exit code 2.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& file, int line, const std::string& field, const std::string& what);
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

// A YAML mapping with its dotted path, for diagnostics.
class Section {
 public:
  Section(YAML::Node node, std::string path, std::string file);

  const std::string& path() const { return path_; }
  int line() const;
  bool has(const std::string& key) const;
  // Rejects keys outside the list.
  void allow(const std::vector<std::string>& keys) const;

  Section child(const std::string& key) const;
  std::optional<Section> optional_child(const std::string& key) const;
  std::vector<Section> list(const std::string& key) const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

 private:
  YAML::Node at(const std::string& key) const;
  std::string field(const std::string& key) const;

  YAML::Node node_;
  std::string path_;
  std::string file_;
};

struct Config {
  std::string path;
  std::string text;
  std::string experiment;
  std::string digest;  // sha256 of the file bytes and any seed override
  std::uint64_t seed = 1;
  bool seed_overridden = false;
  std::string output;  // empty when the file does not name one

  Section root() const;

 private:
  friend Config parse_config(const std::string& text, const std::string& path,
                             std::optional<std::uint64_t> seed_override);
  YAML::Node node_;
};

const std::vector<std::string>& experiment_names();

// Throws ConfigError for unreadable files, YAML syntax errors and unknown
// experiments. Section-level validation happens when an experiment runs.
Config parse_config(const std::string& text, const std::string& path, std::optional<std::uint64_t> seed_override);
Config load_config(const std::string& path, std::optional<std::uint64_t> seed_override);

// Reads HSLAB_SEED; malformed values are a ConfigError.
std::optional<std::uint64_t> seed_from_environment();

// {family: power, rho, coef?, upper?} | {family: power_log, rho, log_exponent, upper?}
// | {family: table, t: [...], values: [...]}
IndexFunction parse_index_function(const Section& s);
// {family: gaussian | exponential | identity}, {family: matern, nu, length?},
// {family: power_decay, k}, {family: table, r: [...], values: [...]}
RadialProfile parse_profile(const Section& s);

// {lo, hi, count} on a log scale.
std::vector<double> parse_log_grid(const Section& s);

struct IndexTriple {
  IndexFunction phi = IndexFunction::power(0.75);
  IndexFunction psi = IndexFunction::power(0.5);
  IndexFunction s = IndexFunction::power(1.0);
  bool s_declared = false;
};

// index: {phi, psi, s?}; s defaults to the basis growth of the model. phi may
// be left out when the experiment does not use it.
IndexTriple parse_index(const Section& root, bool need_phi = true);

// model: {basis, terms, gamma?, pairing?, eigenvalues: {law: power, decay} |
// {law: induced} | {law: values, values}}
SpectralModel parse_model(const Section& root, IndexTriple& index);

// target: {kind: power_decay, exponent, norm?} | {kind: random, norm?} |
// {kind: coefficients, a: [...]}
TargetSpec parse_target(const Section& root, const SpectralModel& model, const IndexFunction& phi,
                        std::uint64_t seed);

}  // namespace hslab::cli

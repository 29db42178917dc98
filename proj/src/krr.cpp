#include "hslab/krr.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <json.hpp>
#include <ostream>

#include "hslab/csv.hpp"
#include "hslab/errors.hpp"

namespace hslab {

namespace {

Eigen::Map<const Eigen::VectorXd> view(const std::vector<double>& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

}  // namespace

double FittedEstimator::operator()(const SpectralModel& model, double x) const {
  const auto e = model.basis(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < coefficients.size(); ++i) acc += coefficients[i] * e[i];
  return acc;
}

double FittedEstimator::dual_eval(const SpectralModel& model, double x) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) acc += alpha[j] * model.kernel(this->x[j], x);
  return acc;
}

FittedEstimator fit(const Dataset& data, const SpectralModel& model, double lambda) {
  const std::size_t n = data.size();
  if (n < 1) throw DomainError("fit needs at least one sample");
  if (n > kMaxSamples) throw DomainError("fit supports at most 4096 samples");
  if (!(lambda > 0.0)) throw DomainError("regularization parameter must be positive");
  if (data.y.size() != n) throw DomainError("dataset x and y differ in length");

  const Eigen::MatrixXd f = model.features(data.x);
  const Eigen::VectorXd mu = view(model.eigenvalues());
  const Eigen::MatrixXd scaled = f * mu.cwiseSqrt().asDiagonal();
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nn, nn);
  a.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  a.diagonal().array() += static_cast<double>(n) * lambda;

  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-15)) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(a.selfadjointView<Eigen::Lower>());
    throw FactorizationError("K + n*lambda*I is numerically singular", ldlt.vectorD().minCoeff());
  }
  const Eigen::VectorXd alpha = llt.solve(view(data.y));

  FittedEstimator est;
  est.lambda = lambda;
  est.x = data.x;
  est.alpha.assign(alpha.data(), alpha.data() + alpha.size());
  const Eigen::VectorXd c = mu.asDiagonal() * (f.transpose() * alpha);
  est.coefficients.assign(c.data(), c.data() + c.size());
  return est;
}

double krr_objective(const Dataset& data, const SpectralModel& model, const std::vector<double>& alpha,
                     double lambda) {
  const Eigen::MatrixXd k = model.gram(data.x);
  const Eigen::VectorXd a = view(alpha);
  const Eigen::VectorXd fitted = k * a;
  const double fit_term = (fitted - view(data.y)).squaredNorm() / static_cast<double>(data.size());
  return fit_term + lambda * a.dot(fitted);
}

std::vector<double> population_solution(const SpectralModel& model, const TargetSpec& target, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  const auto& c = target.coefficients();
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double m = model.mu(i);
    out[i] = std::isinf(lambda) ? 0.0 : c[i] * m / (m + lambda);
  }
  return out;
}

double l2_error(const SpectralModel& model, const std::vector<double>& coeffs, const TargetSpec& target) {
  const auto& c = target.coefficients();
  if (coeffs.size() > model.size()) throw DomainError("more coefficients than basis functions");
  double acc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double d = (i < coeffs.size() ? coeffs[i] : 0.0) - c[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double l2_error(const SpectralModel& model, const FittedEstimator& est, const TargetSpec& target) {
  return l2_error(model, est.coefficients, target);
}

double sup_error(const SpectralModel& model, const std::vector<double>& coeffs, const TargetSpec& target,
                 const std::vector<double>& grid) {
  std::vector<double> diff(model.size(), 0.0);
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = (i < coeffs.size() ? coeffs[i] : 0.0) - target.coefficients()[i];
  }
  std::vector<double> e(model.size());
  double best = 0.0;
  for (double x : grid) {
    model.basis(x, e.data(), e.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) acc += diff[i] * e[i];
    best = std::max(best, std::abs(acc));
  }
  return best;
}

EffectiveDimension effective_dimension(const SpectralModel& model, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("effective dimension needs lambda > 0");
  EffectiveDimension out;
  if (std::isinf(lambda)) return out;
  const auto t = model.tail(IndexFunction::callable("t/(t+lambda)", [lambda](double m) { return m / (m + lambda); }));
  out.value = t.head;
  out.tail = t.tail;
  return out;
}

void write_estimator_csv(std::ostream& out, const FittedEstimator& est) {
  out << "j,x,alpha\n";
  for (std::size_t j = 0; j < est.alpha.size(); ++j) {
    write_csv_row(out, {static_cast<double>(j + 1), est.x[j], est.alpha[j]});
  }
}

void write_estimator_json(std::ostream& out, const FittedEstimator& est, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["lambda"] = est.lambda;
  j["n"] = est.alpha.size();
  j["seed"] = seed;
  out << j.dump(2) << '\n';
}

}  // namespace hslab

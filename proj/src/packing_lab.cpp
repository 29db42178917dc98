#include "hslab/packing_lab.hpp"

#include <fcntl.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hslab/errors.hpp"
#include "hslab/krr.hpp"
#include "hslab/rate_lab.hpp"
#include "hslab/rng.hpp"

namespace hslab {

namespace {

BitString block_mask(std::size_t m) {
  return m >= 64 ? ~BitString{0} : (BitString{1} << m) - 1;
}

void check_block(std::size_t m) {
  if (m < kMinBlock) {
    throw PreconditionError("block length must be >= " + std::to_string(kMinBlock), static_cast<double>(m));
  }
  if (m > kMaxBlock) throw DomainError("block length must be <= " + std::to_string(kMaxBlock));
}

// Upper bounds valid for every string in {0,1}^m.
struct BlockBounds {
  double norm_phi = 0.0;
  double norm_sup = 0.0;
};

BlockBounds block_bounds(const SpectralModel& model, const Eigen::MatrixXd& grid_features, const IndexFunction& phi,
                         std::size_t m, double epsilon) {
  const double scale_sq = 32.0 * epsilon / static_cast<double>(m);
  BlockBounds b;
  double acc = 0.0;
  for (std::size_t i = m; i < 2 * m; ++i) {
    const double v = phi(model.mu(i));
    if (!(v > 0.0)) throw DomainError("phi(mu_" + std::to_string(i + 1) + ") must be positive");
    acc += 1.0 / v;
  }
  b.norm_phi = std::sqrt(scale_sq * acc);
  const auto block = grid_features.middleCols(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  b.norm_sup = std::sqrt(scale_sq) * block.cwiseAbs().rowwise().sum().maxCoeff();
  return b;
}

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t k = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (k < 0) {
      if (errno == EINTR) continue;
      // The estimator may stop reading early; its exit status decides.
      return;
    }
    off += static_cast<std::size_t>(k);
  }
}

std::vector<double> parse_coefficients(const std::string& text) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw Error("estimator printed a non-numeric token '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int hamming(BitString a, BitString b) {
  return std::popcount(a ^ b);
}

std::string to_bits(BitString w, std::size_t m) {
  std::string s(m, '0');
  for (std::size_t i = 0; i < m; ++i) {
    if ((w >> i) & 1U) s[i] = '1';
  }
  return s;
}

std::size_t required_distance(std::size_t m) {
  return (m + 7) / 8;
}

std::size_t required_size(std::size_t m) {
  return static_cast<std::size_t>(std::ceil(std::exp2(static_cast<double>(m) / 8.0)));
}

std::vector<BitString> gilbert_varshamov(std::size_t m, std::optional<std::size_t> target, std::uint64_t seed,
                                         std::size_t budget) {
  check_block(m);
  const std::size_t d = required_distance(m);
  const std::size_t want = target.value_or(required_size(m));
  if (want < 1) throw DomainError("packing size must be >= 1");
  if (static_cast<double>(want) > std::exp2(static_cast<double>(d))) {
    throw DomainError("packing size above 2^{ceil(m/8)} requested");
  }
  Rng rng(seed);
  const BitString mask = block_mask(m);
  std::vector<BitString> out;
  std::size_t rejected = 0;
  while (out.size() < want) {
    const BitString w = rng() & mask;
    const bool far = std::all_of(out.begin(), out.end(),
                                 [&](BitString v) { return static_cast<std::size_t>(hamming(v, w)) >= d; });
    if (far) {
      out.push_back(w);
    } else if (++rejected > budget) {
      throw SearchBudgetError("Gilbert-Varshamov search found " + std::to_string(out.size()) + " of " +
                              std::to_string(want) + " strings; retry with another seed");
    }
  }
  if (min_pairwise_hamming(out, m) < d) throw Error("packing verification failed");
  return out;
}

std::size_t min_pairwise_hamming(const std::vector<BitString>& strings, std::size_t m) {
  std::size_t best = m + 1;
  for (std::size_t k = 0; k < strings.size(); ++k) {
    for (std::size_t l = k + 1; l < strings.size(); ++l) {
      best = std::min(best, static_cast<std::size_t>(hamming(strings[k], strings[l])));
    }
  }
  return best;
}

std::vector<double> PackingFamily::coefficients(std::size_t j) const {
  std::vector<double> c(model_size, 0.0);
  const BitString w = strings.at(j);
  for (std::size_t i = 0; i < m; ++i) {
    if ((w >> i) & 1U) c[m + i] = scale;
  }
  return c;
}

double PackingFamily::norm_sq(std::size_t j) const {
  return 32.0 * epsilon / static_cast<double>(m) * std::popcount(strings.at(j));
}

double PackingFamily::distance_sq(std::size_t k, std::size_t l) const {
  return 32.0 * epsilon / static_cast<double>(m) * hamming(strings.at(k), strings.at(l));
}

PackingFamily build_packing(const SpectralModel& model, double epsilon, const PackingOptions& options) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be > 0; the family would be degenerate");
  if (!(epsilon < 1.0)) throw DomainError("epsilon must be < 1");
  const std::size_t m_cap = std::min(kMaxBlock, model.size() / 2);
  if (m_cap < kMinBlock) {
    throw DomainError("model needs at least " + std::to_string(2 * kMinBlock) + " terms for a packing");
  }
  const auto grid = model.grid(options.grid_points);
  const Eigen::MatrixXd features = model.features(grid);
  auto violation = [&](std::size_t m) -> std::string {
    const auto b = block_bounds(model, features, options.phi, m, epsilon);
    if (b.norm_phi > options.B_phi) return "phi-norm " + std::to_string(b.norm_phi) + " > B_phi";
    if (b.norm_sup > options.B_inf) return "sup-norm " + std::to_string(b.norm_sup) + " > B_inf";
    return {};
  };
  std::size_t m = 0;
  if (options.m) {
    m = *options.m;
    check_block(m);
    if (2 * m > model.size()) throw DomainError("block length needs 2m <= N");
    if (auto v = violation(m); !v.empty()) throw BudgetError("budget violated at m=" + std::to_string(m) + ": " + v);
  } else {
    if (auto v = violation(kMinBlock); !v.empty()) {
      throw BudgetError("budget violated at the smallest block m=9: " + v);
    }
    m = kMinBlock;
    while (m < m_cap && violation(m + 1).empty()) ++m;
  }

  PackingFamily fam;
  fam.m = m;
  fam.epsilon = epsilon;
  fam.scale = 2.0 * std::sqrt(8.0 * epsilon / static_cast<double>(m));
  fam.model_size = model.size();
  fam.B_phi = options.B_phi;
  fam.B_inf = options.B_inf;
  fam.strings = gilbert_varshamov(m, std::nullopt, options.seed);

  const auto M = static_cast<Eigen::Index>(fam.size());
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), M);
  for (Eigen::Index j = 0; j < M; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if ((fam.strings[static_cast<std::size_t>(j)] >> i) & 1U) {
        omega(static_cast<Eigen::Index>(i), j) = fam.scale;
        acc += fam.scale * fam.scale / options.phi(model.mu(m + i));
      }
    }
    fam.norm_phi_max = std::max(fam.norm_phi_max, std::sqrt(acc));
  }
  const Eigen::MatrixXd values =
      features.middleCols(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) * omega;
  fam.norm_sup_max = values.cwiseAbs().maxCoeff();
  if (options.psi && options.s) {
    const double s_tilde = options.s->inverse(1.0 / (*options.psi)(options.phi.inverse(epsilon)));
    fam.realized_constant = static_cast<double>(m) / s_tilde;
  }
  return fam;
}

PackingVerification verify_packing(const PackingFamily& family) {
  PackingVerification v;
  const std::size_t M = family.size();
  v.size = M;
  v.required_size = required_size(family.m);
  v.required_hamming = required_distance(family.m);
  v.min_hamming = min_pairwise_hamming(family.strings, family.m);
  v.min_separation_sq = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> coeffs(M);
  for (std::size_t j = 0; j < M; ++j) coeffs[j] = family.coefficients(j);
  for (std::size_t k = 0; k < M; ++k) {
    for (std::size_t l = k + 1; l < M; ++l) {
      double acc = 0.0;
      for (std::size_t i = 0; i < family.model_size; ++i) acc += (coeffs[k][i] - coeffs[l][i]) * (coeffs[k][i] - coeffs[l][i]);
      v.min_separation_sq = std::min(v.min_separation_sq, acc);
      v.identity_error = std::max(v.identity_error, std::abs(acc - family.distance_sq(k, l)));
    }
  }
  v.hamming_ok = v.min_hamming >= v.required_hamming;
  v.size_ok = M >= v.required_size;
  // (32 eps / m) H >= 4 eps  <=>  8 H >= m, checked in integers.
  v.separation_ok = 8 * v.min_hamming >= family.m && v.identity_error <= 1e-12 * 32.0 * family.epsilon;
  return v;
}

KlRadius kl_radius(const PackingFamily& family, double n, double sigma) {
  if (!(n >= 0.0)) throw DomainError("sample size must be >= 0");
  if (!(sigma > 0.0)) throw DomainError("noise level must be > 0");
  KlRadius r;
  if (n == 0.0 || std::isinf(sigma) || family.size() == 0) return r;
  double total = 0.0;
  for (std::size_t j = 0; j < family.size(); ++j) total += family.norm_sq(j);
  r.value = n / (2.0 * sigma * sigma * static_cast<double>(family.size())) * total;
  r.alpha_star = 16.0 * n * family.epsilon / (sigma * sigma);
  r.within = r.value <= r.alpha_star * (1.0 + 1e-12);
  return r;
}

double minimax_floor(std::size_t M, double n, double epsilon, double sigma) {
  if (M < 2) return -std::numeric_limits<double>::infinity();
  const double logM = std::log(static_cast<double>(M));
  const double root = std::sqrt(static_cast<double>(M));
  return root / (1.0 + root) * (1.0 - 48.0 * n * epsilon / (sigma * sigma * logM) - 1.0 / (2.0 * logM));
}

double packing_epsilon(const IndexFunction& phi, const IndexFunction& psi, const IndexFunction& s, double n,
                       double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0, 1)");
  return tau * phi(schedule(phi, psi, s, n));
}

EstimatorHook krr_hook(const SpectralModel& model, double lambda) {
  return [&model, lambda](const Dataset& d) { return fit(d, model, lambda).coefficients; };
}

EstimatorHook zero_hook() {
  return [](const Dataset&) { return std::vector<double>{}; };
}

EstimatorHook least_squares_hook(const SpectralModel& model) {
  return [&model](const Dataset& d) {
    const Eigen::MatrixXd F = model.features(d.x);
    const Eigen::Map<const Eigen::VectorXd> y(d.y.data(), static_cast<Eigen::Index>(d.y.size()));
    const Eigen::VectorXd c = F.colPivHouseholderQr().solve(y);
    return std::vector<double>(c.data(), c.data() + c.size());
  };
}

EstimatorHook subprocess_hook(std::string command) {
  return [command = std::move(command)](const Dataset& d) {
    std::ostringstream csv;
    write_dataset_csv(csv, d);
    const std::string input = csv.str();
    int in_fds[2], out_fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, in_fds) != 0) {
      throw Error(std::string("socketpair failed: ") + std::strerror(errno));
    }
    if (::pipe2(out_fds, O_CLOEXEC) != 0) {
      ::close(in_fds[0]);
      ::close(in_fds[1]);
      throw Error(std::string("pipe failed: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
      for (int fd : {in_fds[0], in_fds[1], out_fds[0], out_fds[1]}) ::close(fd);
      throw Error(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
      ::dup2(in_fds[1], STDIN_FILENO);
      ::dup2(out_fds[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_fds[1]);
    ::close(out_fds[1]);
    std::thread writer([&] {
      write_all(in_fds[0], input);
      ::close(in_fds[0]);
    });
    std::string output;
    char buf[4096];
    for (;;) {
      const ssize_t k = ::read(out_fds[0], buf, sizeof buf);
      if (k < 0 && errno == EINTR) continue;
      if (k <= 0) break;
      output.append(buf, static_cast<std::size_t>(k));
    }
    ::close(out_fds[0]);
    writer.join();
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      throw Error("estimator command '" + command + "' exited with status " +
                  std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
    }
    return parse_coefficients(output);
  };
}

MinimaxReport minimax_eval(const EstimatorHook& hook, const SpectralModel& model, const PackingFamily& family,
                           std::size_t n, std::size_t trials, double sigma, std::uint64_t seed, unsigned jobs) {
  if (n < 1) throw DomainError("sample size must be >= 1");
  if (trials < 1) throw DomainError("need at least one trial");
  if (!(sigma > 0.0)) throw DomainError("noise level must be > 0");
  if (family.size() == 0) throw DomainError("empty packing family");
  if (family.model_size != model.size()) throw DomainError("family was built for a different model");
  const std::size_t M = family.size(), N = model.size(), m = family.m;
  std::vector<std::vector<double>> coeffs(M);
  std::vector<double> norms(M);
  for (std::size_t j = 0; j < M; ++j) {
    coeffs[j] = family.coefficients(j);
    norms[j] = family.norm_sq(j);
  }
  const std::size_t tasks = M * trials;
  std::vector<char> failed(tasks, 0), wrong(tasks, 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= tasks) return;
      const std::size_t j = task / trials, t = task % trials;
      try {
        Rng rng(derive_seed(seed, j, t));
        Dataset d;
        d.sigma = sigma;
        d.L = sigma;
        d.seed = derive_seed(seed, j, t);
        d.x = model.sample(rng, n);
        const Eigen::MatrixXd F = model.features(d.x);
        const Eigen::Map<const Eigen::VectorXd> c(coeffs[j].data(), static_cast<Eigen::Index>(N));
        const Eigen::VectorXd clean = F * c;
        std::normal_distribution<double> nd(0.0, 1.0);
        d.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) d.y[i] = clean(static_cast<Eigen::Index>(i)) + sigma * nd(rng);

        std::vector<double> est = hook(d);
        if (est.size() > N) throw Error("estimator returned more coefficients than the model has");
        est.resize(N, 0.0);
        double dist = 0.0, est_norm = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
          dist += (est[i] - coeffs[j][i]) * (est[i] - coeffs[j][i]);
          est_norm += est[i] * est[i];
        }
        failed[task] = dist >= family.epsilon;
        // ||f_D - f_k||^2 = ||f_D||^2 - 2 <f_D, f_k> + ||f_k||^2
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < M; ++k) {
          double inner = 0.0;
          for (std::size_t i = 0; i < m; ++i) {
            if ((family.strings[k] >> i) & 1U) inner += est[m + i];
          }
          const double dk = est_norm - 2.0 * family.scale * inner + norms[k];
          if (dk < best_d) {
            best_d = dk;
            best = k;
          }
        }
        wrong[task] = best != j;
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::make_exception_ptr(
              EstimatorError("estimator failed on member " + std::to_string(j) + ": " + e.what(), j));
        }
        next.store(tasks);
      }
    }
  };
  const unsigned workers = std::max(1u, jobs);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  MinimaxReport r;
  r.n = n;
  r.trials = trials;
  r.sigma = sigma;
  r.failure.assign(M, 0.0);
  r.misclassified.assign(M, 0.0);
  for (std::size_t task = 0; task < tasks; ++task) {
    r.failure[task / trials] += failed[task];
    r.misclassified[task / trials] += wrong[task];
  }
  for (std::size_t j = 0; j < M; ++j) {
    r.failure[j] /= static_cast<double>(trials);
    r.misclassified[j] /= static_cast<double>(trials);
  }
  r.max_failure = *std::max_element(r.failure.begin(), r.failure.end());
  r.max_misclassified = *std::max_element(r.misclassified.begin(), r.misclassified.end());
  r.floor = minimax_floor(M, static_cast<double>(n), family.epsilon, sigma);
  r.floor_positive = r.floor > 0.0;
  r.pass = !r.floor_positive || r.max_failure >= r.floor;
  return r;
}

void write_packing_json(std::ostream& out, const PackingFamily& family) {
  nlohmann::ordered_json j;
  j["m"] = family.m;
  j["epsilon"] = family.epsilon;
  j["scale"] = family.scale;
  j["size"] = family.size();
  j["model_size"] = family.model_size;
  j["B_phi"] = family.B_phi;
  j["B_inf"] = family.B_inf;
  j["norm_phi_max"] = family.norm_phi_max;
  j["norm_sup_max"] = family.norm_sup_max;
  j["min_hamming"] = min_pairwise_hamming(family.strings, family.m);
  j["required_hamming"] = required_distance(family.m);
  if (family.realized_constant) j["realized_constant"] = *family.realized_constant;
  auto& strings = j["strings"] = nlohmann::ordered_json::array();
  for (BitString w : family.strings) strings.push_back(to_bits(w, family.m));
  out << j.dump(2) << '\n';
}

}  // namespace hslab

#include "expertsurv/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "expertsurv/errors.hpp"

namespace expertsurv::mcmc {
namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Eigen::MatrixXd safe_cholesky(const Eigen::MatrixXd& cov) {
  const long d = cov.rows();
  Eigen::MatrixXd c = 0.5 * (cov + cov.transpose());
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) return llt.matrixL();
    const double bump = std::max(1e-8, 1e-6 * c.diagonal().cwiseAbs().maxCoeff()) * std::pow(10.0, attempt);
    c += bump * Eigen::MatrixXd::Identity(d, d);
  }
  return 0.1 * Eigen::MatrixXd::Identity(d, d);
}

struct ChainOutput {
  std::vector<std::vector<double>> draws;
  double acceptance = 0.0;
};

ChainOutput run_chain(const LogTarget& log_target, std::vector<double> x, const Eigen::MatrixXd& initial_cov,
                      const Config& cfg, int chain_index) {
  const long d = static_cast<long>(x.size());
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(chain_index), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double target = cfg.target_acceptance > 0.0 ? cfg.target_acceptance : (d == 1 ? 0.44 : 0.234);
  double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
  Eigen::MatrixXd chol = safe_cholesky(initial_cov);

  double lp = log_target(x);
  if (!std::isfinite(lp)) throw PreconditionError("chain " + std::to_string(chain_index) + " starts at a point of zero posterior density");

  // Welford accumulators over burn-in states
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(d, d);
  long n_seen = 0;
  const long refresh_from = std::max<long>(100, 10 * d);

  ChainOutput out;
  out.draws.reserve(static_cast<std::size_t>((cfg.iterations - cfg.burnin) / cfg.thin + 1));
  std::vector<double> proposal(static_cast<std::size_t>(d));
  Eigen::VectorXd eps(d);
  long accepted_post = 0;

  for (int it = 0; it < cfg.iterations; ++it) {
    const bool adapting = it < cfg.burnin;
    for (long k = 0; k < d; ++k) eps(k) = normal(rng);
    const Eigen::VectorXd step = std::exp(log_scale) * (chol * eps);
    for (long k = 0; k < d; ++k) proposal[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)] + step(k);
    double lp_new = log_target(proposal);
    if (std::isnan(lp_new)) lp_new = -std::numeric_limits<double>::infinity();
    const double log_alpha = lp_new - lp;
    const double alpha = log_alpha >= 0.0 ? 1.0 : std::exp(log_alpha);
    const bool accept = uniform01(rng) < alpha;
    if (accept) {
      x = proposal;
      lp = lp_new;
    }
    if (adapting) {
      log_scale += std::pow(static_cast<double>(it + 1), -0.6) * (alpha - target);
      log_scale = std::clamp(log_scale, -30.0, 10.0);
      ++n_seen;
      const Eigen::Map<const Eigen::VectorXd> xv(x.data(), d);
      const Eigen::VectorXd delta = xv - mean;
      mean += delta / static_cast<double>(n_seen);
      m2 += delta * (xv - mean).transpose();
      if (n_seen >= refresh_from && n_seen % 50 == 0) {
        const Eigen::MatrixXd cov = m2 / static_cast<double>(n_seen - 1) + 1e-8 * Eigen::MatrixXd::Identity(d, d);
        if (cov.allFinite() && cov.diagonal().minCoeff() > 0.0) {
          // pull the scale halfway back to the Gaussian optimum for the new covariance
          chol = safe_cholesky(cov);
          log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d))) +
                      0.5 * (log_scale - std::log(2.38 / std::sqrt(static_cast<double>(d))));
        }
      }
    } else {
      if (accept) ++accepted_post;
      if ((it - cfg.burnin) % cfg.thin == 0) out.draws.push_back(x);
    }
  }
  out.acceptance = static_cast<double>(accepted_post) / static_cast<double>(cfg.iterations - cfg.burnin);
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v, double m) {
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

void validate(const Config& c) {
  if (c.chains < 2) throw PreconditionError("MCMC needs at least 2 chains");
  if (c.burnin < 0) throw PreconditionError("burn-in must be nonnegative");
  if (c.iterations <= c.burnin) throw PreconditionError("iterations must exceed burn-in");
  if (c.thin < 1) throw PreconditionError("thinning interval must be at least 1");
}

std::vector<std::vector<double>> Chains::coordinate(std::size_t k) const {
  std::vector<std::vector<double>> out(draws.size());
  for (std::size_t c = 0; c < draws.size(); ++c) {
    out[c].reserve(draws[c].size());
    for (const auto& x : draws[c]) out[c].push_back(x[k]);
  }
  return out;
}

int thread_count(int requested, int jobs) {
  int n = requested > 0 ? requested : jobs;
  if (const char* env = std::getenv("EXPERT_EXTRAP_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min<int>(n, static_cast<int>(cap));
  }
  return std::max(1, std::min(n, std::max(1, jobs)));
}

Chains run_adaptive_metropolis(const LogTarget& log_target, const std::vector<std::vector<double>>& inits,
                               const Eigen::MatrixXd& initial_covariance, const Config& config) {
  validate(config);
  if (inits.size() != static_cast<std::size_t>(config.chains))
    throw PreconditionError("one starting point per chain is required");
  const std::size_t d = inits.front().size();
  if (d == 0) throw PreconditionError("target has no parameters");
  if (initial_covariance.rows() != static_cast<long>(d) || initial_covariance.cols() != static_cast<long>(d))
    throw PreconditionError("initial covariance has the wrong shape");

  std::vector<ChainOutput> outputs(inits.size());
  std::vector<std::exception_ptr> errors(inits.size());
  const int workers = thread_count(config.threads, config.chains);
  auto work = [&](std::size_t c) {
    try {
      outputs[c] = run_chain(log_target, inits[c], initial_covariance, config, static_cast<int>(c));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < inits.size(); ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    while (next < inits.size()) {
      pool.clear();
      for (int w = 0; w < workers && next < inits.size(); ++w) pool.emplace_back(work, next++);
      for (auto& t : pool) t.join();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  Chains out;
  out.dim = d;
  for (auto& o : outputs) {
    out.draws.push_back(std::move(o.draws));
    out.acceptance.push_back(o.acceptance);
  }
  return out;
}

double split_rhat(const std::vector<std::vector<double>>& draws) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : draws) {
    const std::size_t h = c.size() / 2;
    if (h < 2) return std::numeric_limits<double>::quiet_NaN();
    halves.emplace_back(c.begin(), c.begin() + static_cast<long>(h));
    halves.emplace_back(c.end() - static_cast<long>(h), c.end());
  }
  const double n = static_cast<double>(halves.front().size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    means.push_back(mean_of(h));
    w += var_of(h, means.back());
  }
  w /= static_cast<double>(halves.size());
  const double grand = mean_of(means);
  const double b_over_n = var_of(means, grand);
  if (w == 0.0) return b_over_n == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<std::vector<double>>& draws) {
  const std::size_t m = draws.size();
  const std::size_t n = draws.front().size();
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(draws[c]);
    vars[c] = var_of(draws[c], means[c]);
  }
  double w = 0.0;
  for (double v : vars) w += v;
  w /= static_cast<double>(m);
  const double b_over_n = m > 1 ? var_of(means, mean_of(means)) : 0.0;
  const double nn = static_cast<double>(n);
  const double var_plus = (nn - 1.0) / nn * w + b_over_n;
  if (!(var_plus > 0.0)) return static_cast<double>(m * n);

  // mean autocovariance across chains at lag t (biased estimator, divides by n)
  auto acov = [&](std::size_t t) {
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      const auto& x = draws[c];
      for (std::size_t i = 0; i + t < n; ++i) s += (x[i] - means[c]) * (x[i + t] - means[c]);
      total += s / nn;
    }
    return total / static_cast<double>(m);
  };
  auto rho = [&](std::size_t t) { return 1.0 - (w - acov(t)) / var_plus; };

  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);  // initial monotone sequence
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
  return static_cast<double>(m * n) / tau;
}

std::vector<double> split_rhat(const Chains& chains) {
  std::vector<double> out;
  for (std::size_t k = 0; k < chains.dim; ++k) out.push_back(split_rhat(chains.coordinate(k)));
  return out;
}

std::vector<double> effective_sample_size(const Chains& chains) {
  std::vector<double> out;
  for (std::size_t k = 0; k < chains.dim; ++k) out.push_back(effective_sample_size(chains.coordinate(k)));
  return out;
}

}  // namespace expertsurv::mcmc

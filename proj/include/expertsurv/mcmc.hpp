#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace expertsurv::mcmc {

struct Config {
  int chains = 3;
  int iterations = 10000;  // per chain, burn-in included
  int burnin = 5000;
  int thin = 1;
  std::uint64_t seed = 1;
  int threads = 0;                 // 0: one per chain, capped by EXPERT_EXTRAP_THREADS
  double target_acceptance = 0.0;  // 0: 0.44 in one dimension, 0.234 otherwise
};

/// Throws PreconditionError unless chains >= 2, 0 <= burnin < iterations and thin >= 1.
void validate(const Config& c);

using LogTarget = std::function<double(std::span<const double>)>;

/// draws[chain][kept iteration][coordinate]
struct Chains {
  std::vector<std::vector<std::vector<double>>> draws;
  std::vector<double> acceptance;  // post burn-in acceptance rate per chain
  std::size_t dim = 0;

  std::size_t chain_count() const { return draws.size(); }
  std::size_t draws_per_chain() const { return draws.empty() ? 0 : draws.front().size(); }
  /// draws of one coordinate, [chain][iteration]
  std::vector<std::vector<double>> coordinate(std::size_t k) const;
};

/// Adaptive random-walk Metropolis. During burn-in the proposal covariance
/// tracks the empirical covariance of the chain (plus 1e-8 jitter) and its
/// scale is tuned toward the target acceptance rate; afterwards the kernel is
/// fixed. `inits` holds one starting point per chain. Chains run in parallel
/// and are merged by chain index, so output depends only on the seed.
Chains run_adaptive_metropolis(const LogTarget& log_target, const std::vector<std::vector<double>>& inits,
                               const Eigen::MatrixXd& initial_covariance, const Config& config);

/// Split potential scale reduction for each coordinate.
std::vector<double> split_rhat(const Chains& chains);
/// Multi-chain effective sample size (Geyer initial monotone sequence).
std::vector<double> effective_sample_size(const Chains& chains);

double split_rhat(const std::vector<std::vector<double>>& draws);
double effective_sample_size(const std::vector<std::vector<double>>& draws);

/// Worker count for `jobs` independent tasks: `requested` (0 = jobs) capped
/// by EXPERT_EXTRAP_THREADS when set.
int thread_count(int requested, int jobs);

}  // namespace expertsurv::mcmc

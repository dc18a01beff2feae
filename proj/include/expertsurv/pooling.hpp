#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "expertsurv/elicitation.hpp"

namespace expertsurv {

enum class PoolMethod { Linear, Logarithmic };

std::string pool_method_name(PoolMethod m);

/// Weighted combination of expert densities. Immutable once constructed; the
/// logarithmic normalizing constant and the sampling table are computed eagerly.
class PooledOpinion {
 public:
  /// Empty `weights` means equal weights. With `truncate_to_unit` the pool
  /// is restricted to [0,1] and renormalized (survival-probability opinions).
  PooledOpinion(std::vector<ElicitedDistribution> components, std::vector<double> weights, PoolMethod method,
                bool truncate_to_unit = false);

  static PooledOpinion single(ElicitedDistribution d, bool truncate_to_unit = false);

  const std::vector<ElicitedDistribution>& components() const { return components_; }
  const std::vector<double>& weights() const { return weights_; }
  PoolMethod method() const { return method_; }
  bool truncated() const { return truncate_; }

  /// log of the normalizing constant (Logarithmic: integral of the weighted
  /// geometric mean; Linear: log of the retained mass after truncation).
  double log_norm_const() const { return log_norm_; }
  /// Mass of the untruncated pool outside [0,1]; 0 without truncation.
  double leakage() const { return leakage_; }
  /// Interval outside which the density is zero.
  std::pair<double, double> support() const { return support_; }

  double log_density(double x) const;
  double density(double x) const;
  double cdf(double x) const;
  double mean() const;
  std::vector<double> sample(std::size_t n, std::uint64_t seed) const;

 private:
  double unnormalized_log(double x) const;
  void build_log_pool();

  std::vector<ElicitedDistribution> components_;
  std::vector<double> weights_;
  PoolMethod method_;
  bool truncate_ = false;
  double log_norm_ = 0.0;
  double leakage_ = 0.0;
  std::pair<double, double> support_;
  // Logarithmic pool: shift used while integrating, plus an inverse-CDF table.
  double log_shift_ = 0.0;
  std::vector<double> grid_x_, grid_cdf_;
};

/// Log density of the pool; -inf outside its support.
double log_pool_density(const PooledOpinion& p, double x);

/// Linear: component by weight then a draw from it. Logarithmic: inverse CDF
/// on a quadrature grid. Deterministic for a given seed.
std::vector<double> sample_pool(const PooledOpinion& p, std::size_t n, std::uint64_t seed);

}  // namespace expertsurv

#include "expertsurv/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "expertsurv/errors.hpp"
#include "expertsurv/numerics.hpp"
#include "expertsurv/special_functions.hpp"

namespace expertsurv {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCoreTail = 1e-8;
constexpr std::size_t kTableSize = 4097;

double uniform01(std::mt19937_64& rng) {
  double u;
  do {
    u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  } while (u == 0.0);
  return u;
}

// Fixed-order rule for the narrow cells of the inverse-CDF table.
template <class F>
double cell_integral(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 15>::integrate(f, a, b);
}

}  // namespace

std::string pool_method_name(PoolMethod m) { return m == PoolMethod::Linear ? "linear" : "log"; }

PooledOpinion::PooledOpinion(std::vector<ElicitedDistribution> components, std::vector<double> weights,
                             PoolMethod method, bool truncate_to_unit)
    : components_(std::move(components)), weights_(std::move(weights)), method_(method), truncate_(truncate_to_unit) {
  if (components_.empty()) throw InvalidParameter("a pooled opinion needs at least one component");
  if (weights_.empty()) weights_.assign(components_.size(), 1.0 / static_cast<double>(components_.size()));
  if (weights_.size() != components_.size())
    throw InvalidParameter("pool weights and components differ in length");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidParameter("pool weights must be finite and nonnegative");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "pool weights must sum to 1, got " << total;
    throw InvalidParameter(os.str());
  }

  if (method_ == PoolMethod::Linear) {
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (weights_[i] == 0.0) continue;
      lo = std::min(lo, components_[i].support().first);
      hi = std::max(hi, components_[i].support().second);
    }
    support_ = {lo, hi};
    if (truncate_) {
      double inside = 0.0;
      for (std::size_t i = 0; i < components_.size(); ++i)
        if (weights_[i] > 0.0) inside += weights_[i] * (components_[i].cdf(1.0) - components_[i].cdf(0.0));
      leakage_ = std::max(0.0, 1.0 - inside);
      if (!(inside > 0.0)) throw NumericError("pooled opinion has no mass in [0,1]");
      log_norm_ = std::log(inside);
      support_ = {std::max(0.0, lo), std::min(1.0, hi)};
    }
  } else {
    build_log_pool();
  }
}

PooledOpinion PooledOpinion::single(ElicitedDistribution d, bool truncate_to_unit) {
  return PooledOpinion({std::move(d)}, {1.0}, PoolMethod::Linear, truncate_to_unit);
}

double PooledOpinion::unnormalized_log(double x) const {
  if (method_ == PoolMethod::Linear) {
    double acc = -kInf;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (weights_[i] == 0.0) continue;
      acc = log_add_exp(acc, std::log(weights_[i]) + components_[i].log_pdf(x));
    }
    return acc;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    const double l = components_[i].log_pdf(x);
    if (l == -kInf) return -kInf;
    acc += weights_[i] * l;
  }
  return acc;
}

void PooledOpinion::build_log_pool() {
  double lo = -kInf, hi = kInf, core_lo = kInf, core_hi = -kInf;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    const auto& c = components_[i];
    lo = std::max(lo, c.support().first);
    hi = std::min(hi, c.support().second);
    core_lo = std::min(core_lo, c.quantile(kCoreTail));
    core_hi = std::max(core_hi, c.quantile(1.0 - kCoreTail));
  }
  if (truncate_) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, 1.0);
  }
  auto bounds_report = [&](const std::string& what) {
    std::ostringstream os;
    os.precision(10);
    os << "logarithmic pool normalization failed (" << what << ") on support [" << lo << ", " << hi << "], core ["
       << core_lo << ", " << core_hi << "]";
    return os.str();
  };
  if (!(lo < hi)) throw NumericError(bounds_report("component supports do not intersect"));
  core_lo = std::clamp(core_lo, lo, hi);
  core_hi = std::clamp(core_hi, lo, hi);
  if (!(core_lo < core_hi)) {
    core_lo = std::isfinite(lo) ? lo : hi - 1.0;
    core_hi = std::isfinite(hi) ? hi : core_lo + 1.0;
  }
  support_ = {lo, hi};

  // Shift by the largest log-integrand on a scan so the integral stays in range.
  double shift = -kInf;
  for (int k = 0; k <= 400; ++k) {
    const double x = core_lo + (core_hi - core_lo) * k / 400.0;
    const double v = unnormalized_log(x);
    if (std::isfinite(v)) shift = std::max(shift, v);
  }
  if (!std::isfinite(shift)) throw NumericError(bounds_report("pooled density vanishes on the core range"));
  log_shift_ = shift;
  auto integrand = [this](double x) {
    const double v = unnormalized_log(x) - log_shift_;
    return std::isfinite(v) ? std::exp(v) : 0.0;
  };
  double total = 0.0;
  try {
    total = numerics::integrate(integrand, core_lo, core_hi, 1e-13).value;
    // Tails hold little mass; they only need accuracy relative to the core.
    if (lo < core_lo) total += numerics::integrate(integrand, lo, core_lo, 1e-8, 6).value;
    if (core_hi < hi) total += numerics::integrate(integrand, core_hi, hi, 1e-8, 6).value;
  } catch (const NumericError& e) {
    throw NumericError(bounds_report(e.what()));
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericError(bounds_report("non-positive integral"));
  log_norm_ = shift + std::log(total);

  // Inverse-CDF table over the core range: cumulative mass per cell by GK.
  grid_x_.resize(kTableSize);
  grid_cdf_.resize(kTableSize);
  const double head = lo < core_lo ? numerics::integrate(integrand, lo, core_lo, 1e-8, 6).value / total : 0.0;
  grid_x_[0] = core_lo;
  grid_cdf_[0] = head;
  for (std::size_t k = 1; k < kTableSize; ++k) {
    grid_x_[k] = core_lo + (core_hi - core_lo) * static_cast<double>(k) / static_cast<double>(kTableSize - 1);
    grid_cdf_[k] = grid_cdf_[k - 1] + cell_integral(integrand, grid_x_[k - 1], grid_x_[k]) / total;
  }
}

double PooledOpinion::log_density(double x) const {
  if (std::isnan(x)) return x;
  if (x < support_.first || x > support_.second) return -kInf;
  return unnormalized_log(x) - log_norm_;
}

double PooledOpinion::density(double x) const { return std::exp(log_density(x)); }

double PooledOpinion::cdf(double x) const {
  if (x <= support_.first) return 0.0;
  if (x >= support_.second) return 1.0;
  if (method_ == PoolMethod::Linear) {
    double acc = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      if (weights_[i] == 0.0) continue;
      const double lower = truncate_ ? components_[i].cdf(0.0) : 0.0;
      acc += weights_[i] * (components_[i].cdf(x) - lower);
    }
    return std::clamp(acc / std::exp(log_norm_), 0.0, 1.0);
  }
  auto integrand = [this](double u) {
    const double v = unnormalized_log(u) - log_shift_;
    return std::isfinite(v) ? std::exp(v) : 0.0;
  };
  const double scale = std::exp(log_shift_ - log_norm_);
  if (x <= grid_x_.front())
    return std::clamp(numerics::integrate(integrand, support_.first, x, 1e-8, 6).value * scale, 0.0, 1.0);
  if (x >= grid_x_.back()) {
    const double tail = numerics::integrate(integrand, x, support_.second, 1e-8, 6).value * scale;
    return std::clamp(1.0 - tail, 0.0, 1.0);
  }
  const auto it = std::upper_bound(grid_x_.begin(), grid_x_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - grid_x_.begin()) - 1;
  const double partial = cell_integral(integrand, grid_x_[k], x) * scale;
  return std::clamp(grid_cdf_[k] + partial, 0.0, 1.0);
}

double PooledOpinion::mean() const {
  if (method_ == PoolMethod::Linear && !truncate_) {
    double m = 0.0;
    for (std::size_t i = 0; i < components_.size(); ++i)
      if (weights_[i] > 0.0) m += weights_[i] * components_[i].mean();
    return m;
  }
  auto f = [this](double x) {
    const double l = log_density(x);
    return std::isfinite(l) ? x * std::exp(l) : 0.0;
  };
  if (method_ == PoolMethod::Linear) return numerics::integrate(f, support_.first, support_.second, 1e-10).value;
  double total = numerics::integrate(f, grid_x_.front(), grid_x_.back(), 1e-10).value;
  if (support_.first < grid_x_.front()) total += numerics::integrate(f, support_.first, grid_x_.front(), 1e-8, 6).value;
  if (grid_x_.back() < support_.second) total += numerics::integrate(f, grid_x_.back(), support_.second, 1e-8, 6).value;
  return total;
}

std::vector<double> PooledOpinion::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw PreconditionError("sample size must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  out.reserve(n);
  if (method_ == PoolMethod::Linear) {
    std::vector<double> cum(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cum.begin());
    while (out.size() < n) {
      const double u = uniform01(rng) * cum.back();
      const std::size_t k = std::min<std::size_t>(
          static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()), cum.size() - 1);
      const double x = components_[k].sample(rng);
      if (truncate_ && (x < 0.0 || x > 1.0)) continue;  // rejection keeps the truncated pool exact
      out.push_back(x);
    }
    return out;
  }
  const double lo_mass = grid_cdf_.front(), hi_mass = grid_cdf_.back();
  for (std::size_t i = 0; i < n; ++i) {
    // Mass outside the core range (< 2e-8) is folded onto the core ends.
    const double u = lo_mass + uniform01(rng) * (hi_mass - lo_mass);
    auto it = std::lower_bound(grid_cdf_.begin(), grid_cdf_.end(), u);
    if (it == grid_cdf_.begin()) ++it;
    if (it == grid_cdf_.end()) --it;
    const std::size_t k = static_cast<std::size_t>(it - grid_cdf_.begin());
    const double c0 = grid_cdf_[k - 1], c1 = grid_cdf_[k];
    const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    out.push_back(grid_x_[k - 1] + frac * (grid_x_[k] - grid_x_[k - 1]));
  }
  return out;
}

double log_pool_density(const PooledOpinion& p, double x) { return p.log_density(x); }

std::vector<double> sample_pool(const PooledOpinion& p, std::size_t n, std::uint64_t seed) { return p.sample(n, seed); }

}  // namespace expertsurv

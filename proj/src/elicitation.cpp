#include "expertsurv/elicitation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "boost_policy.hpp"
#include "expertsurv/errors.hpp"
#include "expertsurv/optimize.hpp"

namespace expertsurv {
namespace {

using detail::MathPolicy;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Normal = boost::math::normal_distribution<double, MathPolicy>;
using StudentT = boost::math::students_t_distribution<double, MathPolicy>;
using LogNormal = boost::math::lognormal_distribution<double, MathPolicy>;
using GammaD = boost::math::gamma_distribution<double, MathPolicy>;
using BetaD = boost::math::beta_distribution<double, MathPolicy>;

double lgam(double x) { return boost::math::lgamma(x, MathPolicy()); }

std::size_t expected_params(ElicitedFamily f) { return f == ElicitedFamily::StudentT ? 3 : 2; }

bool params_valid(ElicitedFamily f, const std::vector<double>& p) {
  if (p.size() != expected_params(f)) return false;
  for (double v : p)
    if (!std::isfinite(v)) return false;
  switch (f) {
    case ElicitedFamily::Normal:
    case ElicitedFamily::LogNormal:
      return p[1] > 0.0;
    case ElicitedFamily::StudentT:
      return p[1] > 0.0 && p[2] > 0.0;
    case ElicitedFamily::Gamma:
    case ElicitedFamily::Beta:
    case ElicitedFamily::ScaledChi:
      return p[0] > 0.0 && p[1] > 0.0;
  }
  return false;
}

int family_rank(ElicitedFamily f) { return static_cast<int>(f); }

}  // namespace

std::string family_name(ElicitedFamily f) {
  switch (f) {
    case ElicitedFamily::Normal: return "normal";
    case ElicitedFamily::StudentT: return "t";
    case ElicitedFamily::LogNormal: return "lognormal";
    case ElicitedFamily::Gamma: return "gamma";
    case ElicitedFamily::Beta: return "beta";
    case ElicitedFamily::ScaledChi: return "scaledchi";
  }
  return "unknown";
}

ElicitedFamily parse_elicited_family(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "normal") return ElicitedFamily::Normal;
  if (s == "t" || s == "studentt" || s == "student_t" || s == "student-t") return ElicitedFamily::StudentT;
  if (s == "lognormal" || s == "log-normal") return ElicitedFamily::LogNormal;
  if (s == "gamma") return ElicitedFamily::Gamma;
  if (s == "beta") return ElicitedFamily::Beta;
  if (s == "scaledchi" || s == "scaled_chi" || s == "chi") return ElicitedFamily::ScaledChi;
  throw UnsupportedFamily("unknown elicitation family '" + std::string(name) + "'");
}

void validate(const ExpertJudgment& j) {
  auto fail = [&](const std::string& what) {
    throw InvalidParameter("judgment of expert '" + j.expert_id + "': " + what);
  };
  if (!(std::isfinite(j.lpl) && std::isfinite(j.mlv) && std::isfinite(j.upl))) fail("values must be finite");
  if (!(j.lpl < j.mlv && j.mlv < j.upl)) fail("requires lpl < mlv < upl");
  if (j.probability_scale && (j.lpl < 0.0 || j.upl > 1.0)) fail("probabilities must lie in [0,1]");
  if (!(j.coverage > 0.0 && j.coverage < 1.0)) fail("coverage must lie in (0,1)");
  if (!(j.timepoint >= 0.0) || !std::isfinite(j.timepoint)) fail("timepoint must be finite and nonnegative");
}

// ---------------------------------------------------------------------------

ElicitedDistribution::ElicitedDistribution(ElicitedFamily family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
  if (!params_valid(family_, params_)) {
    std::ostringstream os;
    os << "invalid parameters for " << family_name(family_) << " distribution";
    throw InvalidParameter(os.str());
  }
}

ElicitedDistribution ElicitedDistribution::normal(double mean, double sd) { return {ElicitedFamily::Normal, {mean, sd}}; }
ElicitedDistribution ElicitedDistribution::student_t(double location, double scale, double df) {
  return {ElicitedFamily::StudentT, {location, scale, df}};
}
ElicitedDistribution ElicitedDistribution::lognormal(double meanlog, double sdlog) {
  return {ElicitedFamily::LogNormal, {meanlog, sdlog}};
}
ElicitedDistribution ElicitedDistribution::gamma(double shape, double rate) { return {ElicitedFamily::Gamma, {shape, rate}}; }
ElicitedDistribution ElicitedDistribution::beta(double alpha, double beta) { return {ElicitedFamily::Beta, {alpha, beta}}; }
ElicitedDistribution ElicitedDistribution::scaled_chi(double df, double scale) {
  return {ElicitedFamily::ScaledChi, {df, scale}};
}

std::size_t ElicitedDistribution::free_parameter_count() const { return 2; }

std::string ElicitedDistribution::label() const {
  std::ostringstream os;
  os.precision(6);
  os << family_name(family_) << "(";
  for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? ", " : "") << params_[i];
  os << ")";
  return os.str();
}

std::pair<double, double> ElicitedDistribution::support() const {
  switch (family_) {
    case ElicitedFamily::Normal:
    case ElicitedFamily::StudentT:
      return {-kInf, kInf};
    case ElicitedFamily::LogNormal:
    case ElicitedFamily::Gamma:
    case ElicitedFamily::ScaledChi:
      return {0.0, kInf};
    case ElicitedFamily::Beta:
      return {0.0, 1.0};
  }
  return {-kInf, kInf};
}

double ElicitedDistribution::log_pdf(double x) const {
  const auto& p = params_;
  if (std::isnan(x)) return kNaN;
  switch (family_) {
    case ElicitedFamily::Normal: {
      const double z = (x - p[0]) / p[1];
      return -0.5 * z * z - std::log(p[1]) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    case ElicitedFamily::StudentT: {
      const double nu = p[2], z = (x - p[0]) / p[1];
      return lgam(0.5 * (nu + 1.0)) - lgam(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) - std::log(p[1]) -
             0.5 * (nu + 1.0) * std::log1p(z * z / nu);
    }
    case ElicitedFamily::LogNormal: {
      if (!(x > 0.0)) return -kInf;
      const double lx = std::log(x), z = (lx - p[0]) / p[1];
      return -0.5 * z * z - std::log(p[1]) - lx - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    case ElicitedFamily::Gamma: {
      if (x < 0.0) return -kInf;
      if (x == 0.0) return p[0] < 1.0 ? kInf : (p[0] == 1.0 ? std::log(p[1]) : -kInf);
      return p[0] * std::log(p[1]) - lgam(p[0]) + (p[0] - 1.0) * std::log(x) - p[1] * x;
    }
    case ElicitedFamily::Beta: {
      const double a = p[0], b = p[1];
      if (x < 0.0 || x > 1.0) return -kInf;
      const double lb = lgam(a) + lgam(b) - lgam(a + b);
      if (x == 0.0) return a < 1.0 ? kInf : (a == 1.0 ? -lb : -kInf);
      if (x == 1.0) return b < 1.0 ? kInf : (b == 1.0 ? -lb : -kInf);
      return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lb;
    }
    case ElicitedFamily::ScaledChi: {
      const double k = p[0], c = p[1];
      if (!(x > 0.0)) return x == 0.0 && k < 1.0 ? kInf : -kInf;
      const double y = x / c;
      return (k - 1.0) * std::log(y) - 0.5 * y * y - (0.5 * k - 1.0) * std::numbers::ln2 - lgam(0.5 * k) - std::log(c);
    }
  }
  return kNaN;
}

double ElicitedDistribution::pdf(double x) const { return std::exp(log_pdf(x)); }

double ElicitedDistribution::cdf(double x) const {
  const auto& p = params_;
  if (std::isnan(x)) return kNaN;
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  switch (family_) {
    case ElicitedFamily::Normal:
      return boost::math::cdf(Normal(p[0], p[1]), x);
    case ElicitedFamily::StudentT:
      return boost::math::cdf(StudentT(p[2]), (x - p[0]) / p[1]);
    case ElicitedFamily::LogNormal:
      return x <= 0.0 ? 0.0 : boost::math::cdf(LogNormal(p[0], p[1]), x);
    case ElicitedFamily::Gamma:
      return x <= 0.0 ? 0.0 : boost::math::cdf(GammaD(p[0], 1.0 / p[1]), x);
    case ElicitedFamily::Beta:
      return x <= 0.0 ? 0.0 : x >= 1.0 ? 1.0 : boost::math::cdf(BetaD(p[0], p[1]), x);
    case ElicitedFamily::ScaledChi: {
      if (x <= 0.0) return 0.0;
      const double y = x / p[1];
      return boost::math::gamma_p(0.5 * p[0], 0.5 * y * y, MathPolicy());
    }
  }
  return kNaN;
}

double ElicitedDistribution::quantile(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile probability must lie in [0,1]");
  const auto& p = params_;
  if (q == 0.0) return support().first;
  if (q == 1.0) return support().second;
  switch (family_) {
    case ElicitedFamily::Normal:
      return boost::math::quantile(Normal(p[0], p[1]), q);
    case ElicitedFamily::StudentT:
      return p[0] + p[1] * boost::math::quantile(StudentT(p[2]), q);
    case ElicitedFamily::LogNormal:
      return boost::math::quantile(LogNormal(p[0], p[1]), q);
    case ElicitedFamily::Gamma:
      return boost::math::quantile(GammaD(p[0], 1.0 / p[1]), q);
    case ElicitedFamily::Beta:
      return boost::math::quantile(BetaD(p[0], p[1]), q);
    case ElicitedFamily::ScaledChi:
      return p[1] * std::sqrt(2.0 * boost::math::gamma_p_inv(0.5 * p[0], q, MathPolicy()));
  }
  return kNaN;
}

double ElicitedDistribution::mode() const {
  const auto& p = params_;
  switch (family_) {
    case ElicitedFamily::Normal:
    case ElicitedFamily::StudentT:
      return p[0];
    case ElicitedFamily::LogNormal:
      return std::exp(p[0] - p[1] * p[1]);
    case ElicitedFamily::Gamma:
      return p[0] >= 1.0 ? (p[0] - 1.0) / p[1] : 0.0;
    case ElicitedFamily::Beta: {
      const double a = p[0], b = p[1];
      if (a > 1.0 && b > 1.0) return (a - 1.0) / (a + b - 2.0);
      if (a <= 1.0 && b > 1.0) return 0.0;
      if (a > 1.0 && b <= 1.0) return 1.0;
      return a < b ? 0.0 : (a > b ? 1.0 : 0.5);
    }
    case ElicitedFamily::ScaledChi:
      return p[0] >= 1.0 ? p[1] * std::sqrt(p[0] - 1.0) : 0.0;
  }
  return kNaN;
}

double ElicitedDistribution::mean() const {
  const auto& p = params_;
  switch (family_) {
    case ElicitedFamily::Normal:
      return p[0];
    case ElicitedFamily::StudentT:
      return p[2] > 1.0 ? p[0] : kNaN;
    case ElicitedFamily::LogNormal:
      return std::exp(p[0] + 0.5 * p[1] * p[1]);
    case ElicitedFamily::Gamma:
      return p[0] / p[1];
    case ElicitedFamily::Beta:
      return p[0] / (p[0] + p[1]);
    case ElicitedFamily::ScaledChi:
      return p[1] * std::numbers::sqrt2 * std::exp(lgam(0.5 * (p[0] + 1.0)) - lgam(0.5 * p[0]));
  }
  return kNaN;
}

double ElicitedDistribution::variance() const {
  const auto& p = params_;
  switch (family_) {
    case ElicitedFamily::Normal:
      return p[1] * p[1];
    case ElicitedFamily::StudentT:
      return p[2] > 2.0 ? p[1] * p[1] * p[2] / (p[2] - 2.0) : kInf;
    case ElicitedFamily::LogNormal:
      return std::expm1(p[1] * p[1]) * std::exp(2.0 * p[0] + p[1] * p[1]);
    case ElicitedFamily::Gamma:
      return p[0] / (p[1] * p[1]);
    case ElicitedFamily::Beta: {
      const double s = p[0] + p[1];
      return p[0] * p[1] / (s * s * (s + 1.0));
    }
    case ElicitedFamily::ScaledChi: {
      const double m = mean();
      return p[1] * p[1] * p[0] - m * m;
    }
  }
  return kNaN;
}

double ElicitedDistribution::sample(std::mt19937_64& rng) const {
  // 53-bit uniform on (0,1)
  double u;
  do {
    u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  } while (u == 0.0);
  return quantile(u);
}

// ---------------------------------------------------------------------------

double elicitation_sse(const ExpertJudgment& j, const ElicitedDistribution& d) {
  const double lo = 0.5 * (1.0 - j.coverage);
  const double r1 = d.quantile(lo) - j.lpl;
  const double r2 = d.quantile(1.0 - lo) - j.upl;
  const double r3 = d.mode() - j.mlv;
  const double s = r1 * r1 + r2 * r2 + r3 * r3;
  return std::isfinite(s) ? s : kInf;
}

namespace {

void check_support(const ExpertJudgment& j, ElicitedFamily f) {
  auto reject = [&](const char* why) {
    throw UnsupportedFamily(family_name(f) + " cannot represent judgments of expert '" + j.expert_id + "': " + why);
  };
  switch (f) {
    case ElicitedFamily::Normal:
    case ElicitedFamily::StudentT:
      return;
    case ElicitedFamily::LogNormal:
    case ElicitedFamily::Gamma:
    case ElicitedFamily::ScaledChi:
      if (!(j.lpl > 0.0)) reject("support is (0, inf) but lpl <= 0");
      return;
    case ElicitedFamily::Beta:
      if (!(j.lpl > 0.0 && j.upl < 1.0)) reject("support is (0, 1) but the limits reach the boundary");
      return;
  }
}

// Unconstrained coordinates for the optimizer.
ElicitedDistribution decode(ElicitedFamily f, std::span<const double> z, double t_df) {
  switch (f) {
    case ElicitedFamily::Normal:
      return ElicitedDistribution::normal(z[0], std::exp(z[1]));
    case ElicitedFamily::StudentT:
      return ElicitedDistribution::student_t(z[0], std::exp(z[1]), t_df);
    case ElicitedFamily::LogNormal:
      return ElicitedDistribution::lognormal(z[0], std::exp(z[1]));
    case ElicitedFamily::Gamma:
      return ElicitedDistribution::gamma(std::exp(z[0]), std::exp(z[1]));
    case ElicitedFamily::Beta:
      return ElicitedDistribution::beta(std::exp(z[0]), std::exp(z[1]));
    case ElicitedFamily::ScaledChi:
      return ElicitedDistribution::scaled_chi(std::exp(z[0]), std::exp(z[1]));
  }
  throw UnsupportedFamily("unknown family");
}

// Moment-matched start with the spread multiplied by `k`.
std::vector<double> initial_guess(const ExpertJudgment& j, ElicitedFamily f, double k, double t_df) {
  const double lo = 0.5 * (1.0 - j.coverage);
  const double z = boost::math::quantile(Normal(0.0, 1.0), 1.0 - lo);
  const double m = j.mlv;
  const double sd = k * (j.upl - j.lpl) / (2.0 * z);
  switch (f) {
    case ElicitedFamily::Normal:
      return {m, std::log(sd)};
    case ElicitedFamily::StudentT: {
      const double tq = boost::math::quantile(StudentT(t_df), 1.0 - lo);
      return {m, std::log(k * (j.upl - j.lpl) / (2.0 * tq))};
    }
    case ElicitedFamily::LogNormal: {
      const double s = std::max(1e-3, k * (std::log(j.upl) - std::log(j.lpl)) / (2.0 * z));
      return {std::log(m) + s * s, std::log(s)};
    }
    case ElicitedFamily::Gamma: {
      const double shape = std::max(1.05, m * m / (sd * sd) + 1.0);
      return {std::log(shape), std::log((shape - 1.0) / m)};
    }
    case ElicitedFamily::Beta: {
      const double mm = std::clamp(m, 1e-6, 1.0 - 1e-6);
      const double conc = std::max(2.5, mm * (1.0 - mm) / (sd * sd) - 1.0);
      return {std::log(std::max(1.0 + 1e-3, mm * conc)), std::log(std::max(1.0 + 1e-3, (1.0 - mm) * conc))};
    }
    case ElicitedFamily::ScaledChi: {
      // chi(df) has mode sqrt(df-1) and sd of roughly 1/sqrt(2)
      const double scale = sd * std::numbers::sqrt2;
      const double df = 1.0 + (m / scale) * (m / scale);
      return {std::log(df), std::log(scale)};
    }
  }
  return {};
}

double leakage_of(const ExpertJudgment& j, const ElicitedDistribution& d) {
  if (!j.probability_scale) return 0.0;
  const auto [lo, hi] = d.support();
  double mass = 0.0;
  if (lo < 0.0) mass += d.cdf(0.0);
  if (hi > 1.0) mass += 1.0 - d.cdf(1.0);
  return mass;
}

}  // namespace

ElicitedDistribution fit_family(const ExpertJudgment& j, ElicitedFamily family, const ElicitationOptions& options) {
  validate(j);
  check_support(j, family);
  const double t_df = options.t_df;
  const optim::Objective objective = [&](std::span<const double> z) {
    for (double v : z)
      if (!std::isfinite(v) || std::fabs(v) > 700.0) return kInf;
    try {
      return elicitation_sse(j, decode(family, z, t_df));
    } catch (const Error&) {
      return kInf;
    }
  };

  constexpr double kSpread[] = {1.0, 0.5, 2.0, 0.25, 4.0};
  optim::Result best;
  best.value = kInf;
  bool any_converged = false;
  for (double k : kSpread) {
    auto r = optim::nelder_mead(objective, initial_guess(j, family, k, t_df));
    if (!std::isfinite(r.value)) continue;
    if (r.converged) any_converged = true;
    if (r.value < best.value || (r.converged && !best.converged && r.value <= best.value)) best = std::move(r);
  }
  if (!std::isfinite(best.value) || !any_converged) {
    std::ostringstream os;
    os << "fitting " << family_name(family) << " to judgments of expert '" << j.expert_id
       << "' failed: best SSE " << best.value << " after " << best.iterations << " iterations ("
       << (best.message.empty() ? "no finite start" : best.message) << ")";
    throw FitFailure(os.str());
  }
  auto d = decode(family, best.x, t_df);
  d.sse = best.value;
  d.leakage = leakage_of(j, d);
  return d;
}

namespace {

// True when `a` should be preferred over `b`.
bool preferred(const ElicitedDistribution& a, const ElicitedDistribution& b, double tol) {
  if (std::fabs(a.sse - b.sse) > tol) return a.sse < b.sse;
  const bool la = a.leakage > 0.0, lb = b.leakage > 0.0;
  if (la != lb) return !la;
  if (a.free_parameter_count() != b.free_parameter_count()) return a.free_parameter_count() < b.free_parameter_count();
  return family_rank(a.family()) < family_rank(b.family());
}

}  // namespace

ElicitedDistribution best_fit(const ExpertJudgment& j, std::span<const ElicitedFamily> candidates,
                              const ElicitationOptions& options) {
  if (candidates.empty()) throw PreconditionError("best_fit needs at least one candidate family");
  std::vector<ElicitedDistribution> fits;
  std::ostringstream failures;
  for (ElicitedFamily f : candidates) {
    try {
      fits.push_back(fit_family(j, f, options));
    } catch (const Error& e) {
      failures << "\n  " << family_name(f) << ": " << e.what();
    }
  }
  if (fits.empty()) throw FitFailure("no candidate family could be fitted for expert '" + j.expert_id + "':" + failures.str());
  // Ties are judged against the overall minimum so the choice does not depend on candidate order.
  const double min_sse =
      std::min_element(fits.begin(), fits.end(), [](const auto& a, const auto& b) { return a.sse < b.sse; })->sse;
  const ElicitedDistribution* best = nullptr;
  for (const auto& f : fits) {
    if (f.sse > min_sse + options.tie_tolerance) continue;
    if (!best || preferred(f, *best, kInf)) best = &f;
  }
  return *best;
}

std::vector<ElicitedDistribution> best_fit_per_expert(std::span<const ExpertJudgment> judgments,
                                                      std::span<const ElicitedFamily> candidates,
                                                      const ElicitationOptions& options) {
  if (judgments.empty()) return {};
  if (candidates.empty()) throw PreconditionError("best_fit_per_expert needs at least one candidate family");
  std::vector<std::vector<ElicitedDistribution>> per_family;
  std::vector<double> totals;
  std::vector<ElicitedFamily> families;
  std::ostringstream failures;
  for (ElicitedFamily f : candidates) {
    try {
      std::vector<ElicitedDistribution> fits;
      double total = 0.0;
      for (const auto& j : judgments) {
        fits.push_back(fit_family(j, f, options));
        total += fits.back().sse;
      }
      per_family.push_back(std::move(fits));
      totals.push_back(total);
      families.push_back(f);
    } catch (const Error& e) {
      failures << "\n  " << family_name(f) << ": " << e.what();
    }
  }
  if (per_family.empty()) throw FitFailure("no candidate family fits every judgment of the expert:" + failures.str());
  const double min_total = *std::min_element(totals.begin(), totals.end());
  std::size_t best = per_family.size();
  for (std::size_t i = 0; i < per_family.size(); ++i) {
    if (totals[i] > min_total + options.tie_tolerance) continue;
    if (best == per_family.size() || family_rank(families[i]) < family_rank(families[best])) best = i;
  }
  return per_family[best];
}

const std::vector<ElicitedFamily>& default_candidates() {
  static const std::vector<ElicitedFamily> c{ElicitedFamily::Normal, ElicitedFamily::StudentT, ElicitedFamily::LogNormal,
                                             ElicitedFamily::Gamma, ElicitedFamily::Beta};
  return c;
}

double ess_beta(const ElicitedDistribution& d) {
  if (d.family() != ElicitedFamily::Beta)
    throw UnsupportedFamily("effective sample size is defined for beta opinions only, got " + family_name(d.family()));
  return d.params()[0] + d.params()[1];
}

EssReport ess_report(const ElicitedDistribution& d, std::size_t sample_size) {
  const double e = ess_beta(d);
  return {e, e > static_cast<double>(sample_size)};
}

}  // namespace expertsurv

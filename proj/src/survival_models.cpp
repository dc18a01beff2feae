#include "expertsurv/survival_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "boost_policy.hpp"
#include "expertsurv/errors.hpp"
#include "expertsurv/numerics.hpp"
#include "expertsurv/special_functions.hpp"

namespace expertsurv {
namespace {

using detail::MathPolicy;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Below this |Q| the generalized gamma CDF is evaluated as the log-normal
// limit; the density has a stable expansion and needs no cutoff.
constexpr double kGenGammaLogNormalCutoff = 1e-8;

std::string family_name(Family f) {
  switch (f) {
    case Family::Exponential: return "exponential";
    case Family::WeibullAFT: return "weibull";
    case Family::WeibullPH: return "weibull_ph";
    case Family::Gompertz: return "gompertz";
    case Family::Gamma: return "gamma";
    case Family::LogNormal: return "lognormal";
    case Family::LogLogistic: return "loglogistic";
    case Family::GenGamma: return "gengamma";
    case Family::GenF: return "genf";
    case Family::RoystonParmar: return "rp";
  }
  return "unknown";
}

double normal_log_sf(double z) {
  // log(1 - Phi(z))
  if (z < 5.0) return std::log(0.5 * boost::math::erfc(z / std::numbers::sqrt2, MathPolicy()));
  // Asymptotic Mills ratio keeps the far tail finite.
  const double z2 = z * z;
  return -0.5 * z2 - kLogSqrt2Pi - std::log(z) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

// log(1 + e^x)
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double normal_log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double normal_quantile(double q) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q, MathPolicy());
}

// lgamma(a) - [(a - 1/2) log a - a + log sqrt(2 pi)] for large a.
double stirling_correction(double a) {
  const double r = 1.0 / a;
  const double r2 = r * r;
  return r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)));
}

// e^y - 1 - y without cancellation for small y.
double expm1_minus_linear(double y) {
  if (std::fabs(y) > 0.1) return std::expm1(y) - y;
  double term = y;
  double sum = 0.0;
  for (int k = 2; k <= 14; ++k) {
    term *= y / k;
    sum += term;
  }
  return sum;
}

struct GenFShape {
  double delta;
  double s1;
  double s2;
};

GenFShape genf_shape(double q, double p) {
  const double tmp = q * q + 2.0 * p;
  const double delta = std::sqrt(tmp);
  return {delta, 2.0 / (tmp + q * delta), 2.0 / (tmp - q * delta)};
}

void require_family_block(const ParameterVector& p) {
  if (p.spec.treatment_effect)
    throw InvalidParameter("parameter vector carries a treatment effect; select an arm first");
  validate(p);
}

void require_positive_time(double t) {
  if (!(t > 0.0) || std::isnan(t)) throw DomainError("time must be positive");
}

// ---- natural cubic spline basis for Royston-Parmar ----

struct SplineValue {
  double s;
  double ds;
};

SplineValue spline_eval(std::span<const double> gamma, const KnotSet& knots, double x) {
  double s = gamma[0] + gamma[1] * x;
  double ds = gamma[1];
  const auto& k = knots.log_knots();
  if (k.size() > 2) {
    const double kmin = k.front();
    const double kmax = k.back();
    auto pos = [](double v) { return v > 0.0 ? v : 0.0; };
    for (std::size_t j = 1; j + 1 < k.size(); ++j) {
      const double lambda = (kmax - k[j]) / (kmax - kmin);
      const double a = pos(x - k[j]);
      const double b = pos(x - kmin);
      const double c = pos(x - kmax);
      const double v = a * a * a - lambda * b * b * b - (1.0 - lambda) * c * c * c;
      const double dv = 3.0 * (a * a - lambda * b * b - (1.0 - lambda) * c * c);
      s += gamma[j + 1] * v;
      ds += gamma[j + 1] * dv;
    }
  }
  return {s, ds};
}

// ---- per-family kernels, parameters already validated ----

double log_surv_impl(const ParameterVector& p, double t) {
  if (t == 0.0) return 0.0;
  const auto& v = p.values;
  switch (p.spec.family.tag) {
    case Family::Exponential: return -v[0] * t;
    case Family::WeibullAFT: return -std::pow(t / v[1], v[0]);
    case Family::WeibullPH: return -v[1] * std::pow(t, v[0]);
    case Family::Gompertz: {
      const double a = v[0], b = v[1];
      if (a == 0.0) return -b * t;
      return -b / a * std::expm1(a * t);
    }
    case Family::Gamma:
      return log_gamma_q(v[0], v[1] * t);
    case Family::LogNormal: return normal_log_sf((std::log(t) - v[0]) / v[1]);
    case Family::LogLogistic: return -softplus(v[0] * std::log(t / v[1]));
    case Family::GenGamma: {
      const double mu = v[0], sigma = v[1], q = v[2];
      const double w = (std::log(t) - mu) / sigma;
      if (std::fabs(q) < kGenGammaLogNormalCutoff) return normal_log_sf(w);
      const double shape = 1.0 / (q * q);
      const double u = shape * std::exp(q * w);
      return q > 0 ? log_gamma_q(shape, u) : log_gamma_p(shape, u);
    }
    case Family::GenF: {
      const double mu = v[0], sigma = v[1], q = v[2], pp = v[3];
      if (pp == 0.0) {
        ParameterVector gg{ModelSpec(ModelFamily{Family::GenGamma}), {mu, sigma, q}};
        return log_surv_impl(gg, t);
      }
      const auto sh = genf_shape(q, pp);
      const double w = (std::log(t) - mu) / sigma;
      // z = s2 / (s2 + s1 e^{delta w}); S = I_z(s2, s1)
      const double log_ratio = std::log(sh.s1 / sh.s2) + sh.delta * w;
      double z, zc;
      if (log_ratio > 0) {
        const double e = std::exp(-log_ratio);
        z = e / (1.0 + e);
        zc = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(log_ratio);
        z = 1.0 / (1.0 + e);
        zc = e / (1.0 + e);
      }
      const double s = z < 0.5 ? boost::math::ibeta(sh.s2, sh.s1, z, MathPolicy())
                               : boost::math::ibetac(sh.s1, sh.s2, zc, MathPolicy());
      return std::log(s);
    }
    case Family::RoystonParmar: {
      const auto sv = spline_eval(v, p.spec.knots, std::log(t));
      return -std::exp(sv.s);
    }
  }
  return kNaN;
}

double log_dens_impl(const ParameterVector& p, double t) {
  const auto& v = p.values;
  const double lt = std::log(t);
  switch (p.spec.family.tag) {
    case Family::Exponential: return std::log(v[0]) - v[0] * t;
    case Family::WeibullAFT: {
      const double a = v[0], b = v[1];
      return std::log(a / b) + (a - 1.0) * std::log(t / b) - std::pow(t / b, a);
    }
    case Family::WeibullPH: {
      const double a = v[0], m = v[1];
      return std::log(a * m) + (a - 1.0) * lt - m * std::pow(t, a);
    }
    case Family::Gompertz: return std::log(v[1]) + v[0] * t + log_surv_impl(p, t);
    case Family::Gamma: {
      const double a = v[0], b = v[1];
      return a * std::log(b) - boost::math::lgamma(a, MathPolicy()) + (a - 1.0) * lt - b * t;
    }
    case Family::LogNormal: {
      const double z = (lt - v[0]) / v[1];
      return normal_log_pdf(z) - std::log(v[1]) - lt;
    }
    case Family::LogLogistic: {
      const double a = v[0], b = v[1];
      const double r = std::log(t / b);
      return std::log(a / b) + (a - 1.0) * r - 2.0 * softplus(a * r);
    }
    case Family::GenGamma: {
      const double mu = v[0], sigma = v[1], q = v[2];
      const double w = (lt - mu) / sigma;
      if (q == 0.0) return normal_log_pdf(w) - std::log(sigma) - lt;
      const double shape = 1.0 / (q * q);
      if (shape > 100.0) {
        return -kLogSqrt2Pi - stirling_correction(shape) - std::log(sigma) - lt -
               shape * expm1_minus_linear(q * w);
      }
      return std::log(std::fabs(q)) + shape * std::log(shape) - std::log(sigma) - lt -
             boost::math::lgamma(shape, MathPolicy()) + shape * (q * w - std::exp(q * w));
    }
    case Family::GenF: {
      const double mu = v[0], sigma = v[1], q = v[2], pp = v[3];
      if (pp == 0.0) {
        ParameterVector gg{ModelSpec(ModelFamily{Family::GenGamma}), {mu, sigma, q}};
        return log_dens_impl(gg, t);
      }
      const auto sh = genf_shape(q, pp);
      const double w = (lt - mu) / sigma;
      const double log_ratio = std::log(sh.s1 / sh.s2) + sh.delta * w;
      const double log1p_ratio = softplus(log_ratio);
      return std::log(sh.delta) + sh.s1 * sh.delta * w + sh.s1 * std::log(sh.s1 / sh.s2) -
             std::log(sigma) - lt - (sh.s1 + sh.s2) * log1p_ratio -
             (boost::math::lgamma(sh.s1, MathPolicy()) + boost::math::lgamma(sh.s2, MathPolicy()) - boost::math::lgamma(sh.s1 + sh.s2, MathPolicy()));
    }
    case Family::RoystonParmar: {
      const auto sv = spline_eval(v, p.spec.knots, lt);
      if (!(sv.ds > 0.0)) return -kInf;
      return std::log(sv.ds) - lt + sv.s - std::exp(sv.s);
    }
  }
  return kNaN;
}

double numeric_quantile(const ParameterVector& p, double q) {
  // Solve log(-log S(t)) = log(-log(1 - q)) on the log-time axis.
  const double target = std::log(-std::log1p(-q));
  auto g = [&](double x) {
    const double ls = log_surv_impl(p, std::exp(x));
    if (ls == 0.0) return -kInf - target;
    return std::log(-ls) - target;
  };
  double lo = -1.0, hi = 1.0;
  if (p.spec.family.tag == Family::RoystonParmar && !p.spec.knots.empty()) {
    lo = p.spec.knots.lower() - 1.0;
    hi = p.spec.knots.upper() + 1.0;
  }
  for (int i = 0; i < 200 && !(g(lo) < 0.0); ++i) lo -= 2.0 * (i + 1);
  for (int i = 0; i < 200 && !(g(hi) > 0.0); ++i) hi += 2.0 * (i + 1);
  if (!(g(lo) < 0.0) || !(g(hi) > 0.0)) throw NumericError("quantile: could not bracket root");
  return std::exp(numerics::find_root(g, lo, hi, 1e-15));
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t ModelFamily::parameter_count() const {
  switch (tag) {
    case Family::Exponential: return 1;
    case Family::GenGamma: return 3;
    case Family::GenF: return 4;
    case Family::RoystonParmar: return static_cast<std::size_t>(knots) + 2;
    default: return 2;
  }
}

std::string ModelFamily::label() const {
  switch (tag) {
    case Family::Exponential: return "Exponential";
    case Family::WeibullAFT: return "Weibull AFT";
    case Family::WeibullPH: return "Weibull PH";
    case Family::Gompertz: return "Gompertz";
    case Family::Gamma: return "Gamma";
    case Family::LogNormal: return "Log-Normal";
    case Family::LogLogistic: return "Log-Logistic";
    case Family::GenGamma: return "GenGamma";
    case Family::GenF: return "GenF";
    case Family::RoystonParmar:
      return "Royston-Parmar (" + std::to_string(knots) + (knots == 1 ? "-knot)" : "-knots)");
  }
  return "unknown";
}

std::string ModelFamily::key() const {
  if (tag == Family::RoystonParmar) return "rp" + std::to_string(knots);
  return family_name(tag);
}

ModelFamily ModelFamily::parse(std::string_view key) {
  std::string k(key);
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  if (k == "weibull_aft" || k == "weibullaft") return {Family::WeibullAFT};
  if (k == "log-normal") return {Family::LogNormal};
  if (k == "log-logistic") return {Family::LogLogistic};
  for (Family f : {Family::Exponential, Family::WeibullAFT, Family::WeibullPH, Family::Gompertz,
                   Family::Gamma, Family::LogNormal, Family::LogLogistic, Family::GenGamma,
                   Family::GenF}) {
    if (k == family_name(f)) return {f};
  }
  if (k.rfind("rp", 0) == 0 && k.size() > 2 &&
      std::all_of(k.begin() + 2, k.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return {Family::RoystonParmar, std::stoi(k.substr(2))};
  }
  throw InvalidParameter("unknown survival family '" + std::string(key) + "'");
}

KnotSet::KnotSet(std::vector<double> log_knots) : log_knots_(std::move(log_knots)) {
  if (log_knots_.size() < 2) throw InvalidParameter("knot set needs at least two boundary knots");
  for (std::size_t i = 1; i < log_knots_.size(); ++i) {
    if (!(log_knots_[i] > log_knots_[i - 1]))
      throw InvalidParameter("knots must be strictly increasing");
  }
}

KnotSet KnotSet::from_event_times(std::span<const double> event_times, int internal_knots) {
  if (internal_knots < 0) throw InvalidParameter("internal knot count must be nonnegative");
  std::vector<double> x;
  x.reserve(event_times.size());
  for (double t : event_times) {
    require_positive_time(t);
    x.push_back(std::log(t));
  }
  std::sort(x.begin(), x.end());
  if (x.size() < 2 || x.front() == x.back())
    throw InvalidParameter("need at least two distinct event times to place knots");
  std::vector<double> knots{x.front()};
  for (int j = 1; j <= internal_knots; ++j) {
    // type-7 sample quantile
    const double prob = static_cast<double>(j) / (internal_knots + 1);
    const double h = (x.size() - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - lo;
    const double val = lo + 1 < x.size() ? x[lo] + frac * (x[lo + 1] - x[lo]) : x[lo];
    knots.push_back(val);
  }
  knots.push_back(x.back());
  return KnotSet(std::move(knots));
}

std::size_t ModelSpec::parameter_count() const {
  return family.parameter_count() + (treatment_effect ? 1 : 0);
}

std::vector<std::string> ModelSpec::parameter_names() const {
  std::vector<std::string> names;
  switch (family.tag) {
    case Family::Exponential: names = {"rate"}; break;
    case Family::WeibullAFT: names = {"shape", "scale"}; break;
    case Family::WeibullPH: names = {"shape", "scale"}; break;
    case Family::Gompertz: names = {"shape", "rate"}; break;
    case Family::Gamma: names = {"shape", "rate"}; break;
    case Family::LogNormal: names = {"meanlog", "sdlog"}; break;
    case Family::LogLogistic: names = {"shape", "scale"}; break;
    case Family::GenGamma: names = {"mu", "sigma", "Q"}; break;
    case Family::GenF: names = {"mu", "sigma", "Q", "P"}; break;
    case Family::RoystonParmar:
      for (std::size_t i = 0; i < family.parameter_count(); ++i) names.push_back("gamma" + std::to_string(i));
      break;
  }
  if (treatment_effect) names.emplace_back("treatment");
  return names;
}

std::size_t ModelSpec::location_index() const {
  switch (family.tag) {
    case Family::WeibullAFT:
    case Family::WeibullPH:
    case Family::Gompertz:
    case Family::Gamma:
    case Family::LogLogistic: return 1;
    default: return 0;
  }
}

bool ModelSpec::is_positive(std::size_t i) const {
  if (i >= family.parameter_count()) return false;  // treatment coefficient
  switch (family.tag) {
    case Family::Exponential:
    case Family::WeibullAFT:
    case Family::WeibullPH:
    case Family::Gamma:
    case Family::LogLogistic: return true;
    case Family::Gompertz: return i == 1;
    case Family::LogNormal:
    case Family::GenGamma: return i == 1;
    case Family::GenF: return i == 1 || i == 3;
    case Family::RoystonParmar: return false;
  }
  return false;
}

ParameterVector make_parameters(ModelSpec spec, std::vector<double> values) {
  ParameterVector p{std::move(spec), std::move(values)};
  validate(p);
  return p;
}

bool satisfies_constraints(const ParameterVector& p) {
  const auto& spec = p.spec;
  if (p.values.size() != spec.parameter_count()) return false;
  if (spec.family.tag == Family::RoystonParmar) {
    if (spec.family.knots < 0) return false;
    if (spec.knots.empty() || spec.knots.internal_count() != static_cast<std::size_t>(spec.family.knots))
      return false;
  }
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double v = p.values[i];
    if (!std::isfinite(v)) return false;
    if (spec.family.tag == Family::GenF && i == 3) {
      if (v < 0.0) return false;
    } else if (spec.is_positive(i) && !(v > 0.0)) {
      return false;
    }
  }
  return true;
}

void validate(const ParameterVector& p) {
  const auto& spec = p.spec;
  if (p.values.size() != spec.parameter_count()) {
    throw InvalidParameter(spec.family.label() + ": expected " + std::to_string(spec.parameter_count()) +
                           " parameters, got " + std::to_string(p.values.size()));
  }
  if (spec.family.tag == Family::RoystonParmar &&
      (spec.knots.empty() || spec.knots.internal_count() != static_cast<std::size_t>(spec.family.knots))) {
    throw InvalidParameter("Royston-Parmar model needs a knot set with " + std::to_string(spec.family.knots) +
                           " internal knots");
  }
  if (!satisfies_constraints(p)) {
    const auto names = spec.parameter_names();
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double v = p.values[i];
      const bool bad = !std::isfinite(v) || (spec.family.tag == Family::GenF && i == 3 ? v < 0.0
                                                                                          : spec.is_positive(i) && !(v > 0.0));
      if (bad) throw InvalidParameter(spec.family.label() + ": parameter '" + names[i] + "' out of range");
    }
    throw InvalidParameter(spec.family.label() + ": invalid parameters");
  }
}

ParameterVector for_arm(const ParameterVector& p, int arm) {
  if (arm != 0 && arm != 1) throw InvalidParameter("arm must be 0 or 1");
  const std::size_t k = p.spec.family.parameter_count();
  ParameterVector out{ModelSpec(p.spec.family, p.spec.knots, false),
                      std::vector<double>(p.values.begin(), p.values.begin() + static_cast<long>(std::min(k, p.values.size())))};
  if (p.spec.treatment_effect && arm == 1 && p.values.size() == k + 1) {
    const double beta = p.values[k];
    const std::size_t loc = p.spec.location_index();
    if (p.spec.is_positive(loc))
      out.values[loc] *= std::exp(beta);
    else
      out.values[loc] += beta;
  }
  return out;
}

std::vector<double> to_unconstrained(const ParameterVector& p) {
  validate(p);
  std::vector<double> z(p.values.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = p.spec.is_positive(i) ? std::log(p.values[i]) : p.values[i];
  return z;
}

ParameterVector from_unconstrained(const ModelSpec& spec, std::span<const double> z) {
  if (z.size() != spec.parameter_count()) throw InvalidParameter("unconstrained vector has wrong length");
  ParameterVector p{spec, std::vector<double>(z.size())};
  for (std::size_t i = 0; i < z.size(); ++i) p.values[i] = spec.is_positive(i) ? std::exp(z[i]) : z[i];
  return p;
}

double log_jacobian(const ModelSpec& spec, std::span<const double> z) {
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (spec.is_positive(i)) s += z[i];
  return s;
}

double log_density(const ParameterVector& p, double t) {
  require_family_block(p);
  require_positive_time(t);
  return log_dens_impl(p, t);
}

double log_survival(const ParameterVector& p, double t) {
  require_family_block(p);
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  return log_surv_impl(p, t);
}

double survival(const ParameterVector& p, double t) { return std::exp(log_survival(p, t)); }

double cdf(const ParameterVector& p, double t) { return -std::expm1(log_survival(p, t)); }

double cumulative_hazard(const ParameterVector& p, double t) { return -log_survival(p, t); }

double hazard(const ParameterVector& p, double t) {
  require_family_block(p);
  require_positive_time(t);
  const auto& v = p.values;
  switch (p.spec.family.tag) {
    case Family::Exponential: return v[0];
    case Family::WeibullAFT: return v[0] / v[1] * std::pow(t / v[1], v[0] - 1.0);
    case Family::WeibullPH: return v[0] * v[1] * std::pow(t, v[0] - 1.0);
    case Family::Gompertz: return v[1] * std::exp(v[0] * t);
    case Family::RoystonParmar: {
      const auto sv = spline_eval(v, p.spec.knots, std::log(t));
      return sv.ds / t * std::exp(sv.s);
    }
    default: return std::exp(log_dens_impl(p, t) - log_surv_impl(p, t));
  }
}

double quantile(const ParameterVector& p, double q) {
  require_family_block(p);
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile: probability must lie in (0, 1)");
  const auto& v = p.values;
  switch (p.spec.family.tag) {
    case Family::Exponential: return -std::log1p(-q) / v[0];
    case Family::WeibullAFT: return v[1] * std::pow(-std::log1p(-q), 1.0 / v[0]);
    case Family::WeibullPH: return std::pow(-std::log1p(-q) / v[1], 1.0 / v[0]);
    case Family::Gompertz: {
      const double a = v[0], b = v[1];
      const double h = -std::log1p(-q);
      if (a == 0.0) return h / b;
      const double arg = a * h / b;
      if (arg <= -1.0) return kInf;  // defective: S(inf) = exp(b/a) >= 1 - q
      return std::log1p(arg) / a;
    }
    case Family::Gamma: return boost::math::gamma_p_inv(v[0], q, MathPolicy()) / v[1];
    case Family::LogNormal: return std::exp(v[0] + v[1] * normal_quantile(q));
    case Family::LogLogistic: return v[1] * std::pow(q / (1.0 - q), 1.0 / v[0]);
    case Family::GenGamma: {
      const double mu = v[0], sigma = v[1], qq = v[2];
      if (std::fabs(qq) < kGenGammaLogNormalCutoff) return std::exp(mu + sigma * normal_quantile(q));
      const double shape = 1.0 / (qq * qq);
      const double u = qq > 0 ? boost::math::gamma_p_inv(shape, q, MathPolicy())
                              : boost::math::gamma_q_inv(shape, q, MathPolicy());
      const double w = std::log(u / shape) / qq;
      return std::exp(mu + sigma * w);
    }
    case Family::GenF: {
      const double mu = v[0], sigma = v[1], qq = v[2], pp = v[3];
      if (pp == 0.0) {
        ParameterVector gg{ModelSpec(ModelFamily{Family::GenGamma}), {mu, sigma, qq}};
        return quantile(gg, q);
      }
      const auto sh = genf_shape(qq, pp);
      double zc = 0.0;
      const double z = boost::math::ibeta_inv(sh.s2, sh.s1, 1.0 - q, &zc, MathPolicy());
      // e^{delta w} = s2 (1 - z) / (s1 z)
      const double w = (std::log(sh.s2 / sh.s1) + std::log(zc) - std::log(z)) / sh.delta;
      return std::exp(mu + sigma * w);
    }
    case Family::RoystonParmar: return numeric_quantile(p, q);
  }
  return kNaN;
}

SurvivalMean SurvivalMean::infinite() { return {kInf, false}; }

SurvivalMean mean_survival_quadrature(const ParameterVector& p) {
  require_family_block(p);
  const double t_hi = quantile(p, 1.0 - 1e-12);
  if (!std::isfinite(t_hi)) return SurvivalMean::infinite();
  // Local power-law exponent of the survival tail: S(t) ~ t^{-alpha}.
  const double alpha = t_hi * hazard(p, t_hi);
  if (!(alpha > 1.0)) return SurvivalMean::infinite();
  const double t_lo = quantile(p, 1e-10);

  // S > 1 - 1e-10 on [0, t_lo].
  const double head = t_lo;
  auto s_log = [&p](double x) {
    const double t = std::exp(x);
    return std::exp(log_surv_impl(p, t)) * t;
  };
  const double body = numerics::integrate(s_log, std::log(t_lo), std::log(t_hi), 1e-10, 15).value;
  const double tail = std::exp(log_surv_impl(p, t_hi)) * t_hi / (alpha - 1.0);
  return {head + body + tail, true};
}

SurvivalMean mean_survival(const ParameterVector& p) {
  require_family_block(p);
  const auto& v = p.values;
  switch (p.spec.family.tag) {
    case Family::Exponential: return {1.0 / v[0], true};
    case Family::WeibullAFT: return {v[1] * std::tgamma(1.0 + 1.0 / v[0]), true};
    case Family::WeibullPH: return {std::pow(v[1], -1.0 / v[0]) * std::tgamma(1.0 + 1.0 / v[0]), true};
    case Family::Gompertz: {
      const double a = v[0], b = v[1];
      if (a < 0.0) return SurvivalMean::infinite();  // improper: positive mass at infinity
      if (a == 0.0) return {1.0 / b, true};
      // (1/a) e^{b/a} Gamma(0, b/a)
      return {expint_e1_scaled(b / a) / a, true};
    }
    case Family::Gamma: return {v[0] / v[1], true};
    case Family::LogNormal: return {std::exp(v[0] + 0.5 * v[1] * v[1]), true};
    case Family::LogLogistic: {
      const double a = v[0], b = v[1];
      if (a <= 1.0) return SurvivalMean::infinite();
      const double x = std::numbers::pi / a;
      return {b * x / std::sin(x), true};
    }
    case Family::GenGamma: {
      const double mu = v[0], sigma = v[1], q = v[2];
      if (q == 0.0) return {std::exp(mu + 0.5 * sigma * sigma), true};
      if (q == 1.0) return {std::exp(mu) * std::tgamma(1.0 + sigma), true};
      return mean_survival_quadrature(p);
    }
    case Family::GenF:
    case Family::RoystonParmar: return mean_survival_quadrature(p);
  }
  return SurvivalMean::infinite();
}

double spline_log_cumhaz(const ParameterVector& p, const KnotSet& knots, double t) {
  if (p.spec.family.tag != Family::RoystonParmar) throw InvalidParameter("spline_log_cumhaz needs a Royston-Parmar model");
  require_positive_time(t);
  if (p.values.size() != knots.internal_count() + 2)
    throw InvalidParameter("spline coefficient count must equal internal knots + 2");
  return spline_eval(p.values, knots, std::log(t)).s;
}

double spline_log_cumhaz_slope(const ParameterVector& p, const KnotSet& knots, double t) {
  if (p.spec.family.tag != Family::RoystonParmar) throw InvalidParameter("spline_log_cumhaz needs a Royston-Parmar model");
  require_positive_time(t);
  if (p.values.size() != knots.internal_count() + 2)
    throw InvalidParameter("spline coefficient count must equal internal knots + 2");
  return spline_eval(p.values, knots, std::log(t)).ds;
}

bool spline_is_monotone(const ParameterVector& p, double t_min, double t_max, std::size_t grid_points) {
  require_positive_time(t_min);
  if (!(t_max >= t_min)) throw DomainError("spline_is_monotone: t_max < t_min");
  const ParameterVector base = for_arm(p, 0);
  const std::size_t n = std::max<std::size_t>(grid_points, 2);
  double prev = -kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(t_min) + (std::log(t_max) - std::log(t_min)) * i / (n - 1);
    const double s = spline_eval(base.values, base.spec.knots, x).s;
    if (s < prev) return false;
    prev = s;
  }
  return true;
}

}  // namespace expertsurv

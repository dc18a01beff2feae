#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace expertsurv {

enum class Family {
  Exponential,
  WeibullAFT,
  WeibullPH,
  Gompertz,
  Gamma,
  LogNormal,
  LogLogistic,
  GenGamma,
  GenF,
  RoystonParmar,
};

/// A survival family. `knots` is the number of internal spline knots and is
/// only meaningful for Royston-Parmar models.
struct ModelFamily {
  Family tag = Family::Exponential;
  int knots = 0;

  std::size_t parameter_count() const;
  /// Human-readable label used in comparison tables ("Log-Normal", "Royston-Parmar (1-knot)").
  std::string label() const;
  /// Stable identifier used in configuration files ("lognormal", "rp1").
  std::string key() const;
  /// Inverse of key(); also accepts a few aliases ("weibull" for the AFT form).
  static ModelFamily parse(std::string_view key);

  friend bool operator==(const ModelFamily&, const ModelFamily&) = default;
};

/// Spline knots on the log-time scale: boundary knots first and last,
/// internal knots in between, strictly increasing.
class KnotSet {
 public:
  KnotSet() = default;
  explicit KnotSet(std::vector<double> log_knots);

  /// Boundary knots at the min/max log event time, internal knots at
  /// equally spaced quantiles of the log event times (the median for one knot).
  static KnotSet from_event_times(std::span<const double> event_times, int internal_knots);

  std::size_t internal_count() const { return log_knots_.empty() ? 0 : log_knots_.size() - 2; }
  bool empty() const { return log_knots_.empty(); }
  double lower() const { return log_knots_.front(); }
  double upper() const { return log_knots_.back(); }
  const std::vector<double>& log_knots() const { return log_knots_; }

  friend bool operator==(const KnotSet&, const KnotSet&) = default;

 private:
  std::vector<double> log_knots_;
};

/// Family plus everything needed to interpret its parameter vector.
///
/// With `treatment_effect` set, one extra coefficient is appended to the
/// family parameters. It shifts the location parameter of arm 1: rates and
/// scales are multiplied by exp(beta), location-scale families get mu + beta,
/// Royston-Parmar splines get gamma0 + beta.
struct ModelSpec {
  ModelFamily family;
  KnotSet knots;
  bool treatment_effect = false;

  ModelSpec() = default;
  ModelSpec(ModelFamily f) : family(f) {}  // NOLINT(google-explicit-constructor)
  ModelSpec(ModelFamily f, KnotSet k, bool treatment = false)
      : family(f), knots(std::move(k)), treatment_effect(treatment) {}

  std::size_t parameter_count() const;
  std::vector<std::string> parameter_names() const;
  /// Index of the location parameter within the family block.
  std::size_t location_index() const;
  /// True when the parameter at `index` is positive and log-transformed.
  bool is_positive(std::size_t index) const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Parameters on the natural scale, ordered as in the family table:
///   Exponential  rate
///   WeibullAFT   shape a, scale b
///   WeibullPH    shape a, scale m
///   Gompertz     shape a, rate b
///   Gamma        shape a, rate b
///   LogNormal    meanlog, sdlog
///   LogLogistic  shape a, scale b
///   GenGamma     mu, sigma, Q
///   GenF         mu, sigma, Q, P
///   RoystonParmar gamma0 .. gamma{k+1}
/// followed by the treatment coefficient when the spec has one.
struct ParameterVector {
  ModelSpec spec;
  std::vector<double> values;

  double operator[](std::size_t i) const { return values[i]; }
};

ParameterVector make_parameters(ModelSpec spec, std::vector<double> values);

bool satisfies_constraints(const ParameterVector& p);
/// Throws InvalidParameter describing the first violated constraint.
void validate(const ParameterVector& p);

/// Family parameters for one treatment arm (0 or 1). Without a treatment
/// effect both arms share the same parameters.
ParameterVector for_arm(const ParameterVector& p, int arm);

std::vector<double> to_unconstrained(const ParameterVector& p);
ParameterVector from_unconstrained(const ModelSpec& spec, std::span<const double> z);
/// log |d natural / d unconstrained|, i.e. the sum of the log-transformed coordinates.
double log_jacobian(const ModelSpec& spec, std::span<const double> z);

// Distribution functions. All throw DomainError for t outside the support
// and InvalidParameter for constraint violations or for specs that still
// carry a treatment effect (select an arm with for_arm first).
double log_density(const ParameterVector& p, double t);
double log_survival(const ParameterVector& p, double t);
double survival(const ParameterVector& p, double t);
double cdf(const ParameterVector& p, double t);
double hazard(const ParameterVector& p, double t);
double cumulative_hazard(const ParameterVector& p, double t);
/// Time by which a fraction q has failed. +inf for defective
/// distributions whose total failure mass is below q.
double quantile(const ParameterVector& p, double q);

struct SurvivalMean {
  double value = 0.0;
  bool finite = true;

  static SurvivalMean infinite();
};

/// Expected survival time, or an infinite tag when the integral of S diverges.
SurvivalMean mean_survival(const ParameterVector& p);
/// Expected survival by quadrature of S(t) with a power-law tail correction.
/// Used directly for families without a closed form.
SurvivalMean mean_survival_quadrature(const ParameterVector& p);

/// Royston-Parmar log cumulative hazard, a natural cubic spline in log t.
double spline_log_cumhaz(const ParameterVector& p, const KnotSet& knots, double t);
/// d log H / d log t. Nonpositive values mean the fitted cumulative hazard decreases.
double spline_log_cumhaz_slope(const ParameterVector& p, const KnotSet& knots, double t);
/// Scans `grid_points` log-spaced times in [t_min, t_max] and reports whether
/// log H is nondecreasing over the range.
bool spline_is_monotone(const ParameterVector& p, double t_min, double t_max,
                        std::size_t grid_points = 1000);

}  // namespace expertsurv

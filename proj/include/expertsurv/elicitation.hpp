#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace expertsurv {

enum class ElicitedFamily { Normal, StudentT, LogNormal, Gamma, Beta, ScaledChi };

std::string family_name(ElicitedFamily f);
/// Accepts "normal", "t"/"studentt", "lognormal", "gamma", "beta", "scaledchi".
ElicitedFamily parse_elicited_family(std::string_view name);

/// One expert's plausible limits and most likely value for a quantity at a timepoint.
struct ExpertJudgment {
  std::string expert_id;
  double timepoint = 0.0;
  double lpl = 0.0;
  double mlv = 0.0;
  double upl = 0.0;
  double coverage = 0.99;
  /// Survival probabilities must lie in [0,1]; set false for means, medians etc.
  bool probability_scale = true;
};

/// Throws InvalidParameter when ordering, range or coverage is violated.
void validate(const ExpertJudgment& j);

/// A parametric density for one expert's belief.
///
/// Parameters by family:
///   Normal     mean, sd
///   StudentT   location, scale, df
///   LogNormal  meanlog, sdlog
///   Gamma      shape, rate
///   Beta       alpha, beta
///   ScaledChi  df, scale     (scale * chi(df))
class ElicitedDistribution {
 public:
  ElicitedDistribution() = default;
  ElicitedDistribution(ElicitedFamily family, std::vector<double> params);

  static ElicitedDistribution normal(double mean, double sd);
  static ElicitedDistribution student_t(double location, double scale, double df = 3.0);
  static ElicitedDistribution lognormal(double meanlog, double sdlog);
  static ElicitedDistribution gamma(double shape, double rate);
  static ElicitedDistribution beta(double alpha, double beta);
  static ElicitedDistribution scaled_chi(double df, double scale);

  ElicitedFamily family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  /// Number of fitted parameters (StudentT df is fixed, so 2).
  std::size_t free_parameter_count() const;
  std::string label() const;

  double log_pdf(double x) const;  // -inf outside the support
  double pdf(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;
  double mode() const;
  double mean() const;
  double variance() const;
  std::pair<double, double> support() const;
  double sample(std::mt19937_64& rng) const;

  /// Least-squares residual of the fit that produced this distribution (0 when constructed directly).
  double sse = 0.0;
  /// Probability mass outside [0,1] for probability-scale fits.
  double leakage = 0.0;

  friend bool operator==(const ElicitedDistribution& a, const ElicitedDistribution& b) {
    return a.family_ == b.family_ && a.params_ == b.params_;
  }

 private:
  ElicitedFamily family_ = ElicitedFamily::Normal;
  std::vector<double> params_{0.0, 1.0};
};

struct ElicitationOptions {
  double t_df = 3.0;
  /// SSE differences at or below this count as ties in best_fit.
  double tie_tolerance = 1e-12;
};

/// Squared residuals at the coverage quantiles plus the mode residual.
double elicitation_sse(const ExpertJudgment& j, const ElicitedDistribution& d);

/// Least-squares fit of one family to a judgment (multi-start Nelder-Mead).
/// Throws UnsupportedFamily when the family's support cannot hold the
/// judgments and FitFailure when no start converges.
ElicitedDistribution fit_family(const ExpertJudgment& j, ElicitedFamily family,
                                const ElicitationOptions& options = {});

/// Lowest-SSE candidate. Among SSE ties, probability-scale fits without mass
/// outside [0,1] come first, then fewer parameters, then family order.
ElicitedDistribution best_fit(const ExpertJudgment& j, std::span<const ElicitedFamily> candidates,
                              const ElicitationOptions& options = {});

/// One family for all judgments of an expert, chosen by total SSE.
std::vector<ElicitedDistribution> best_fit_per_expert(std::span<const ExpertJudgment> judgments,
                                                      std::span<const ElicitedFamily> candidates,
                                                      const ElicitationOptions& options = {});

const std::vector<ElicitedFamily>& default_candidates();

/// alpha + beta. Throws UnsupportedFamily for non-beta input.
double ess_beta(const ElicitedDistribution& d);

struct EssReport {
  double ess = 0.0;
  bool exceeds_sample_size = false;
};
EssReport ess_report(const ElicitedDistribution& d, std::size_t sample_size);

}  // namespace expertsurv

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "expertsurv/dataset.hpp"
#include "expertsurv/inference.hpp"

namespace expertsurv {

struct DicResult {
  double dic = 0.0;
  double mean_deviance = 0.0;     // D-bar
  double deviance_at_mean = 0.0;  // D(theta-bar)
  double pd = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // draws with non-finite deviance
};

/// DIC with D(theta) = -2 data_loglik(theta). theta-bar is the mean of the
/// unconstrained draws mapped back to the natural scale. With
/// `include_penalties` the penalty log densities enter the deviance too.
DicResult dic(const PosteriorSample& samples, const SurvivalDataset& d, std::span<const ExpertPenalty> penalties = {},
              bool include_penalties = false);

/// -2 loglik + p log n for an unpenalized, converged maximum-likelihood fit.
double bic(const FitResult& fit, const SurvivalDataset& d);

struct CurveRow {
  double time = 0.0;
  double mean = 1.0;
  double median = 1.0;
  double lower = 1.0;  // 2.5%
  double upper = 1.0;  // 97.5%
};

/// Posterior summary of S(t) for one arm over a grid of nonnegative times.
std::vector<CurveRow> survival_summary(const PosteriorSample& samples, std::span<const double> grid, int arm = 0);

/// Sample quantile with linear interpolation between order statistics (type 7).
double quantile_type7(std::vector<double> values, double p);

struct ComparisonRow {
  std::string model;  // family label
  std::string key;
  double dic = std::numeric_limits<double>::quiet_NaN();
  double pd = std::numeric_limits<double>::quiet_NaN();
  double dic_penalized = std::numeric_limits<double>::quiet_NaN();  // deviance includes penalties
  double bic = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

enum class RankBy { Dic, Bic };

/// Table of fitted models in ascending order of the ranking criterion.
/// Rows with a non-finite criterion sort last and are flagged in `status`.
class ModelComparison {
 public:
  explicit ModelComparison(RankBy rank = RankBy::Dic) : rank_(rank) {}

  void add(ComparisonRow row);
  const std::vector<ComparisonRow>& rows() const { return rows_; }
  RankBy rank_by() const { return rank_; }
  std::size_t size() const { return rows_.size(); }
  /// Plain-text table: Model, DIC, BIC.
  std::string format_table() const;

 private:
  RankBy rank_;
  std::vector<ComparisonRow> rows_;
};

}  // namespace expertsurv

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "expertsurv/dataset.hpp"
#include "expertsurv/elicitation.hpp"
#include "expertsurv/mcmc.hpp"
#include "expertsurv/pooling.hpp"
#include "expertsurv/survival_models.hpp"

namespace expertsurv {

// ---------------------------------------------------------------------------
// Expert penalties

enum class QuantityKind { SurvivalAt, MeanSurvival, MedianSurvival, MeanDifference, SurvivalDifferenceAt };

/// Model-implied quantity an opinion refers to. Differences are arm 1 minus arm 0.
struct TargetQuantity {
  QuantityKind kind = QuantityKind::SurvivalAt;
  double timepoint = 0.0;  // SurvivalAt, SurvivalDifferenceAt
  int arm = 0;             // SurvivalAt, MeanSurvival, MedianSurvival

  static TargetQuantity survival_at(double t, int arm = 0) { return {QuantityKind::SurvivalAt, t, arm}; }
  static TargetQuantity mean(int arm = 0) { return {QuantityKind::MeanSurvival, 0.0, arm}; }
  static TargetQuantity median(int arm = 0) { return {QuantityKind::MedianSurvival, 0.0, arm}; }
  static TargetQuantity mean_difference() { return {QuantityKind::MeanDifference, 0.0, 0}; }
  static TargetQuantity survival_difference_at(double t) { return {QuantityKind::SurvivalDifferenceAt, t, 0}; }

  bool is_difference() const;
  bool is_probability() const;
  std::string label() const;
};

std::string quantity_key(QuantityKind k);
QuantityKind parse_quantity(std::string_view key);

/// A pooled opinion about a model quantity. `weight` scales the log density
/// (1 for a standard penalty, 0 switches it off).
struct ExpertPenalty {
  TargetQuantity quantity;
  PooledOpinion opinion;
  double weight = 1.0;
};

struct QuantityValue {
  double value = 0.0;
  bool finite = true;  // false for a divergent mean
};

/// Evaluates the quantity for parameters `p`. Arm-specific quantities on a
/// model without treatment effect use the shared parameters.
QuantityValue model_quantity(const ParameterVector& p, const TargetQuantity& q);

/// Throws PreconditionError when the penalty cannot apply to the model/data
/// (difference without a treatment effect, arm without arms, t* <= 0).
void check_penalty(const ExpertPenalty& pen, const ModelSpec& spec, const SurvivalDataset* data = nullptr);

/// Weighted pooled log density at the model-implied quantity. A divergent
/// mean gives -inf and sets `*divergent`.
double penalty_logdensity(const ParameterVector& p, const ExpertPenalty& pen, bool* divergent = nullptr);

// ---------------------------------------------------------------------------
// Likelihood, priors, posterior

/// Sum of event log densities and censored log survivals. Invalid parameters
/// give -inf and set `*invalid`.
double data_loglik(const ParameterVector& p, const SurvivalDataset& d, bool* invalid = nullptr);

enum class PriorScale { Natural, Unconstrained };

/// Prior for one parameter. An empty `distribution` means flat on `scale`.
struct ParameterPrior {
  std::optional<ElicitedDistribution> distribution;
  PriorScale scale = PriorScale::Unconstrained;

  static ParameterPrior flat(PriorScale s = PriorScale::Natural) { return {std::nullopt, s}; }
  static ParameterPrior natural(ElicitedDistribution d) { return {std::move(d), PriorScale::Natural}; }
  static ParameterPrior unconstrained(ElicitedDistribution d) { return {std::move(d), PriorScale::Unconstrained}; }
};

/// Independent priors per parameter. Parameters without an explicit entry
/// get the default, Normal(0, 10^2) on the unconstrained scale.
class BasePrior {
 public:
  BasePrior() = default;
  explicit BasePrior(std::vector<ParameterPrior> priors) : priors_(std::move(priors)) {}

  static BasePrior weakly_informative() { return BasePrior(); }
  /// Flat on the natural scale for every parameter (an improper constant).
  static BasePrior flat(std::size_t parameter_count);

  const ParameterPrior& at(std::size_t i) const;
  std::size_t explicit_count() const { return priors_.size(); }

  /// Density with respect to the natural parameters.
  double log_density(const ParameterVector& p) const;
  /// Density with respect to the unconstrained coordinates (Jacobians included).
  double log_density_unconstrained(const ModelSpec& spec, std::span<const double> z) const;

 private:
  std::vector<ParameterPrior> priors_;
};

/// data_loglik + all penalty terms + base prior, as a density over natural parameters.
double log_posterior(const ParameterVector& p, const SurvivalDataset& d, std::span<const ExpertPenalty> penalties,
                     const BasePrior& prior);

/// Same target expressed over unconstrained coordinates (used by the sampler).
double log_posterior_unconstrained(const ModelSpec& spec, std::span<const double> z, const SurvivalDataset& d,
                                   std::span<const ExpertPenalty> penalties, const BasePrior& prior);

/// Royston-Parmar specs without knots get knots from the dataset's event times.
ModelSpec prepare_spec(ModelSpec spec, const SurvivalDataset& d);

// ---------------------------------------------------------------------------
// Penalized maximum likelihood

struct FitOptions {
  int starts = 5;
  double gradient_tol = 1e-6;
  std::uint64_t seed = 20240611;
};

struct FitResult {
  ParameterVector params;
  std::vector<double> unconstrained;
  double loglik_data = 0.0;
  double loglik_penalized = 0.0;
  /// Inverse of the negated Hessian of the penalized log-likelihood on the
  /// unconstrained scale; NaN entries when the Hessian is not negative definite.
  Eigen::MatrixXd covariance;
  bool converged = false;
  bool penalized = false;
  double gradient_norm = 0.0;
  std::string message;

  /// Standard errors on the unconstrained scale.
  std::vector<double> standard_errors() const;
};

/// Maximizes data log-likelihood plus penalties (flat base prior) over the
/// unconstrained scale from several starts. Nonconvergence is reported
/// through `converged` and `message`, with the best point found.
FitResult fit_mle(const SurvivalDataset& d, const ModelSpec& spec, std::span<const ExpertPenalty> penalties = {},
                  const FitOptions& options = {});

/// Deterministic starting point on the natural scale derived from the data.
std::vector<double> initial_values(const ModelSpec& spec, const SurvivalDataset& d);

// ---------------------------------------------------------------------------
// MCMC

struct PosteriorSample {
  ModelSpec spec;
  /// [chain][draw] parameter vectors on the natural scale
  std::vector<std::vector<std::vector<double>>> chains;
  /// same draws on the unconstrained scale
  std::vector<std::vector<std::vector<double>>> unconstrained;
  std::vector<double> acceptance;
  std::vector<double> rhat;
  std::vector<double> mcmc_ess;
  std::vector<std::string> warnings;

  std::size_t chain_count() const { return chains.size(); }
  std::size_t draws_per_chain() const { return chains.empty() ? 0 : chains.front().size(); }
  std::size_t total_draws() const { return chain_count() * draws_per_chain(); }
  /// All draws of parameter k, chains concatenated in index order.
  std::vector<double> pooled(std::size_t k) const;
  ParameterVector draw(std::size_t chain, std::size_t i) const;
  bool converged() const { return warnings.empty(); }
};

/// Adaptive Metropolis on the unconstrained scale, started around the
/// posterior mode. Rejects empty datasets and invalid configurations.
PosteriorSample mcmc_sample(const SurvivalDataset& d, const ModelSpec& spec, std::span<const ExpertPenalty> penalties,
                            const BasePrior& prior, const mcmc::Config& config);

/// Packs generic sampler output into a PosteriorSample for `spec`.
PosteriorSample make_posterior_sample(const ModelSpec& spec, mcmc::Chains&& chains);

}  // namespace expertsurv

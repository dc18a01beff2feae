#include "expertsurv/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "expertsurv/errors.hpp"
#include "expertsurv/optimize.hpp"

namespace expertsurv {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Neumaier summation keeps the log-likelihood independent of record order
// to within an ulp or so.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

double unit_normal_jitter(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

const ParameterPrior& default_prior() {
  static const ParameterPrior p = ParameterPrior::unconstrained(ElicitedDistribution::normal(0.0, 10.0));
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------

bool TargetQuantity::is_difference() const {
  return kind == QuantityKind::MeanDifference || kind == QuantityKind::SurvivalDifferenceAt;
}

bool TargetQuantity::is_probability() const { return kind == QuantityKind::SurvivalAt; }

std::string quantity_key(QuantityKind k) {
  switch (k) {
    case QuantityKind::SurvivalAt: return "survival";
    case QuantityKind::MeanSurvival: return "mean";
    case QuantityKind::MedianSurvival: return "median";
    case QuantityKind::MeanDifference: return "mean_difference";
    case QuantityKind::SurvivalDifferenceAt: return "survival_difference";
  }
  return "unknown";
}

QuantityKind parse_quantity(std::string_view key) {
  for (auto k : {QuantityKind::SurvivalAt, QuantityKind::MeanSurvival, QuantityKind::MedianSurvival,
                 QuantityKind::MeanDifference, QuantityKind::SurvivalDifferenceAt})
    if (quantity_key(k) == key) return k;
  throw InvalidParameter("unknown quantity '" + std::string(key) + "'");
}

std::string TargetQuantity::label() const {
  std::ostringstream os;
  os << quantity_key(kind);
  if (kind == QuantityKind::SurvivalAt || kind == QuantityKind::SurvivalDifferenceAt) os << "@" << timepoint;
  if (!is_difference() && arm != 0) os << "[arm " << arm << "]";
  return os.str();
}

QuantityValue model_quantity(const ParameterVector& p, const TargetQuantity& q) {
  auto arm_params = [&](int arm) { return for_arm(p, p.spec.treatment_effect ? arm : 0); };
  switch (q.kind) {
    case QuantityKind::SurvivalAt:
      return {survival(arm_params(q.arm), q.timepoint), true};
    case QuantityKind::MeanSurvival: {
      const auto m = mean_survival(arm_params(q.arm));
      return {m.value, m.finite};
    }
    case QuantityKind::MedianSurvival: {
      const double med = quantile(arm_params(q.arm), 0.5);
      return {med, std::isfinite(med)};
    }
    case QuantityKind::MeanDifference: {
      const auto m0 = mean_survival(arm_params(0));
      const auto m1 = mean_survival(arm_params(1));
      if (!m0.finite || !m1.finite) return {kNaN, false};
      return {m1.value - m0.value, true};
    }
    case QuantityKind::SurvivalDifferenceAt:
      return {survival(arm_params(1), q.timepoint) - survival(arm_params(0), q.timepoint), true};
  }
  return {kNaN, false};
}

void check_penalty(const ExpertPenalty& pen, const ModelSpec& spec, const SurvivalDataset* data) {
  const auto& q = pen.quantity;
  const std::string what = "penalty on " + q.label() + ": ";
  if ((q.kind == QuantityKind::SurvivalAt || q.kind == QuantityKind::SurvivalDifferenceAt) &&
      !(q.timepoint > 0.0 && std::isfinite(q.timepoint)))
    throw PreconditionError(what + "timepoint must be positive");
  if (q.arm != 0 && q.arm != 1) throw PreconditionError(what + "arm must be 0 or 1");
  if ((q.is_difference() || q.arm == 1) && !spec.treatment_effect)
    throw PreconditionError(what + "needs a model with a treatment effect");
  if ((q.is_difference() || q.arm == 1) && data && !data->has_arms())
    throw PreconditionError(what + "refers to arms but the dataset has none");
  if (!(pen.weight >= 0.0) || !std::isfinite(pen.weight)) throw PreconditionError(what + "weight must be nonnegative");
}

double penalty_logdensity(const ParameterVector& p, const ExpertPenalty& pen, bool* divergent) {
  if (divergent) *divergent = false;
  if (pen.weight == 0.0) return 0.0;
  QuantityValue v;
  try {
    v = model_quantity(p, pen.quantity);
  } catch (const InvalidParameter&) {
    return -kInf;
  } catch (const NumericError&) {
    return -kInf;
  }
  if (!v.finite) {
    if (divergent) *divergent = true;
    return -kInf;
  }
  return pen.weight * pen.opinion.log_density(v.value);
}

// ---------------------------------------------------------------------------

double data_loglik(const ParameterVector& p, const SurvivalDataset& d, bool* invalid) {
  if (invalid) *invalid = false;
  if (p.spec.treatment_effect && !d.has_arms() && !d.empty())
    throw PreconditionError("model has a treatment effect but the dataset has no arm column");
  if (!satisfies_constraints(p)) {
    if (invalid) *invalid = true;
    return -kInf;
  }
  try {
    const ParameterVector arms[2] = {for_arm(p, 0), for_arm(p, p.spec.treatment_effect ? 1 : 0)};
    CompensatedSum sum;
    for (const auto& r : d.canonical_records()) {
      const auto& pa = arms[r.arm.value_or(0)];
      const double term = r.status == 1 ? log_density(pa, r.time) : log_survival(pa, r.time);
      if (std::isnan(term) || term == kInf) {
        if (invalid) *invalid = true;
        return -kInf;
      }
      if (term == -kInf) return -kInf;
      sum.add(term);
    }
    return sum.value();
  } catch (const InvalidParameter&) {
    if (invalid) *invalid = true;
    return -kInf;
  }
}

BasePrior BasePrior::flat(std::size_t parameter_count) {
  return BasePrior(std::vector<ParameterPrior>(parameter_count, ParameterPrior::flat(PriorScale::Natural)));
}

const ParameterPrior& BasePrior::at(std::size_t i) const { return i < priors_.size() ? priors_[i] : default_prior(); }

double BasePrior::log_density(const ParameterVector& p) const {
  double total = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const auto& pr = at(i);
    const bool pos = p.spec.is_positive(i);
    const double theta = p.values[i];
    if (pos && !(theta > 0.0)) return -kInf;
    const double z = pos ? std::log(theta) : theta;
    const double log_jac = pos ? z : 0.0;  // log |d theta / d z|
    if (!pr.distribution) {
      if (pr.scale == PriorScale::Unconstrained) total -= log_jac;
      continue;
    }
    total += pr.scale == PriorScale::Natural ? pr.distribution->log_pdf(theta) : pr.distribution->log_pdf(z) - log_jac;
  }
  return total;
}

double BasePrior::log_density_unconstrained(const ModelSpec& spec, std::span<const double> z) const {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto& pr = at(i);
    const bool pos = spec.is_positive(i);
    const double log_jac = pos ? z[i] : 0.0;
    if (!pr.distribution) {
      if (pr.scale == PriorScale::Natural) total += log_jac;
      continue;
    }
    if (pr.scale == PriorScale::Natural) {
      const double theta = pos ? std::exp(z[i]) : z[i];
      total += pr.distribution->log_pdf(theta) + log_jac;
    } else {
      total += pr.distribution->log_pdf(z[i]);
    }
  }
  return total;
}

double log_posterior(const ParameterVector& p, const SurvivalDataset& d, std::span<const ExpertPenalty> penalties,
                     const BasePrior& prior) {
  const double prior_term = prior.log_density(p);
  if (!std::isfinite(prior_term)) return -kInf;
  const double ll = data_loglik(p, d);
  if (ll == -kInf) return -kInf;
  double total = ll + prior_term;
  for (const auto& pen : penalties) {
    total += penalty_logdensity(p, pen);
    if (total == -kInf) return -kInf;
  }
  return std::isnan(total) ? -kInf : total;
}

double log_posterior_unconstrained(const ModelSpec& spec, std::span<const double> z, const SurvivalDataset& d,
                                   std::span<const ExpertPenalty> penalties, const BasePrior& prior) {
  for (double v : z)
    if (!std::isfinite(v)) return -kInf;
  const ParameterVector p = from_unconstrained(spec, z);
  const double prior_term = prior.log_density_unconstrained(spec, z);
  if (!std::isfinite(prior_term)) return -kInf;
  const double ll = data_loglik(p, d);
  if (ll == -kInf) return -kInf;
  double total = ll + prior_term;
  for (const auto& pen : penalties) {
    total += penalty_logdensity(p, pen);
    if (total == -kInf) return -kInf;
  }
  return std::isnan(total) ? -kInf : total;
}

ModelSpec prepare_spec(ModelSpec spec, const SurvivalDataset& d) {
  if (spec.family.tag == Family::RoystonParmar && spec.knots.empty()) {
    const auto events = d.event_times();
    if (events.size() < 2) throw PreconditionError("Royston-Parmar knots need at least two event times");
    spec.knots = KnotSet::from_event_times(events, spec.family.knots);
  }
  return spec;
}

// ---------------------------------------------------------------------------

std::vector<double> initial_values(const ModelSpec& spec, const SurvivalDataset& d) {
  const double events = std::max<double>(static_cast<double>(d.events()), 0.5);
  const double rate = events / std::max(d.total_time(), 1e-300);
  const double median = std::numbers::ln2 / rate;
  std::vector<double> v;
  switch (spec.family.tag) {
    case Family::Exponential: v = {rate}; break;
    case Family::WeibullAFT: v = {1.0, 1.0 / rate}; break;
    case Family::WeibullPH: v = {1.0, rate}; break;
    case Family::Gompertz: v = {0.1 * rate, rate}; break;
    case Family::Gamma: v = {1.0, rate}; break;
    case Family::LogNormal: v = {std::log(median), 1.0}; break;
    case Family::LogLogistic: v = {1.5, median}; break;
    case Family::GenGamma: v = {-std::log(rate), 1.0, 1.0}; break;
    case Family::GenF: v = {-std::log(rate), 1.0, 1.0, 0.1}; break;
    case Family::RoystonParmar:
      v.assign(static_cast<std::size_t>(spec.family.knots) + 2, 0.0);
      v[0] = std::log(rate);
      v[1] = 1.0;
      break;
  }
  if (spec.treatment_effect) v.push_back(0.0);
  return v;
}

std::vector<double> FitResult::standard_errors() const {
  std::vector<double> se;
  for (long i = 0; i < covariance.rows(); ++i) se.push_back(std::sqrt(covariance(i, i)));
  return se;
}

FitResult fit_mle(const SurvivalDataset& d, const ModelSpec& spec_in, std::span<const ExpertPenalty> penalties,
                  const FitOptions& options) {
  if (d.empty()) throw PreconditionError("cannot fit a model to an empty dataset");
  const ModelSpec spec = prepare_spec(spec_in, d);
  const std::size_t k = spec.parameter_count();
  if (d.events() < k + 1)
    throw PreconditionError(spec.family.label() + " needs at least " + std::to_string(k + 1) + " events, dataset has " +
                            std::to_string(d.events()));
  for (const auto& pen : penalties) check_penalty(pen, spec, &d);

  const optim::Objective objective = [&](std::span<const double> z) {
    for (double v : z)
      if (!std::isfinite(v) || std::fabs(v) > 700.0) return kInf;
    const ParameterVector p = from_unconstrained(spec, z);
    const double ll = data_loglik(p, d);
    if (ll == -kInf) return kInf;
    double total = ll;
    for (const auto& pen : penalties) total += penalty_logdensity(p, pen);
    return std::isfinite(total) ? -total : kInf;
  };

  const auto z0 = to_unconstrained(make_parameters(spec, initial_values(spec, d)));
  optim::BfgsOptions bopt;
  bopt.gradient_tol = options.gradient_tol;
  std::vector<optim::Result> results;
  for (int s = 0; s < std::max(1, options.starts); ++s) {
    auto z = z0;
    if (s > 0) {
      std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(s));
      for (double& v : z) v += 0.5 * unit_normal_jitter(rng);
    }
    if (!std::isfinite(objective(z))) continue;
    results.push_back(optim::bfgs(objective, z, bopt));
  }
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.value < b.value; });

  FitResult fit;
  fit.penalized = std::any_of(penalties.begin(), penalties.end(), [](const auto& p) { return p.weight != 0.0; });
  if (results.empty() || !std::isfinite(results.front().value)) {
    fit.params = make_parameters(spec, initial_values(spec, d));
    fit.unconstrained = z0;
    fit.loglik_data = fit.loglik_penalized = -kInf;
    fit.covariance = Eigen::MatrixXd::Constant(static_cast<long>(k), static_cast<long>(k), kNaN);
    fit.message = "no start produced a finite objective";
    return fit;
  }
  const optim::Result* chosen = &results.front();
  const double best = results.front().value;
  for (const auto& r : results) {
    if (r.value > best + 1e-7 * (1.0 + std::fabs(best))) break;
    if (r.converged) {
      chosen = &r;
      break;
    }
  }
  fit.unconstrained = chosen->x;
  fit.params = from_unconstrained(spec, chosen->x);
  fit.loglik_penalized = -chosen->value;
  fit.loglik_data = data_loglik(fit.params, d);
  fit.converged = chosen->converged;
  fit.gradient_norm = chosen->gradient_norm;
  std::ostringstream msg;
  msg << (fit.converged ? "converged" : "not converged") << " (gradient norm " << fit.gradient_norm << ", "
      << results.size() << " starts)";
  fit.message = msg.str();

  const Eigen::MatrixXd h = optim::hessian(objective, chosen->x);
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (h.allFinite() && llt.info() == Eigen::Success)
    fit.covariance = llt.solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
  else
    fit.covariance = Eigen::MatrixXd::Constant(h.rows(), h.cols(), kNaN);
  return fit;
}

// ---------------------------------------------------------------------------

std::vector<double> PosteriorSample::pooled(std::size_t k) const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (const auto& c : chains)
    for (const auto& x : c) out.push_back(x[k]);
  return out;
}

ParameterVector PosteriorSample::draw(std::size_t chain, std::size_t i) const {
  return ParameterVector{spec, chains.at(chain).at(i)};
}

PosteriorSample make_posterior_sample(const ModelSpec& spec, mcmc::Chains&& chains) {
  PosteriorSample out;
  out.spec = spec;
  out.rhat = mcmc::split_rhat(chains);
  out.mcmc_ess = mcmc::effective_sample_size(chains);
  out.acceptance = chains.acceptance;
  out.unconstrained = std::move(chains.draws);
  out.chains.resize(out.unconstrained.size());
  for (std::size_t c = 0; c < out.unconstrained.size(); ++c) {
    out.chains[c].reserve(out.unconstrained[c].size());
    for (const auto& z : out.unconstrained[c]) out.chains[c].push_back(from_unconstrained(spec, z).values);
  }
  const auto names = spec.parameter_names();
  for (std::size_t k = 0; k < out.rhat.size(); ++k) {
    if (!(out.rhat[k] <= 1.05)) {
      std::ostringstream os;
      os << "convergence warning: split R-hat for '" << (k < names.size() ? names[k] : std::to_string(k)) << "' is "
         << out.rhat[k];
      out.warnings.push_back(os.str());
    }
  }
  return out;
}

PosteriorSample mcmc_sample(const SurvivalDataset& d, const ModelSpec& spec_in, std::span<const ExpertPenalty> penalties,
                            const BasePrior& prior, const mcmc::Config& config) {
  if (d.empty()) throw PreconditionError("MCMC requires a nonempty dataset");
  mcmc::validate(config);
  const ModelSpec spec = prepare_spec(spec_in, d);
  for (const auto& pen : penalties) check_penalty(pen, spec, &d);
  const std::size_t k = spec.parameter_count();

  const mcmc::LogTarget target = [&](std::span<const double> z) {
    return log_posterior_unconstrained(spec, z, d, penalties, prior);
  };
  const optim::Objective neg = [&](std::span<const double> z) {
    for (double v : z)
      if (std::fabs(v) > 700.0) return kInf;
    const double v = target(z);
    return std::isfinite(v) ? -v : kInf;
  };

  // Posterior mode from a few deterministic starts.
  const auto z0 = to_unconstrained(make_parameters(spec, initial_values(spec, d)));
  optim::Result mode;
  mode.value = kInf;
  for (int s = 0; s < 3; ++s) {
    auto z = z0;
    if (s > 0) {
      std::mt19937_64 rng(config.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(s)));
      for (double& v : z) v += 0.5 * unit_normal_jitter(rng);
    }
    if (!std::isfinite(neg(z))) continue;
    auto r = optim::bfgs(neg, z);
    if (r.value < mode.value) mode = std::move(r);
    if (mode.converged) break;
  }
  if (!std::isfinite(mode.value)) throw FitFailure("posterior density is zero at every starting point");

  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(static_cast<long>(k), static_cast<long>(k)) * 0.01;
  const Eigen::MatrixXd h = optim::hessian(neg, mode.x);
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (h.allFinite() && llt.info() == Eigen::Success) {
    const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
    if (inv.allFinite()) cov = inv;
  }

  // Overdispersed starts around the mode.
  Eigen::LLT<Eigen::MatrixXd> cov_llt(cov);
  const Eigen::MatrixXd chol = cov_llt.matrixL();
  std::vector<std::vector<double>> inits;
  for (int c = 0; c < config.chains; ++c) {
    std::mt19937_64 rng(config.seed * 0x2545F4914F6CDD1DULL + static_cast<std::uint64_t>(c) + 1);
    std::vector<double> start = mode.x;
    for (int attempt = 0; attempt < 50; ++attempt) {
      Eigen::VectorXd e(static_cast<long>(k));
      for (long i = 0; i < e.size(); ++i) e(i) = unit_normal_jitter(rng);
      const Eigen::VectorXd step = chol * e * std::pow(0.8, attempt);
      std::vector<double> trial = mode.x;
      for (std::size_t i = 0; i < k; ++i) trial[i] += step(static_cast<long>(i));
      if (std::isfinite(target(trial))) {
        start = trial;
        break;
      }
    }
    inits.push_back(std::move(start));
  }

  auto chains = mcmc::run_adaptive_metropolis(target, inits, cov, config);
  return make_posterior_sample(spec, std::move(chains));
}

}  // namespace expertsurv

// Acceptance gate: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "expertsurv/appendix_validation.hpp"
#include "expertsurv/assessment.hpp"
#include "expertsurv/cli_io.hpp"
#include "expertsurv/elicitation.hpp"
#include "expertsurv/inference.hpp"
#include "expertsurv/pooling.hpp"
#include "expertsurv/survival_models.hpp"
#include "oracles.hpp"

using namespace expertsurv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const ModelSpec kExp{ModelFamily{Family::Exponential}};

double log_gamma_pdf(double a, double b, double x) {
  return a * std::log(b) - std::lgamma(a) + (a - 1) * std::log(x) - b * x;
}

double mean_of(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

// 1 -----------------------------------------------------------------------
Outcome conjugacy() {
  std::mt19937_64 rng(2024);
  std::exponential_distribution<double> ev(0.3);
  std::uniform_real_distribution<double> cens(2.0, 8.0);
  std::vector<SurvivalRecord> recs;
  for (int i = 0; i < 30; ++i) {
    const double t = ev(rng), c = cens(rng);
    recs.push_back(t <= c ? SurvivalRecord{t, 1, {}} : SurvivalRecord{c, 0, {}});
  }
  const SurvivalDataset d(recs);
  const double a = 2 + d.events(), b = 10 + d.total_time();
  const double true_mean = a / b, true_var = a / (b * b);
  const BasePrior prior({ParameterPrior::natural(ElicitedDistribution::gamma(2, 10))});

  const auto start = std::chrono::steady_clock::now();
  int passed = 0;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    mcmc::Config cfg;
    cfg.seed = seed;
    const auto post = mcmc_sample(d, kExp, {}, prior, cfg);
    const auto draws = post.pooled(0);
    const double m = mean_of(draws);
    std::vector<std::vector<double>> x(post.chain_count()), sq(post.chain_count());
    double v = 0;
    for (double s : draws) v += (s - m) * (s - m);
    v /= draws.size() - 1;
    for (std::size_t c = 0; c < post.chain_count(); ++c)
      for (const auto& p : post.chains[c]) {
        x[c].push_back(p[0]);
        sq[c].push_back((p[0] - m) * (p[0] - m));
      }
    const double ess_mean = mcmc::effective_sample_size(x);
    const double ess_var = mcmc::effective_sample_size(sq);
    const double se_mean = std::sqrt(true_var / ess_mean);
    const double se_var = true_var * std::sqrt((2.0 + 6.0 / a) / ess_var);
    const double zm = std::fabs(m - true_mean) / se_mean, zv = std::fabs(v - true_var) / se_var;
    worst = std::max({worst, zm, zv});
    if (zm < 3 && zv < 3) ++passed;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {passed == 20 && secs < 30,
          fmt("%.0f/20 seeds within 3 MC s.e. (worst %.2f s.e.), ", passed, worst) + fmt("%.1f s", secs)};
}

// 2 -----------------------------------------------------------------------
Outcome log_pool_identity() {
  const PooledOpinion pool({ElicitedDistribution::gamma(2, 10), ElicitedDistribution::gamma(20, 10)}, {0.5, 0.5},
                           PoolMethod::Logarithmic);
  double worst = 0;
  for (int i = 1; i <= 1000; ++i) {
    const double x = 3.0 * i / 1000.0;
    worst = std::max(worst, std::fabs(pool.density(x) - std::exp(log_gamma_pdf(11, 10, x))));
  }
  return {worst <= 1e-10, fmt("max |difference| %.2e", worst)};
}

// 3 -----------------------------------------------------------------------
double numeric_posterior_mean(const PooledOpinion& prior, double events, double exposure) {
  auto logpost = [&](double t) { return prior.log_density(t) + events * std::log(t) - exposure * t; };
  const double peak = logpost(events / exposure);
  auto w = [&](double t) { return t <= 0 ? 0.0 : std::exp(logpost(t) - peak); };
  const double z = oracle::integrate(w, 1e-12, 30.0, 1e-14);
  const double m = oracle::integrate([&](double t) { return t * w(t); }, 1e-12, 30.0, 1e-14);
  return m / z;
}

Outcome externally_bayesian() {
  const double events = 7, exposure = 12.5;
  const std::vector<ElicitedDistribution> prior = {ElicitedDistribution::gamma(2, 10), ElicitedDistribution::gamma(20, 10)};
  const std::vector<ElicitedDistribution> updated = {ElicitedDistribution::gamma(2 + events, 10 + exposure),
                                                     ElicitedDistribution::gamma(20 + events, 10 + exposure)};
  // Logarithmic: both orders give Gamma(11 + events, 10 + exposure).
  const PooledOpinion log_prior(prior, {}, PoolMethod::Logarithmic);
  const PooledOpinion log_updated(updated, {}, PoolMethod::Logarithmic);
  const double exact = (11 + events) / (10 + exposure);
  const double m_pool_update = numeric_posterior_mean(log_prior, events, exposure);
  const double m_update_pool = log_updated.mean();
  double worst = 0;
  for (double t : {0.2, 0.5, 0.8, 1.1, 1.6})
    worst = std::max(worst, std::fabs(log_updated.log_density(t) - log_gamma_pdf(11 + events, 10 + exposure, t)));
  const bool log_ok = std::fabs(m_pool_update - exact) < 1e-8 && std::fabs(m_update_pool - exact) < 1e-8 && worst < 1e-9;

  const PooledOpinion lin_prior(prior, {}, PoolMethod::Linear);
  const PooledOpinion lin_updated(updated, {}, PoolMethod::Linear);
  const double gap = std::fabs(numeric_posterior_mean(lin_prior, events, exposure) - lin_updated.mean());
  return {log_ok && gap > 1e-6,
          fmt("log pool means %.10f / %.10f (exact %.10f); ", m_pool_update, m_update_pool, exact) +
              fmt("linear pool means differ by %.4g", gap)};
}

// 4 -----------------------------------------------------------------------
Outcome penalty_limit() {
  const SurvivalDataset d({{1.0, 1, {}}, {2.0, 1, {}}, {1.5, 1, {}}, {0.5, 0, {}}});
  const std::vector<ExpertPenalty> pen = {
      {TargetQuantity::survival_at(5.0), PooledOpinion::single(ElicitedDistribution::normal(0.6, 1e-4))}};
  const auto fit = fit_mle(d, kExp, pen);
  const double s5 = survival(fit.params, 5.0);
  return {fit.converged && s5 >= 0.599 && s5 <= 0.601, fmt("S(5) = %.6f, theta = %.6f", s5, fit.params[0])};
}

// 5 -----------------------------------------------------------------------
Outcome gompertz_mean() {
  std::mt19937_64 rng(55);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double a = oracle::uniform(rng, 0.1, 3.0), b = oracle::uniform(rng, 0.05, 3.0);
    const auto p = make_parameters(ModelSpec(ModelFamily{Family::Gompertz}), {a, b});
    const auto m = mean_survival(p);
    auto s = [&](double t) { return std::exp(-(b / a) * std::expm1(a * t)); };
    double hi = 1.0;
    while (s(hi) > 1e-300) hi *= 1.5;
    const double q = oracle::integrate(s, 0.0, hi, 1e-14);
    worst = std::max(worst, std::fabs(m.value - q) / q);
  }
  return {worst <= 1e-6, fmt("max relative error %.2e", worst)};
}

// 6 -----------------------------------------------------------------------
Outcome elicitation_recovery() {
  ExpertJudgment j;
  j.expert_id = "beta10";
  j.lpl = oracle::beta_quantile(10, 10, 0.005);
  j.upl = oracle::beta_quantile(10, 10, 0.995);
  j.mlv = 0.5;
  j.coverage = 0.99;
  const auto fit = best_fit(j, default_candidates());
  const bool is_beta = fit.family() == ElicitedFamily::Beta;
  const double ea = std::fabs(fit.params()[0] - 10) / 10, eb = std::fabs(fit.params()[1] - 10) / 10;
  return {is_beta && ea < 0.01 && eb < 0.01,
          "selected " + fit.label() + fmt(", relative errors %.2e / %.2e", ea, eb)};
}

// 7 -----------------------------------------------------------------------
Outcome ess_flag() {
  ExpertJudgment j;
  j.expert_id = "expert2";
  j.lpl = oracle::beta_quantile(150, 113, 0.005);
  j.upl = oracle::beta_quantile(150, 113, 0.995);
  j.mlv = 149.0 / 261.0;
  const auto fit = fit_family(j, ElicitedFamily::Beta);
  const auto rep = ess_report(fit, 75);
  return {std::fabs(rep.ess - 263) < 0.5 && rep.exceeds_sample_size,
          fmt("alpha + beta = %.3f, flagged against n = 75: ", rep.ess) + (rep.exceeds_sample_size ? "yes" : "no")};
}

// 8 -----------------------------------------------------------------------
Outcome mcmc_vs_quadrature() {
  const SurvivalDataset d({{1.0, 1, {}}, {2.0, 1, {}}, {1.5, 1, {}}, {0.5, 0, {}}});
  const std::vector<ExpertPenalty> pen = {
      {TargetQuantity::survival_at(5.0), PooledOpinion::single(ElicitedDistribution::normal(0.45, 0.08))}};
  const auto prior = BasePrior::flat(1);
  mcmc::Config cfg;
  cfg.chains = 4;
  cfg.iterations = 10000;
  cfg.burnin = 5000;
  cfg.seed = 8;
  auto x = mcmc_sample(d, kExp, pen, prior, cfg).pooled(0);
  std::sort(x.begin(), x.end());
  auto lp = [&](double t) { return log_posterior(make_parameters(kExp, {t}), d, pen, prior); };
  const double peak = lp(0.16);
  auto w = [&](double t) { return t <= 0 ? 0.0 : std::exp(lp(t) - peak); };
  const double z = oracle::integrate(w, 1e-12, 3.0, 1e-13);
  double ks = 0, cum = 0, prev = 1e-12;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cum += oracle::integrate(w, prev, x[i], 1e-13, 2) / z;
    prev = x[i];
    const double n = static_cast<double>(x.size());
    ks = std::max({ks, std::fabs(cum - i / n), std::fabs(cum - (i + 1) / n)});
  }
  return {x.size() == 20000 && ks < 0.02, fmt("KS distance %.4f over %.0f draws", ks, x.size())};
}

// 9 -----------------------------------------------------------------------
Outcome reductions() {
  std::mt19937_64 rng(99);
  auto pv = [](Family f, std::vector<double> v) { return make_parameters(ModelSpec(ModelFamily{f}), std::move(v)); };
  double worst = 0;
  auto cmp = [&](const ParameterVector& p, const ParameterVector& q, double t) {
    worst = std::max({worst, std::fabs(survival(p, t) - survival(q, t)),
                      std::fabs(std::exp(log_density(p, t)) - std::exp(log_density(q, t)))});
  };
  for (int i = 0; i < 500; ++i) {
    const double t = std::exp(oracle::uniform(rng, -3.0, 3.0));
    const double mu = oracle::uniform(rng, -1.0, 1.5), sigma = oracle::uniform(rng, 0.2, 1.5);
    const double q = oracle::uniform(rng, -1.5, 1.5), lambda = oracle::uniform(rng, 0.05, 3.0);
    cmp(pv(Family::GenGamma, {mu, sigma, 1.0}), pv(Family::WeibullAFT, {1.0 / sigma, std::exp(mu)}), t);
    cmp(pv(Family::GenGamma, {mu, sigma, 0.0}), pv(Family::LogNormal, {mu, sigma}), t);
    cmp(pv(Family::GenGamma, {mu, sigma, 1e-13}), pv(Family::LogNormal, {mu, sigma}), t);
    cmp(pv(Family::WeibullAFT, {1.0, 1.0 / lambda}), pv(Family::Exponential, {lambda}), t);
    cmp(pv(Family::GenF, {mu, sigma, q, 0.0}), pv(Family::GenGamma, {mu, sigma, q}), t);
  }
  return {worst <= 1e-8, fmt("max |difference| in S and f %.2e over 500 draws", worst)};
}

// 10 ----------------------------------------------------------------------
Outcome appendix_check() {
  appendix::Config c;
  c.gamma_alpha = 2;
  c.gamma_beta = 2;
  const auto r = appendix::run(c);
  const bool params_ok = std::fabs(r.df - 1.0025) < 1e-12 && std::fabs(r.scale - 10000) < 1e-9;
  return {params_ok && r.bands_overlap && r.adjusted_below_data_interval,
          fmt("df %.4f, scale %.0f; ", r.df, r.scale) + (r.bands_overlap ? "bands overlap" : "bands separate") +
              fmt("; adjusted median %.0f vs data-only 95%% interval [%.0f, ", r.adjusted.kappa.median,
                  r.no_prior.kappa.lower) +
              fmt("%.0f]", r.no_prior.kappa.upper)};
}

// 11 ----------------------------------------------------------------------
Outcome table_substitute() {
  // Degenerate posterior: pD = 0.
  const SurvivalDataset d({{1.0, 1, {}}, {2.0, 1, {}}, {1.5, 1, {}}, {0.5, 0, {}}});
  mcmc::Chains ch;
  ch.dim = 1;
  ch.draws.assign(3, std::vector<std::vector<double>>(100, std::vector<double>{std::log(0.6)}));
  ch.acceptance.assign(3, 0.0);
  const auto r = dic(make_posterior_sample(kExp, std::move(ch)), d);
  const bool pd_zero = r.pd == 0.0;

  // Table layout on the simulated example: 8 models sorted by DIC.
  auto cfg = io::load_analysis_config(std::filesystem::path(EXPERTSURV_DATA_DIR) / "example_config.json");
  io::Overrides ov;
  ov.output_dir = std::filesystem::temp_directory_path() / "expertsurv_acceptance";
  io::apply_overrides(cfg, ov);
  const auto res = io::run_analysis(cfg);
  const auto& rows = res.comparison.rows();
  bool sorted = rows.size() == 8;
  for (std::size_t i = 1; i < rows.size(); ++i) sorted = sorted && rows[i - 1].dic <= rows[i].dic;
  bool finite = true;
  for (const auto& row : rows) finite = finite && std::isfinite(row.dic);
  std::printf("%s", res.comparison.format_table().c_str());
  return {pd_zero && sorted && finite,
          std::string("substitute checks: pD of identical draws = ") + (pd_zero ? "0" : "nonzero") +
              fmt(", comparison table rows %.0f, ", rows.size()) + (sorted ? "DIC-sorted" : "not sorted") +
              " (reference DIC/BIC values need patient-level data and are not reproduced)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"conjugate exponential-gamma posterior over 20 seeds", conjugacy},
      {"logarithmic pool of Gamma(2,10) and Gamma(20,10) is Gamma(11,10)", log_pool_identity},
      {"externally Bayesian logarithmic pool, linear pool is not", externally_bayesian},
      {"penalty limit S(5) in [0.599, 0.601]", penalty_limit},
      {"Gompertz closed-form mean vs quadrature", gompertz_mean},
      {"Beta(10,10) recovered from elicited limits", elicitation_recovery},
      {"ESS of 263 flagged against n = 75", ess_flag},
      {"MCMC vs grid quadrature, KS < 0.02", mcmc_vs_quadrature},
      {"reduction identities to 1e-8", reductions},
      {"median-parameterized Weibull validation", appendix_check},
      {"reference comparison table (substitute checks)", table_substitute},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %2zu: %s  %s  [%s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

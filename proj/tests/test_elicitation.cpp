#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "expertsurv/elicitation.hpp"
#include "expertsurv/errors.hpp"
#include "oracles.hpp"

using namespace expertsurv;

namespace {

ExpertJudgment judgment(double lpl, double mlv, double upl, std::string id = "e1") {
  ExpertJudgment j;
  j.expert_id = std::move(id);
  j.timepoint = 5.0;
  j.lpl = lpl;
  j.mlv = mlv;
  j.upl = upl;
  return j;
}

ExpertJudgment beta_judgment(double a, double b) {
  return judgment(oracle::beta_quantile(a, b, 0.005), (a - 1) / (a + b - 2), oracle::beta_quantile(a, b, 0.995));
}

ExpertJudgment t_judgment(double loc, double scale, double df) {
  const double q = oracle::student_t_quantile(df, 0.995);
  return judgment(loc - scale * q, loc, loc + scale * q);
}

ExpertJudgment normal_judgment(double mean, double sd) {
  const double q = oracle::normal_quantile(0.995);
  return judgment(mean - sd * q, mean, mean + sd * q);
}

std::vector<double> natural_to_log(const ElicitedDistribution& d) {
  std::vector<double> z = d.params();
  switch (d.family()) {
    case ElicitedFamily::Normal:
    case ElicitedFamily::StudentT:
    case ElicitedFamily::LogNormal:
      z[1] = std::log(z[1]);
      break;
    default:
      z[0] = std::log(z[0]);
      z[1] = std::log(z[1]);
  }
  return z;
}

ElicitedDistribution log_to_natural(const ElicitedDistribution& d, const std::vector<double>& z) {
  std::vector<double> p = z;
  switch (d.family()) {
    case ElicitedFamily::Normal:
    case ElicitedFamily::StudentT:
    case ElicitedFamily::LogNormal:
      p[1] = std::exp(p[1]);
      break;
    default:
      p[0] = std::exp(p[0]);
      p[1] = std::exp(p[1]);
  }
  return ElicitedDistribution(d.family(), p);
}

}  // namespace

TEST_CASE("beta judgments recover Beta(10,10) and select beta") {
  const auto j = beta_judgment(10, 10);
  const auto fit = fit_family(j, ElicitedFamily::Beta);
  CHECK(fit.params()[0] == doctest::Approx(10).epsilon(0.01));
  CHECK(fit.params()[1] == doctest::Approx(10).epsilon(0.01));
  CHECK(fit.sse < 1e-8);
  CHECK(fit.leakage == 0.0);

  const auto best = best_fit(j, default_candidates());
  CHECK(best.family() == ElicitedFamily::Beta);
}

TEST_CASE("normal fit to judgments symmetric about one half is centred there") {
  const auto fit = fit_family(judgment(0.3, 0.5, 0.7), ElicitedFamily::Normal);
  CHECK(fit.params()[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fit.params()[1] == doctest::Approx(0.2 / oracle::normal_quantile(0.995)).epsilon(1e-6));
}

TEST_CASE("t(3) judgments recover location and scale") {
  const auto j = t_judgment(0.4, 0.05, 3.0);
  const auto fit = fit_family(j, ElicitedFamily::StudentT);
  CHECK(fit.params()[0] == doctest::Approx(0.4).epsilon(0.01));
  CHECK(fit.params()[1] == doctest::Approx(0.05).epsilon(0.01));
  CHECK(fit.params()[2] == 3.0);
}

TEST_CASE("student t degrees of freedom are user overridable") {
  ElicitationOptions opt;
  opt.t_df = 7.0;
  const auto fit = fit_family(t_judgment(0.4, 0.05, 7.0), ElicitedFamily::StudentT, opt);
  CHECK(fit.params()[2] == 7.0);
  CHECK(fit.params()[1] == doctest::Approx(0.05).epsilon(1e-4));
}

TEST_CASE("exactly normal judgments select normal over student t") {
  const auto j = normal_judgment(0.3, 0.05);
  const auto best = best_fit(j, default_candidates());
  CHECK(best.family() == ElicitedFamily::Normal);
  const std::vector<ElicitedFamily> pair{ElicitedFamily::StudentT, ElicitedFamily::Normal};
  CHECK(best_fit(j, pair).family() == ElicitedFamily::Normal);
}

TEST_CASE("heavy-tailed judgments favour student t over beta") {
  const auto j = t_judgment(0.4, 0.05, 3.0);
  const auto t = fit_family(j, ElicitedFamily::StudentT);
  const auto b = fit_family(j, ElicitedFamily::Beta);
  CHECK(t.sse < b.sse);
  CHECK(b.sse > 1e-6);
  const std::vector<ElicitedFamily> pair{ElicitedFamily::Beta, ElicitedFamily::StudentT};
  CHECK(best_fit(j, pair).family() == ElicitedFamily::StudentT);
}

TEST_CASE("coverage other than 0.99 targets the matching quantiles") {
  auto j = judgment(oracle::beta_quantile(6, 4, 0.05), 5.0 / 8.0, oracle::beta_quantile(6, 4, 0.95));
  j.coverage = 0.9;
  const auto fit = fit_family(j, ElicitedFamily::Beta);
  CHECK(fit.params()[0] == doctest::Approx(6).epsilon(1e-3));
  CHECK(fit.params()[1] == doctest::Approx(4).epsilon(1e-3));
}

TEST_CASE("ESS of beta opinions") {
  CHECK(ess_beta(ElicitedDistribution::beta(5, 15)) == 20.0);
  const double e8 = ess_beta(ElicitedDistribution::beta(4, 4));
  CHECK(e8 == 8.0);
  CHECK((e8 >= 8.0 && e8 <= 61.0));

  const auto fit = fit_family(beta_judgment(80, 183), ElicitedFamily::Beta);
  const auto report = ess_report(fit, 75);
  CHECK(report.ess == doctest::Approx(263).epsilon(0.01));
  CHECK(report.exceeds_sample_size);
  CHECK_FALSE(ess_report(ElicitedDistribution::beta(4, 4), 75).exceeds_sample_size);

  CHECK_THROWS_AS(ess_beta(ElicitedDistribution::normal(0.5, 0.1)), UnsupportedFamily);
}

TEST_CASE("ESS is additive in the beta parameters and independent of the timepoint") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    const double a = oracle::uniform(rng, 0.5, 100), b = oracle::uniform(rng, 0.5, 100), c = oracle::uniform(rng, 0.5, 50);
    CHECK(ess_beta(ElicitedDistribution::beta(a + c, b)) == doctest::Approx(ess_beta(ElicitedDistribution::beta(a, b)) + c));
  }
  auto j4 = beta_judgment(12, 6);
  auto j5 = j4;
  j4.timepoint = 4.0;
  j5.timepoint = 40.0;
  CHECK(ess_beta(fit_family(j4, ElicitedFamily::Beta)) == ess_beta(fit_family(j5, ElicitedFamily::Beta)));
}

TEST_CASE("support and judgment errors") {
  CHECK_THROWS_AS(fit_family(judgment(0.2, 0.6, 1.0), ElicitedFamily::Beta), UnsupportedFamily);
  CHECK_THROWS_AS(fit_family(judgment(0.0, 0.3, 0.6), ElicitedFamily::Gamma), UnsupportedFamily);
  CHECK_THROWS_AS(fit_family(judgment(0.0, 0.3, 0.6), ElicitedFamily::LogNormal), UnsupportedFamily);
  CHECK_NOTHROW(fit_family(judgment(0.0, 0.3, 0.6), ElicitedFamily::Normal));
  CHECK_THROWS_AS(fit_family(judgment(0.5, 0.3, 0.6), ElicitedFamily::Normal), InvalidParameter);
  CHECK_THROWS_AS(fit_family(judgment(0.2, 0.3, 1.6), ElicitedFamily::Normal), InvalidParameter);
  auto j = judgment(0.2, 0.3, 0.6);
  j.coverage = 1.0;
  CHECK_THROWS_AS(fit_family(j, ElicitedFamily::Normal), InvalidParameter);
  CHECK_THROWS_AS(best_fit(judgment(0.2, 0.3, 0.6), std::vector<ElicitedFamily>{}), PreconditionError);
  CHECK_THROWS_AS(ElicitedDistribution::beta(-1, 2), InvalidParameter);
  CHECK_THROWS_AS(ElicitedDistribution::scaled_chi(0.0, 2), InvalidParameter);

  // every candidate unsupported -> aggregate report naming each family
  try {
    best_fit(judgment(0.0, 0.6, 1.0), std::vector<ElicitedFamily>{ElicitedFamily::Beta, ElicitedFamily::Gamma});
    FAIL("expected failure");
  } catch (const FitFailure& e) {
    const std::string msg = e.what();
    CHECK(msg.find("beta") != std::string::npos);
    CHECK(msg.find("gamma") != std::string::npos);
  }
}

TEST_CASE("non-probability judgments may exceed one") {
  auto j = judgment(2.0, 4.0, 9.0);
  j.probability_scale = false;
  const auto fit = fit_family(j, ElicitedFamily::Gamma);
  CHECK(fit.leakage == 0.0);
  CHECK(fit.mode() == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("fits are locally optimal against random perturbations") {
  std::mt19937_64 rng(2024);
  const std::vector<ExpertJudgment> judgments{beta_judgment(10, 10), beta_judgment(3, 9), t_judgment(0.4, 0.05, 3),
                                              judgment(0.05, 0.2, 0.5), judgment(0.3, 0.55, 0.65)};
  for (const auto& j : judgments) {
    for (ElicitedFamily f : default_candidates()) {
      const auto fit = fit_family(j, f);
      const auto z = natural_to_log(fit);
      CAPTURE(family_name(f));
      CAPTURE(j.lpl);
      int worse = 0;
      for (int k = 0; k < 200; ++k) {
        auto zp = z;
        for (std::size_t i = 0; i < 2; ++i) zp[i] += oracle::uniform(rng, -1e-3, 1e-3);
        const double sse = elicitation_sse(j, log_to_natural(fit, zp));
        if (fit.sse <= sse + 1e-15) ++worse;
      }
      CHECK(worse == 200);
    }
  }
}

TEST_CASE("fitted quantiles are ordered with the mode between them") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20; ++i) {
    const double m = oracle::uniform(rng, 0.15, 0.85);
    const double lo = m - oracle::uniform(rng, 0.02, 0.14), hi = m + oracle::uniform(rng, 0.02, 0.14);
    const auto j = judgment(lo, m, hi);
    for (ElicitedFamily f : default_candidates()) {
      const auto fit = fit_family(j, f);
      const double q1 = fit.quantile(0.005), q2 = fit.quantile(0.995);
      CHECK(q1 <= q2);
      CHECK(fit.mode() >= q1);
      CHECK(fit.mode() <= q2);
    }
  }
}

TEST_CASE("best_fit returns the minimum candidate SSE") {
  ElicitationOptions exact;
  exact.tie_tolerance = 0.0;
  for (const auto& j : {beta_judgment(3, 9), judgment(0.05, 0.2, 0.5), t_judgment(0.4, 0.05, 3)}) {
    double min_sse = INFINITY;
    for (ElicitedFamily f : default_candidates()) min_sse = std::min(min_sse, fit_family(j, f, exact).sse);
    CHECK(best_fit(j, default_candidates(), exact).sse == min_sse);
    CHECK(best_fit(j, default_candidates()).sse <= min_sse + ElicitationOptions{}.tie_tolerance);
  }
}

TEST_CASE("per-expert mode picks a single family across timepoints") {
  auto j4 = beta_judgment(12, 6);
  auto j5 = beta_judgment(9, 7);
  j4.timepoint = 4;
  j5.timepoint = 5;
  const std::vector<ExpertJudgment> js{j4, j5};
  const auto fits = best_fit_per_expert(js, default_candidates());
  REQUIRE(fits.size() == 2);
  CHECK(fits[0].family() == fits[1].family());
  CHECK(fits[0].family() == ElicitedFamily::Beta);
}

TEST_CASE("elicited distribution functions agree with oracles") {
  const std::vector<ElicitedDistribution> dists{
      ElicitedDistribution::normal(0.3, 0.1),    ElicitedDistribution::student_t(0.4, 0.05, 3),
      ElicitedDistribution::lognormal(-1, 0.4),  ElicitedDistribution::gamma(11, 10),
      ElicitedDistribution::beta(2.5, 7),        ElicitedDistribution::scaled_chi(1.0025, 10000),
      ElicitedDistribution::scaled_chi(4.5, 2.0)};
  for (const auto& d : dists) {
    CAPTURE(d.label());
    // integrate piecewise between quantiles; the endpoints drop < 1e-13 of mass
    auto piecewise = [&](const std::function<double(double)>& g, double upto) {
      double total = 0.0, prev = d.quantile(1e-13);
      for (double q : {1e-6, 1e-3, 0.05, 0.3, 0.7, 0.95, 0.999, 1 - 1e-6, 1 - 1e-13}) {
        const double x = std::min(d.quantile(q), upto);
        if (x > prev) total += oracle::integrate(g, prev, x, 1e-13, 30);
        prev = std::max(prev, x);
      }
      return total;
    };
    auto pdf = [&](double x) { return d.pdf(x); };
    CHECK(piecewise(pdf, INFINITY) == doctest::Approx(1.0).epsilon(1e-8));
    for (double p : {0.01, 0.2, 0.5, 0.77, 0.99}) {
      const double x = d.quantile(p);
      CHECK(d.cdf(x) == doctest::Approx(p).epsilon(1e-10));
      CHECK(piecewise(pdf, x) == doctest::Approx(p).epsilon(1e-7));
    }
    if (d.family() != ElicitedFamily::StudentT) {
      const double m = piecewise([&](double x) { return x * d.pdf(x); }, INFINITY);
      CHECK(d.mean() == doctest::Approx(m).epsilon(1e-6));
    }
    CHECK(d.log_pdf(d.mode()) >= d.log_pdf(d.mode() * 1.01 + 1e-3));
  }
  CHECK(ElicitedDistribution::beta(2, 3).log_pdf(1.5) == -INFINITY);
  CHECK(ElicitedDistribution::gamma(2, 3).log_pdf(-0.1) == -INFINITY);
}

TEST_CASE("sampling is deterministic under a fixed seed") {
  const auto d = ElicitedDistribution::gamma(11, 10);
  std::mt19937_64 r1(5), r2(5);
  for (int i = 0; i < 100; ++i) CHECK(d.sample(r1) == d.sample(r2));
}

TEST_CASE("family names round trip") {
  for (auto f : {ElicitedFamily::Normal, ElicitedFamily::StudentT, ElicitedFamily::LogNormal, ElicitedFamily::Gamma,
                 ElicitedFamily::Beta, ElicitedFamily::ScaledChi})
    CHECK(parse_elicited_family(family_name(f)) == f);
  CHECK_THROWS_AS(parse_elicited_family("weibull"), UnsupportedFamily);
}

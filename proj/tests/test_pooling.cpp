#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "expertsurv/errors.hpp"
#include "expertsurv/pooling.hpp"
#include "oracles.hpp"

using namespace expertsurv;

namespace {

double gamma_log_pdf(double a, double b, double x) {
  return a * std::log(b) - std::lgamma(a) + (a - 1) * std::log(x) - b * x;
}

PooledOpinion two_gamma_pool(PoolMethod m) {
  return PooledOpinion({ElicitedDistribution::gamma(2, 10), ElicitedDistribution::gamma(20, 10)}, {}, m);
}

// Posterior of a prior density under exponential data, normalized by quadrature on (0, upper).
struct NumericPosterior {
  std::function<double(double)> log_prior;
  double events, exposure, upper, log_norm;

  NumericPosterior(std::function<double(double)> lp, double ev, double ex, double up)
      : log_prior(std::move(lp)), events(ev), exposure(ex), upper(up) {
    const double z = oracle::integrate([&](double t) { return std::exp(kernel(t)); }, 1e-12, upper, 1e-14, 40);
    log_norm = std::log(z);
  }
  double kernel(double t) const { return log_prior(t) + events * std::log(t) - exposure * t; }
  double log_density(double t) const { return kernel(t) - log_norm; }
  double mean() const {
    return oracle::integrate([&](double t) { return t * std::exp(log_density(t)); }, 1e-12, upper, 1e-14, 40);
  }
};

}  // namespace

TEST_CASE("log pool of the two gamma experts is Gamma(11,10)") {
  const auto pool = two_gamma_pool(PoolMethod::Logarithmic);
  for (int k = 0; k < 1000; ++k) {
    const double x = 0.01 + 4.0 * k / 999.0;
    CAPTURE(x);
    const double ref = gamma_log_pdf(11, 10, x);
    CHECK(std::fabs(pool.log_density(x) - ref) <= 1e-10);
    CHECK(std::fabs(pool.density(x) - std::exp(ref)) <= 1e-10);
  }
  CHECK(pool.log_density(-0.5) == -INFINITY);
  CHECK(pool.log_density(0.0) == -INFINITY);
}

TEST_CASE("linear pool worked value at theta = 1") {
  const auto pool = two_gamma_pool(PoolMethod::Linear);
  CHECK(std::exp(gamma_log_pdf(2, 10, 1)) == doctest::Approx(0.0045400).epsilon(1e-4));
  CHECK(std::exp(gamma_log_pdf(20, 10, 1)) == doctest::Approx(0.0373216).epsilon(1e-5));
  CHECK(std::exp(log_pool_density(pool, 1.0)) == doctest::Approx(0.0209308).epsilon(1e-5));
  // commonly quoted rounding of the same mixture value
  CHECK(std::exp(log_pool_density(pool, 1.0)) == doctest::Approx(0.0209322).epsilon(1e-4));
  const double exact = std::log(0.5 * std::exp(gamma_log_pdf(2, 10, 1)) + 0.5 * std::exp(gamma_log_pdf(20, 10, 1)));
  CHECK(log_pool_density(pool, 1.0) == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("single-component pools reproduce the component") {
  const std::vector<ElicitedDistribution> comps{ElicitedDistribution::beta(3, 7), ElicitedDistribution::gamma(4, 2),
                                                ElicitedDistribution::student_t(0.4, 0.05, 3)};
  for (const auto& c : comps) {
    for (PoolMethod m : {PoolMethod::Linear, PoolMethod::Logarithmic}) {
      const PooledOpinion pool({c}, {1.0}, m);
      for (double x : {0.05, 0.3, 0.42, 0.9, 2.5}) {
        if (c.log_pdf(x) == -INFINITY)
          CHECK(pool.log_density(x) == -INFINITY);
        else
          CHECK(pool.log_density(x) == doctest::Approx(c.log_pdf(x)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("weights are validated and default to uniform") {
  const std::vector<ElicitedDistribution> two{ElicitedDistribution::beta(3, 7), ElicitedDistribution::beta(7, 3)};
  CHECK_THROWS_AS(PooledOpinion(two, {0.7, 0.4}, PoolMethod::Linear), InvalidParameter);
  CHECK_THROWS_AS(PooledOpinion(two, {1.2, -0.2}, PoolMethod::Linear), InvalidParameter);
  CHECK_THROWS_AS(PooledOpinion(two, {1.0}, PoolMethod::Linear), InvalidParameter);
  CHECK_THROWS_AS(PooledOpinion({}, {}, PoolMethod::Linear), InvalidParameter);
  const PooledOpinion pool(two, {}, PoolMethod::Linear);
  CHECK(pool.weights() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("linear pool density integrates to one") {
  const PooledOpinion a({ElicitedDistribution::gamma(2, 10), ElicitedDistribution::lognormal(0, 0.5),
                         ElicitedDistribution::gamma(20, 10)},
                        {0.2, 0.3, 0.5}, PoolMethod::Linear);
  auto fa = [&](double x) { return a.density(x); };
  const double mass = oracle::integrate(fa, 1e-12, 1.0, 1e-11, 30) + oracle::integrate(fa, 1.0, 60.0, 1e-11, 30);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));

  const PooledOpinion b({ElicitedDistribution::beta(30, 70), ElicitedDistribution::student_t(0.6, 0.05, 3),
                         ElicitedDistribution::beta(80, 20)},
                        {}, PoolMethod::Linear);
  auto fb = [&](double x) { return b.density(x); };
  const double mass_b = oracle::integrate(fb, -400.0, 0.0, 1e-10, 30) + oracle::integrate(fb, 0.0, 1.0, 1e-12, 30) +
                        oracle::integrate(fb, 1.0, 400.0, 1e-10, 30);
  CHECK(mass_b == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("truncated pools renormalize on [0,1] and report leakage") {
  const auto t = ElicitedDistribution::student_t(0.9, 0.08, 3);
  const double leak = t.cdf(0.0) + 1.0 - t.cdf(1.0);
  for (PoolMethod m : {PoolMethod::Linear, PoolMethod::Logarithmic}) {
    const PooledOpinion pool({t, ElicitedDistribution::beta(8, 2)}, {}, m, true);
    CHECK(pool.log_density(1.01) == -INFINITY);
    CHECK(pool.log_density(-0.01) == -INFINITY);
    const double mass = oracle::integrate([&](double x) { return pool.density(x); }, 0.0, 1.0, 1e-13, 40);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    if (m == PoolMethod::Linear) CHECK(pool.leakage() == doctest::Approx(0.5 * leak).epsilon(1e-10));
  }
}

TEST_CASE("pooled CDF agrees with quadrature of the density") {
  for (PoolMethod m : {PoolMethod::Linear, PoolMethod::Logarithmic}) {
    const auto pool = two_gamma_pool(m);
    for (double x : {0.05, 0.3, 1.0, 1.7, 3.0}) {
      const double ref = oracle::integrate([&](double u) { return pool.density(u); }, 1e-12, x, 1e-13, 40);
      CHECK(pool.cdf(x) == doctest::Approx(ref).epsilon(1e-8));
    }
  }
}

TEST_CASE("support laws") {
  const PooledOpinion log_pool({ElicitedDistribution::beta(2, 5), ElicitedDistribution::gamma(3, 4)}, {},
                               PoolMethod::Logarithmic);
  const PooledOpinion lin_pool({ElicitedDistribution::beta(2, 5), ElicitedDistribution::gamma(3, 4)}, {},
                               PoolMethod::Linear);
  // beta vanishes beyond 1, the gamma does not
  for (double x : {1.2, 2.0, 5.0}) {
    CHECK(log_pool.log_density(x) == -INFINITY);
    CHECK(std::isfinite(lin_pool.log_density(x)));
  }
  for (double x : {0.1, 0.5, 0.9}) {
    CHECK(std::isfinite(log_pool.log_density(x)));
    CHECK(std::isfinite(lin_pool.log_density(x)));
  }
  CHECK(log_pool.support().second == 1.0);

  const PooledOpinion disjoint_ok({ElicitedDistribution::beta(2, 5)}, {1.0}, PoolMethod::Logarithmic);
  CHECK(std::isfinite(disjoint_ok.log_norm_const()));
}

TEST_CASE("externally Bayesian property of the logarithmic pool") {
  const double events = 7, exposure = 12.5;
  // pool then update
  const auto prior = two_gamma_pool(PoolMethod::Logarithmic);
  const NumericPosterior pooled_then_updated([&](double t) { return prior.log_density(t); }, events, exposure, 30.0);
  // update then pool
  const PooledOpinion updated_then_pooled(
      {ElicitedDistribution::gamma(2 + events, 10 + exposure), ElicitedDistribution::gamma(20 + events, 10 + exposure)},
      {}, PoolMethod::Logarithmic);
  for (double t : {0.1, 0.4, 0.8, 1.2, 2.0}) {
    CHECK(pooled_then_updated.log_density(t) == doctest::Approx(updated_then_pooled.log_density(t)).epsilon(1e-9));
    CHECK(updated_then_pooled.log_density(t) == doctest::Approx(gamma_log_pdf(11 + events, 10 + exposure, t)).epsilon(1e-10));
  }
}

TEST_CASE("linear pooling is not externally Bayesian") {
  const double events = 7, exposure = 12.5;
  const auto prior = two_gamma_pool(PoolMethod::Linear);
  const NumericPosterior pooled_then_updated([&](double t) { return prior.log_density(t); }, events, exposure, 30.0);
  const PooledOpinion updated_then_pooled(
      {ElicitedDistribution::gamma(2 + events, 10 + exposure), ElicitedDistribution::gamma(20 + events, 10 + exposure)},
      {}, PoolMethod::Linear);
  CHECK(std::fabs(pooled_then_updated.mean() - updated_then_pooled.mean()) > 1e-6);
}

TEST_CASE("sampling a single gamma matches its moments") {
  const PooledOpinion pool({ElicitedDistribution::gamma(4, 2)}, {1.0}, PoolMethod::Linear);
  const auto xs = sample_pool(pool, 100000, 99);
  const double n = static_cast<double>(xs.size());
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= n - 1;
  // Gamma(4, rate 2): mean 2, variance 1, fourth central moment 3*4*(4+2)/16 = 4.5
  CHECK(std::fabs(m - 2.0) < 4 * std::sqrt(1.0 / n));
  CHECK(std::fabs(v - 1.0) < 4 * std::sqrt((4.5 - 1.0) / n));
}

TEST_CASE("linear pool of separated betas samples both modes equally") {
  const PooledOpinion pool({ElicitedDistribution::beta(5, 40), ElicitedDistribution::beta(40, 5)}, {}, PoolMethod::Linear);
  const std::size_t n = 20000;
  const auto xs = sample_pool(pool, n, 3);
  std::size_t low = 0, mid = 0;
  for (double x : xs) {
    if (x < 0.5) ++low;
    if (x > 0.35 && x < 0.65) ++mid;
  }
  const double sd = std::sqrt(0.25 * n);
  CHECK(std::fabs(static_cast<double>(low) - 0.5 * n) < 3 * sd);
  CHECK(static_cast<double>(mid) < 0.01 * n);  // the valley between the modes is nearly empty
}

TEST_CASE("log pool sampling reproduces the Gamma(11,10) mean") {
  const auto pool = two_gamma_pool(PoolMethod::Logarithmic);
  const std::size_t n = 100000;
  const auto xs = sample_pool(pool, n, 17);
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  const double se = std::sqrt(11.0 / 100.0 / static_cast<double>(n));
  CHECK(std::fabs(m - 1.1) < 4 * se);
  CHECK(pool.mean() == doctest::Approx(1.1).epsilon(1e-8));
}

TEST_CASE("sampling is deterministic for a fixed seed") {
  for (PoolMethod m : {PoolMethod::Linear, PoolMethod::Logarithmic}) {
    const auto pool = two_gamma_pool(m);
    CHECK(sample_pool(pool, 500, 42) == sample_pool(pool, 500, 42));
    CHECK(sample_pool(pool, 500, 42) != sample_pool(pool, 500, 43));
  }
  CHECK_THROWS_AS(sample_pool(two_gamma_pool(PoolMethod::Linear), 0, 1), PreconditionError);
}

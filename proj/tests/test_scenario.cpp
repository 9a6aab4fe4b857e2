#include <doctest.h>

#include <cmath>

#include "covertseq/calibration.hpp"
#include "covertseq/rng.hpp"
#include "covertseq/scenario.hpp"

using namespace covertseq;

TEST_CASE("normalize divides by the adversary noise power") {
  const NormalizedChannel a = normalize(0.3, 2.0, 1.0);
  CHECK(a.q == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(a.sigma_ratio == doctest::Approx(2.0).epsilon(1e-12));

  const NormalizedChannel b = normalize(0.5, 1.0, 1.0);
  CHECK(b.q == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b.sigma_ratio == doctest::Approx(1.0).epsilon(1e-12));

  const NormalizedChannel c = normalize(1.0, 4.0, 2.0);
  CHECK(c.q == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(c.sigma_ratio == doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(normalize(0.3, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(normalize(0.3, 1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(normalize(-0.1, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("scenario invariants are enforced") {
  ScenarioParams p{0.15, 1.0, 500.0, 0.95, 0, 15};
  CHECK_NOTHROW(p.validate());
  auto bad = p;
  bad.q = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.gamma = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.theta = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.L = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("likelihood ratio closed form") {
  CHECK(likelihood_ratio({0.0}, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(likelihood_ratio({2.0}, 1.0) == doctest::Approx(std::exp(1.0) / 2.0).epsilon(1e-12));
  CHECK(likelihood_ratio({2.0}, 1.0) == doctest::Approx(1.35914).epsilon(1e-5));
}

TEST_CASE("likelihood ratio is monotone and crosses 1 at omega") {
  const double q = 0.37;
  const double omega = cusum_drift_omega(q);
  double prev = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = 0.05 * i;
    const double lr = likelihood_ratio({x}, q);
    CHECK(lr > prev);
    prev = lr;
  }
  CHECK(likelihood_ratio({omega}, q) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(likelihood_ratio({omega - 1e-6}, q) < 1.0);
  CHECK(likelihood_ratio({omega + 1e-6}, q) > 1.0);
}

TEST_CASE("power threshold solved from the likelihood-ratio threshold") {
  // Inverting likelihood_ratio(x) = eta_s numerically must land on
  // eta_s_prime = ln(gamma).
  const double gamma = 500.0, q = 0.15;
  const double eta_prime = calibrate_shewhart(gamma);
  const double eta_s = shewhart_eta_from_prime(eta_prime, q);
  double lo = 0.0, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (likelihood_ratio({mid}, q) < eta_s ? lo : hi) = mid;
  }
  CHECK(lo == doctest::Approx(eta_prime).epsilon(1e-10));
}

TEST_CASE("observation sampling hits the exponential means") {
  RngStream rng(20230415, 0);
  double sum = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) sum += sample_observation(rng, Phase::pre, 0.5).value;
  CHECK(sum / n == doctest::Approx(1.0).epsilon(0.003));

  RngStream rng2(20230415, 1);
  sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_observation(rng2, Phase::post, 0.5).value;
  CHECK(sum / n == doctest::Approx(1.5).epsilon(0.005 / 1.5));
}

TEST_CASE("fixed seed reproduces the first draw") {
  RngStream a(42, 0), b(42, 0);
  CHECK(sample_observation(a, Phase::pre, 0.15).value ==
        sample_observation(b, Phase::pre, 0.15).value);
  RngStream c(42, 1);
  CHECK(sample_observation(c, Phase::pre, 0.15).value !=
        sample_observation(RngStream(42, 0), Phase::pre, 0.15).value);
}

TEST_CASE("likelihood ratio is a pre-change martingale with KL-signed logs") {
  const double q = 0.3;
  RngStream rng(7, 0);
  const int n = 1000000;
  double sum_lr = 0.0, sum_sq = 0.0, sum_log_pre = 0.0, sum_log_post = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lr = likelihood_ratio(sample_observation(rng, Phase::pre, q), q);
    sum_lr += lr;
    sum_sq += lr * lr;
    sum_log_pre += std::log(lr);
    sum_log_post += std::log(likelihood_ratio(sample_observation(rng, Phase::post, q), q));
  }
  const double mean = sum_lr / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / n);
  CHECK(std::abs(mean - 1.0) < 3.0 * se);  // E[Lambda] = 1 under noise
  CHECK(sum_log_pre / n < 0.0);
  CHECK(sum_log_post / n > 0.0);
}

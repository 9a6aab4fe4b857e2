#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "covertseq/calibration.hpp"
#include "covertseq/covert.hpp"
#include "covertseq/detectors.hpp"
#include "covertseq/errors.hpp"
#include "covertseq/rng.hpp"

using namespace covertseq;

TEST_CASE("per-sample test alarms on the inclusive boundary") {
  const ShewhartConfig cfg = make_shewhart_config(2.5);
  CHECK_FALSE(shewhart_step({0.0}, cfg));
  CHECK(shewhart_step({2.5}, cfg));  // ties alarm
  CHECK(shewhart_step({3.0}, cfg));
  CHECK_THROWS_AS(make_shewhart_config(0.0), std::invalid_argument);
}

TEST_CASE("per-sample pre-change alarm frequency matches 1/gamma") {
  const double gamma = 500.0;
  const ShewhartConfig cfg = make_shewhart_config(calibrate_shewhart(gamma));
  RngStream rng(99, 0);
  const int n = 1000000;
  int alarms = 0;
  for (int i = 0; i < n; ++i)
    alarms += shewhart_step(sample_observation(rng, Phase::pre, 0.15), cfg) ? 1 : 0;
  const double p = 1.0 / gamma;
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(static_cast<double>(alarms) / n - p) < 3.0 * se);
}

TEST_CASE("cusum update reflects at zero") {
  CusumState s = make_cusum_state(0.15, 10.0);
  SUBCASE("exact cancellation at the drift offset") {
    s.c_hat = 0.0;
    s = cusum_step(s, {s.omega});
    CHECK(s.c_hat == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("reset at the zero barrier") {
    s.omega = 2.0;
    s.c_hat = 1.0;
    s = cusum_step(s, {0.5});
    CHECK(s.c_hat == 0.0);
  }
  SUBCASE("additive update above the barrier") {
    s.omega = 1.0;
    s.c_hat = 3.0;
    s = cusum_step(s, {2.0});
    CHECK(s.c_hat == doctest::Approx(4.0).epsilon(1e-15));
  }
}

TEST_CASE("cusum transition is monotone in state and observation") {
  CusumState s = make_cusum_state(0.3, 8.0);
  for (double c : {0.0, 0.5, 2.0}) {
    for (double x : {0.0, 0.7, 1.9}) {
      CusumState a = s, b = s;
      a.c_hat = c;
      b.c_hat = c + 0.25;
      CHECK(cusum_step(a, {x}).c_hat <= cusum_step(b, {x}).c_hat);
      a.c_hat = c;
      CHECK(cusum_step(a, {x}).c_hat <= cusum_step(a, {x + 0.25}).c_hat);
    }
  }
}

TEST_CASE("sr update and its noise-free lower envelope") {
  SrState s = make_sr_state(1.0, 1.5);
  s = sr_step(s, {0.0}, 1.0);
  CHECK(s.r == doctest::Approx(0.5).epsilon(1e-15));
  s.r = 1.0;
  s = sr_step(s, {0.0}, 1.0);
  CHECK(s.r == doctest::Approx(1.0).epsilon(1e-15));

  const double q = 0.25;
  SrState z = make_sr_state(q, 400.0);
  for (int t = 1; t <= 40; ++t) {
    z = sr_step(z, {0.0}, q);
    const double bound = (1.0 - std::pow(1.0 + q, -t)) / q;
    CHECK(z.r == doctest::Approx(bound).epsilon(1e-12));
  }
}

TEST_CASE("sr thresholds below 1/q are rejected with a distinct error") {
  CHECK_THROWS_AS(make_sr_state(0.1, 9.0), SrThresholdError);
  CHECK_NOTHROW(make_sr_state(0.1, 10.0));
}

TEST_CASE("threshold parameterizations give identical alarm decisions") {
  const double gamma = 500.0, q = 0.15;
  const double eta_prime = calibrate_shewhart(gamma);
  const double eta_s = shewhart_eta_from_prime(eta_prime, q);
  const ShewhartConfig cfg = make_shewhart_config(eta_prime);
  for (int i = 0; i <= 4000; ++i) {
    const double x = 12.0 * i / 4000.0;
    CHECK(shewhart_step({x}, cfg) == (likelihood_ratio({x}, q) >= eta_s));
  }
}

TEST_CASE("pure-noise runs always alarm before a generous cap") {
  for (TestKind kind : {TestKind::shewhart, TestKind::cusum, TestKind::sr}) {
    const double gamma = 50.0, q = 0.3;
    RunSpec spec;
    spec.kind = kind;
    spec.q = q;
    spec.threshold = kind == TestKind::shewhart ? calibrate_shewhart(gamma)
                     : kind == TestKind::cusum  ? calibrate_cusum(gamma, q).eta_hat_c
                                                : calibrate_sr(gamma, q).eta_r;
    spec.nu = kNoChange;
    spec.step_cap = 1000000;
    RngStream rng(5, static_cast<std::uint64_t>(kind));
    for (int i = 0; i < 200; ++i) {
      const StoppingRecord rec = run_to_alarm(spec, rng);
      CHECK_FALSE(rec.censored);
      CHECK(rec.t_stop >= 1);
    }
  }
}

TEST_CASE("hard cap produces an explicit censored record") {
  RunSpec spec;
  spec.kind = TestKind::cusum;
  spec.q = 0.1;
  spec.threshold = 500.0;  // unreachably high within the cap
  spec.nu = kNoChange;
  spec.step_cap = 64;
  RngStream rng(123, 0);
  const StoppingRecord rec = run_to_alarm(spec, rng);
  CHECK(rec.censored);
  CHECK(rec.t_stop == 64);
}

TEST_CASE("run mean under pure noise reproduces the SR calibration target") {
  const double gamma = 500.0, q = 0.2;
  const SrArlSolution sol = calibrate_sr(gamma, q);
  RunSpec spec;
  spec.kind = TestKind::sr;
  spec.q = q;
  spec.threshold = sol.eta_r;
  spec.nu = kNoChange;
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    RngStream rng(31, i);
    sum += static_cast<double>(run_to_alarm(spec, rng).t_stop);
  }
  CHECK(sum / n == doctest::Approx(gamma).epsilon(0.03));
}

TEST_CASE("strong signals are detected within a few samples") {
  const double gamma = 500.0, q = 5.0;
  for (TestKind kind : {TestKind::shewhart, TestKind::cusum, TestKind::sr}) {
    RunSpec spec;
    spec.kind = kind;
    spec.q = q;
    spec.threshold = kind == TestKind::shewhart ? calibrate_shewhart(gamma)
                     : kind == TestKind::cusum  ? calibrate_cusum(gamma, q).eta_hat_c
                                                : calibrate_sr(gamma, q).eta_r;
    spec.nu = 0;
    spec.L = 1000000;
    std::vector<double> delays;
    for (int i = 0; i < 2001; ++i) {
      RngStream rng(77, i);
      const StoppingRecord rec = run_to_alarm(spec, rng);
      REQUIRE_FALSE(rec.alarmed_pre_change);
      delays.push_back(static_cast<double>(rec.delay));
    }
    std::nth_element(delays.begin(), delays.begin() + 1000, delays.end());
    CHECK(delays[1000] <= 3.0);
  }
}

TEST_CASE("first-sample alarm fraction matches the single-step miss probability") {
  const double gamma = 500.0, q = 0.15;
  RunSpec spec;
  spec.kind = TestKind::shewhart;
  spec.q = q;
  spec.threshold = calibrate_shewhart(gamma);
  spec.nu = 0;
  spec.L = 1;
  spec.step_cap = 1;  // censored = no alarm at t = 1
  const int n = 200000;
  int at_one = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(1234, i);
    const StoppingRecord rec = run_to_alarm(spec, rng);
    if (!rec.censored && rec.t_stop == 1) ++at_one;
  }
  const double expect = 1.0 - covert_prob_shewhart(q, 1, gamma).value;
  const double se = std::sqrt(expect * (1.0 - expect) / n);
  CHECK(std::abs(static_cast<double>(at_one) / n - expect) < 3.0 * se);
}

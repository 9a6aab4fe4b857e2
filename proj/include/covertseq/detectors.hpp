#pragma once

#include <cstdint>

#include "covertseq/scenario.hpp"

namespace covertseq {

// ---------------------------------------------------------------------------
// Test statistics. All three alarm on "statistic >= threshold"; ties alarm.
// ---------------------------------------------------------------------------

// The per-sample test compares |y_t|^2 against eta_s_prime directly; this is
// equivalent to thresholding the likelihood ratio since the map is monotone.
struct ShewhartConfig {
  double eta_s_prime;  // power threshold, > 0
};

ShewhartConfig make_shewhart_config(double eta_s_prime);

bool shewhart_step(ObservationPower x, const ShewhartConfig& cfg);

// Scaled CUSUM state. Only the scaled statistic (raw statistic times
// (1+q)/q) is ever stored; every downstream formula is stated in it.
struct CusumState {
  double c_hat = 0.0;  // running statistic, >= 0
  double omega;        // drift offset (from cusum_drift_omega)
  double eta_hat_c;    // scaled threshold, > 0
  int m_pieces;        // ceil(eta_hat_c / omega), >= 1

  bool alarmed() const { return c_hat >= eta_hat_c; }
};

CusumState make_cusum_state(double q, double eta_hat_c);

CusumState cusum_step(CusumState s, ObservationPower x);

// Shiryaev-Roberts state. Thresholds below 1/q are rejected (SrThresholdError):
// below that the statistic's deterministic lower envelope crosses the
// threshold on its own, which is outside the supported regime.
struct SrState {
  double r = 0.0;  // running statistic, >= 0
  double eta_r;    // threshold, >= 1/q

  bool alarmed() const { return r >= eta_r; }
};

SrState make_sr_state(double q, double eta_r);

SrState sr_step(SrState s, ObservationPower x, double q);

// ---------------------------------------------------------------------------
// Simulation of one detection cycle
// ---------------------------------------------------------------------------

struct StoppingRecord {
  std::uint64_t t_stop = 0;         // alarm time T (= step_cap when censored)
  bool alarmed_pre_change = false;  // T <= nu
  std::uint64_t delay = 0;          // T - nu when T > nu, else 0
  bool censored = false;            // no alarm before the hard cap
};

struct RunSpec {
  TestKind kind;
  double q;                  // > 0 (drives post-change sampling and cusum/sr updates)
  double threshold;          // calibrated eta for the chosen test
  std::uint64_t nu = kNoChange;
  std::uint64_t L = 1;
  std::uint64_t step_cap = 100000000;  // censoring cap
};

// Runs the detector from a fresh state on one observation sequence: noise up
// to nu, signal plus noise for the next L samples, noise again afterwards.
// Returns the first alarm time, or a censored record at the cap.
StoppingRecord run_to_alarm(const RunSpec& spec, RngStream& rng);

}  // namespace covertseq

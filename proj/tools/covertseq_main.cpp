// Command-line front end: threshold calibration, covert-probability
// evaluation, throughput optimization, and figure-data emission as CSV.
//
// Exit codes: 0 ok, 2 bad configuration, 3 calibration failure,
// 4 conditioning starvation, 5 infeasible problem.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "covertseq/calibration.hpp"
#include "covertseq/covert.hpp"
#include "covertseq/csv.hpp"
#include "covertseq/errors.hpp"
#include "covertseq/monte_carlo.hpp"
#include "covertseq/optimizer.hpp"

namespace cs = covertseq;
using nlohmann::json;

namespace {

struct ExperimentConfig {
  std::string test = "all";  // shewhart | cusum | sr | all
  double gamma = 500.0;
  double theta = 0.95;
  std::vector<std::uint64_t> nu = {500};
  std::vector<double> q = {0.15};
  std::vector<std::uint64_t> L = {15};
  double sigma_b2_over_w2 = 1.0;  // noise ratio at Bob over Willie
  std::uint64_t grid_n = 2000;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 20230415;
  std::string out;      // output path ("" = stdout)
  std::string out_dir = ".";
  // optimizer knobs
  std::string method = "algorithm1";
  double q_min = 1e-3, q_max = 2.0, dq = 1e-3;
  std::uint64_t l_cap = 20000;
  bool mc = false;
  bool verify = false;
  bool bits = false;
  bool as_json = false;
  std::string trace;
  std::string figure_id;

  double sigma_ratio() const { return 1.0 / sigma_b2_over_w2; }
  json echo() const;
};

json ExperimentConfig::echo() const {
  json j;
  j["test"] = test;
  j["gamma"] = gamma;
  j["theta"] = theta;
  j["nu"] = nu;
  j["q"] = q;
  j["L"] = L;
  j["sigma_b2_over_w2"] = sigma_b2_over_w2;
  j["grid_n"] = grid_n;
  j["trials"] = trials;
  j["seed"] = seed;
  j["method"] = method;
  j["q_min"] = q_min;
  j["q_max"] = q_max;
  j["dq"] = dq;
  j["l_cap"] = l_cap;
  return j;
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cs::ConfigError("config file not readable: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw cs::ConfigError(std::string("config parse error: ") + e.what());
  }
  static const std::vector<std::string> known = {
      "test",   "gamma", "theta", "nu",    "q",     "L",     "sigma_b2_over_w2",
      "grid_n", "trials", "seed",  "out",   "out_dir", "method", "q_min",
      "q_max",  "dq",    "l_cap", "mc",    "verify", "bits",  "trace", "figure_id"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw cs::ConfigError("unknown config key: " + it.key());
  }
  const auto list_u64 = [&](const char* key, std::vector<std::uint64_t>& out) {
    if (!j.contains(key)) return;
    out.clear();
    if (j[key].is_array())
      for (const auto& v : j[key]) out.push_back(v.get<std::uint64_t>());
    else
      out.push_back(j[key].get<std::uint64_t>());
  };
  const auto list_f64 = [&](const char* key, std::vector<double>& out) {
    if (!j.contains(key)) return;
    out.clear();
    if (j[key].is_array())
      for (const auto& v : j[key]) out.push_back(v.get<double>());
    else
      out.push_back(j[key].get<double>());
  };
  try {
    if (j.contains("test")) cfg.test = j["test"].get<std::string>();
    if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
    if (j.contains("theta")) cfg.theta = j["theta"].get<double>();
    list_u64("nu", cfg.nu);
    list_f64("q", cfg.q);
    list_u64("L", cfg.L);
    if (j.contains("sigma_b2_over_w2")) cfg.sigma_b2_over_w2 = j["sigma_b2_over_w2"].get<double>();
    if (j.contains("grid_n")) cfg.grid_n = j["grid_n"].get<std::uint64_t>();
    if (j.contains("trials")) cfg.trials = j["trials"].get<std::uint64_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("method")) cfg.method = j["method"].get<std::string>();
    if (j.contains("q_min")) cfg.q_min = j["q_min"].get<double>();
    if (j.contains("q_max")) cfg.q_max = j["q_max"].get<double>();
    if (j.contains("dq")) cfg.dq = j["dq"].get<double>();
    if (j.contains("l_cap")) cfg.l_cap = j["l_cap"].get<std::uint64_t>();
    if (j.contains("mc")) cfg.mc = j["mc"].get<bool>();
    if (j.contains("verify")) cfg.verify = j["verify"].get<bool>();
    if (j.contains("bits")) cfg.bits = j["bits"].get<bool>();
    if (j.contains("trace")) cfg.trace = j["trace"].get<std::string>();
    if (j.contains("figure_id")) cfg.figure_id = j["figure_id"].get<std::string>();
  } catch (const json::exception& e) {
    throw cs::ConfigError(std::string("config value error: ") + e.what());
  }
}

cs::TestKind parse_test(const std::string& name) {
  if (name == "shewhart") return cs::TestKind::shewhart;
  if (name == "cusum") return cs::TestKind::cusum;
  if (name == "sr") return cs::TestKind::sr;
  throw cs::ConfigError("unknown test: " + name);
}

std::vector<cs::TestKind> parse_tests(const std::string& name) {
  if (name == "all") return {cs::TestKind::shewhart, cs::TestKind::cusum, cs::TestKind::sr};
  return {parse_test(name)};
}

double calibrate_threshold(cs::TestKind kind, double gamma, double q) {
  switch (kind) {
    case cs::TestKind::shewhart: return cs::calibrate_shewhart(gamma);
    case cs::TestKind::cusum: return cs::calibrate_cusum(gamma, q).eta_hat_c;
    case cs::TestKind::sr: return cs::calibrate_sr(gamma, q).eta_r;
  }
  throw cs::ConfigError("bad test kind");
}

class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw cs::ConfigError("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

int cmd_calibrate(const ExperimentConfig& cfg) {
  const cs::TestKind kind = parse_test(cfg.test);
  const double q = cfg.q.front();
  json out;
  out["test"] = cfg.test;
  out["gamma"] = cfg.gamma;

  switch (kind) {
    case cs::TestKind::shewhart: {
      const double eta_prime = cs::calibrate_shewhart(cfg.gamma);
      out["eta_s_prime"] = eta_prime;
      out["eta_s"] = cs::shewhart_eta_from_prime(eta_prime, q);
      out["q"] = q;
      break;
    }
    case cs::TestKind::cusum: {
      const cs::CusumArlSolution sol = cs::calibrate_cusum(cfg.gamma, q);
      out["q"] = q;
      out["eta_hat_c"] = sol.eta_hat_c;
      out["omega"] = sol.omega;
      out["phi0"] = sol.phi0;
      out["m_pieces"] = static_cast<std::uint64_t>(std::ceil(sol.eta_hat_c / sol.omega));
      break;
    }
    case cs::TestKind::sr: {
      const cs::SrArlSolution sol = cs::calibrate_sr(cfg.gamma, q);
      out["q"] = q;
      out["eta_r"] = sol.eta_r;
      out["arl_at_zero"] = sol.arl_at_zero;
      break;
    }
  }

  if (cfg.verify) {
    const double threshold = out.contains("eta_s_prime") ? out["eta_s_prime"].get<double>()
                             : out.contains("eta_hat_c") ? out["eta_hat_c"].get<double>()
                                                         : out["eta_r"].get<double>();
    const cs::McEstimate est =
        cs::estimate_arl2fa(kind, q, threshold, cfg.trials, cfg.seed);
    out["mc_arl"] = est.mean;
    out["mc_arl_stderr"] = est.std_error;
    out["mc_trials"] = est.n_trials;
    out["mc_seed"] = est.seed;
  }

  OutputSink sink(cfg.out);
  if (cfg.as_json) {
    sink.stream() << out.dump(2) << "\n";
  } else {
    for (auto it = out.begin(); it != out.end(); ++it)
      sink.stream() << it.key() << "=" << (it.value().is_number_float()
                                               ? cs::csv_double(it.value().get<double>())
                                               : it.value().dump())
                    << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// covert
// ---------------------------------------------------------------------------

int cmd_covert(const ExperimentConfig& cfg) {
  OutputSink sink(cfg.out);
  cs::CsvWriter csv(sink.stream());
  csv.comment("schema=covertseq.covert.v1");
  csv.comment("config=" + cfg.echo().dump());
  csv.row({"q", "L", "nu", "test", "Q_analytic", "Q_mc", "mc_stderr"});

  for (cs::TestKind kind : parse_tests(cfg.test)) {
    for (double q : cfg.q) {
      const double threshold = calibrate_threshold(kind, cfg.gamma, q);
      std::map<std::uint64_t, std::unique_ptr<cs::CusumCovert>> cusum_by_grid;
      std::unique_ptr<cs::CusumCovert> cusum;
      std::unique_ptr<cs::SrCovert> sr;
      if (kind == cs::TestKind::cusum)
        cusum = std::make_unique<cs::CusumCovert>(q, threshold);
      if (kind == cs::TestKind::sr) {
        cs::SrCovertOptions so;
        so.grid_n = cfg.grid_n;
        sr = std::make_unique<cs::SrCovert>(q, threshold, so);
      }
      for (std::uint64_t nu : cfg.nu) {
        for (std::uint64_t L : cfg.L) {
          double analytic = 0.0;
          switch (kind) {
            case cs::TestKind::shewhart:
              analytic = cs::covert_prob_shewhart(q, L, cfg.gamma).value;
              break;
            case cs::TestKind::cusum:
              analytic = cusum->covert_prob(L, nu).value;
              break;
            case cs::TestKind::sr:
              analytic = sr->covert_prob(L, nu).value;
              break;
          }
          std::string mc_mean, mc_se;
          if (cfg.mc) {
            cs::ScenarioParams p;
            p.q = q;
            p.sigma_ratio = cfg.sigma_ratio();
            p.gamma = cfg.gamma;
            p.theta = cfg.theta;
            p.nu = nu;
            p.L = L;
            const cs::McEstimate est =
                cs::estimate_covert_prob(kind, p, threshold, cfg.trials, cfg.seed);
            mc_mean = cs::csv_double(est.mean);
            mc_se = cs::csv_double(est.std_error);
          }
          csv.row({cs::csv_double(q), std::to_string(L), std::to_string(nu),
                   cs::test_name(kind), cs::csv_double(analytic), mc_mean, mc_se});
        }
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

cs::OptimizerConfig to_optimizer_config(const ExperimentConfig& cfg, std::uint64_t nu) {
  cs::OptimizerConfig oc;
  oc.gamma = cfg.gamma;
  oc.theta = cfg.theta;
  oc.sigma_ratio = cfg.sigma_ratio();
  oc.nu = nu;
  oc.q_min = cfg.q_min;
  oc.q_max = cfg.q_max;
  oc.dq = cfg.dq;
  oc.l_cap = cfg.l_cap;
  oc.collect_trace = !cfg.trace.empty();
  return oc;
}

cs::Optimum run_optimizer(cs::TestKind kind, const std::string& method,
                          const cs::OptimizerConfig& oc) {
  if (kind == cs::TestKind::shewhart) {
    if (method == "exhaustive") return cs::exhaustive_shewhart(oc);
    if (method == "approx") return cs::approx_shewhart(oc);
    if (method == "algorithm1")
      throw cs::ConfigError("optimize: algorithm1 applies to cusum and sr only");
    throw cs::ConfigError("optimize: unknown method " + method);
  }
  if (method != "algorithm1")
    throw cs::ConfigError("optimize: " + method + " applies to the shewhart test only");
  return cs::algorithm1(kind, oc);
}

int cmd_optimize(const ExperimentConfig& cfg) {
  const cs::TestKind kind = parse_test(cfg.test);
  const std::uint64_t nu = cfg.nu.front();
  const cs::OptimizerConfig oc = to_optimizer_config(cfg, nu);
  const cs::Optimum opt = run_optimizer(kind, cfg.method, oc);

  if (!cfg.trace.empty()) {
    std::ofstream tf(cfg.trace);
    if (!tf) throw cs::ConfigError("cannot open trace file: " + cfg.trace);
    cs::CsvWriter csv(tf);
    csv.comment("schema=covertseq.trace.v1");
    csv.comment("config=" + cfg.echo().dump());
    csv.row({"q", "L", "Q", "I_nats"});
    for (const cs::TracePoint& t : opt.trace)
      csv.row({cs::csv_double(t.q), std::to_string(t.L), cs::csv_double(t.covert),
               cs::csv_double(t.utility)});
  }

  if (!opt.feasible) {
    const cs::FeasibilityReport rep =
        cs::feasibility_check(kind, std::max(cfg.q_min, 1e-3), nu, cfg.gamma, cfg.theta, oc);
    std::cerr << "infeasible: no (q,L) meets theta=" << cfg.theta << " under "
              << cs::test_name(kind) << " (theta_max~" << cs::csv_double(rep.theta_max)
              << " at q=" << cs::csv_double(rep.q)
              << ", corollary-1 threshold=" << cs::csv_double(rep.corollary1_threshold) << ")\n";
    return 5;
  }

  OutputSink sink(cfg.out);
  json out;
  out["test"] = cfg.test;
  out["method"] = opt.method;
  out["gamma"] = cfg.gamma;
  out["theta"] = cfg.theta;
  out["nu"] = nu;
  out["feasible"] = opt.feasible;
  out["q_star"] = opt.q_star;
  out["L_star"] = opt.l_star;
  out["I_star_nats"] = opt.i_star;
  if (cfg.bits) out["I_star_bits"] = opt.i_star / std::log(2.0);
  if (!std::isnan(opt.u1)) {
    out["u1"] = opt.u1;
    out["u2"] = opt.u2;
  }
  if (opt.l_cap_hit) out["l_cap_hit"] = true;
  if (cfg.as_json) {
    sink.stream() << out.dump(2) << "\n";
  } else {
    for (auto it = out.begin(); it != out.end(); ++it)
      sink.stream() << it.key() << "=" << (it.value().is_number_float()
                                               ? cs::csv_double(it.value().get<double>())
                                               : it.value().dump())
                    << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// figure
// ---------------------------------------------------------------------------

std::ofstream open_figure_file(const ExperimentConfig& cfg, const std::string& stem) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = cfg.out_dir + "/" + stem + ".csv";
  std::ofstream f(path);
  if (!f) throw cs::ConfigError("cannot open figure file: " + path);
  std::cout << "wrote " << path << "\n";
  return f;
}

// max feasible duration and its covert probability at fixed q (analytic)
struct DurationScan {
  std::uint64_t l_star = 0;
  double q_at_l = 0.0;
  bool feasible = false;
};

DurationScan scan_duration(cs::TestKind kind, double q, const ExperimentConfig& cfg,
                           std::uint64_t nu) {
  DurationScan ds;
  if (kind == cs::TestKind::shewhart) {
    const double miss = 1.0 - std::exp(-std::log(cfg.gamma) / (1.0 + q));
    const double l_frac = std::log(cfg.theta) / std::log(miss);
    if (l_frac < 1.0) return ds;
    ds.l_star = static_cast<std::uint64_t>(std::floor(l_frac));
    ds.q_at_l = cs::covert_prob_shewhart(q, ds.l_star, cfg.gamma).value;
    ds.feasible = true;
    return ds;
  }
  try {
    const double threshold = calibrate_threshold(kind, cfg.gamma, q);
    std::unique_ptr<cs::CusumCovert> cusum;
    std::unique_ptr<cs::SrCovert> sr;
    if (kind == cs::TestKind::cusum) {
      cs::CusumCovertOptions co;
      co.grid_nodes = 3000;
      cusum = std::make_unique<cs::CusumCovert>(q, threshold, co);
    } else {
      cs::SrCovertOptions so;
      so.grid_n = 1000;
      sr = std::make_unique<cs::SrCovert>(q, threshold, so);
    }
    for (std::uint64_t l = 1; l <= cfg.l_cap; ++l) {
      const double cov = kind == cs::TestKind::cusum ? cusum->covert_prob(l, nu).value
                                                     : sr->covert_prob(l, nu).value;
      if (cov < cfg.theta) break;
      ds.l_star = l;
      ds.q_at_l = cov;
      ds.feasible = true;
    }
  } catch (const cs::SrThresholdError&) {
    // below the supported threshold regime: no feasible duration
  }
  return ds;
}

int cmd_figure(const ExperimentConfig& cfg) {
  const std::vector<cs::TestKind> tests = parse_tests(cfg.test);
  const std::string& id = cfg.figure_id;

  const auto optimizer_sweep = [&](const std::string& stem, const std::string& x_name,
                                   const std::vector<double>& xs, auto&& setup) {
    for (cs::TestKind kind : tests) {
      std::ofstream f = open_figure_file(cfg, stem + "_" + cs::test_name(kind));
      cs::CsvWriter csv(f);
      csv.comment("schema=covertseq.figure." + id + ".v1");
      csv.comment("config=" + cfg.echo().dump());
      csv.row({x_name, "q_star", "L_star", "I_star_nats", "feasible"});
      for (double x : xs) {
        ExperimentConfig local = cfg;
        std::uint64_t nu = cfg.nu.front();
        setup(local, nu, x);
        const cs::OptimizerConfig oc = to_optimizer_config(local, nu);
        cs::Optimum opt;
        try {
          opt = kind == cs::TestKind::shewhart ? cs::exhaustive_shewhart(oc)
                                               : cs::algorithm1(kind, oc);
        } catch (const cs::InfeasibleError&) {
          opt.feasible = false;
        }
        csv.row({cs::csv_double(x), cs::csv_double(opt.q_star), std::to_string(opt.l_star),
                 cs::csv_double(opt.i_star), opt.feasible ? "1" : "0"});
      }
    }
  };

  if (id == "covert-vs-L" || id == "covert-vs-q") {
    for (cs::TestKind kind : tests) {
      std::ofstream f = open_figure_file(cfg, id + "_" + std::string(cs::test_name(kind)));
      cs::CsvWriter csv(f);
      csv.comment("schema=covertseq.figure." + id + ".v1");
      csv.comment("config=" + cfg.echo().dump());
      csv.row({"q", "L", "nu", "Q"});
      std::vector<double> qs = cfg.q;
      std::vector<std::uint64_t> Ls = cfg.L;
      if (id == "covert-vs-L" && Ls.size() == 1) {
        Ls.clear();
        for (std::uint64_t l = 1; l <= 40; ++l) Ls.push_back(l);
      }
      if (id == "covert-vs-q" && qs.size() == 1) {
        qs.clear();
        for (int i = 1; i <= 40; ++i) qs.push_back(0.025 * i);
      }
      for (double q : qs) {
        double threshold = 0.0;
        std::unique_ptr<cs::CusumCovert> cusum;
        std::unique_ptr<cs::SrCovert> sr;
        bool ok = true;
        try {
          threshold = calibrate_threshold(kind, cfg.gamma, q);
          if (kind == cs::TestKind::cusum)
            cusum = std::make_unique<cs::CusumCovert>(q, threshold);
          if (kind == cs::TestKind::sr) {
            cs::SrCovertOptions so;
            so.grid_n = cfg.grid_n;
            sr = std::make_unique<cs::SrCovert>(q, threshold, so);
          }
        } catch (const cs::SrThresholdError&) {
          ok = false;
        }
        if (!ok) continue;
        for (std::uint64_t nu : cfg.nu) {
          for (std::uint64_t L : Ls) {
            double v = 0.0;
            switch (kind) {
              case cs::TestKind::shewhart:
                v = cs::covert_prob_shewhart(q, L, cfg.gamma).value;
                break;
              case cs::TestKind::cusum: v = cusum->covert_prob(L, nu).value; break;
              case cs::TestKind::sr: v = sr->covert_prob(L, nu).value; break;
            }
            csv.row({cs::csv_double(q), std::to_string(L), std::to_string(nu),
                     cs::csv_double(v)});
          }
        }
      }
    }
    return 0;
  }

  if (id == "I-vs-q") {
    for (cs::TestKind kind : tests) {
      std::ofstream f = open_figure_file(cfg, "I_vs_q_" + std::string(cs::test_name(kind)));
      cs::CsvWriter csv(f);
      csv.comment("schema=covertseq.figure.I-vs-q.v1");
      csv.comment("config=" + cfg.echo().dump());
      csv.row({"q", "L_star", "Q_at_L_star", "I_nats"});
      for (double q = cfg.q_min; q <= cfg.q_max + 1e-12; q += cfg.dq) {
        const DurationScan ds = scan_duration(kind, q, cfg, cfg.nu.front());
        if (!ds.feasible) continue;
        csv.row({cs::csv_double(q), std::to_string(ds.l_star), cs::csv_double(ds.q_at_l),
                 cs::csv_double(cs::utility_nats(q, ds.l_star, cfg.sigma_ratio()))});
      }
    }
    return 0;
  }

  if (id == "I-vs-L") {
    for (cs::TestKind kind : tests) {
      std::ofstream f = open_figure_file(cfg, "I_vs_L_" + std::string(cs::test_name(kind)));
      cs::CsvWriter csv(f);
      csv.comment("schema=covertseq.figure.I-vs-L.v1");
      csv.comment("config=" + cfg.echo().dump());
      csv.row({"L", "q_best", "I_nats"});
      if (kind == cs::TestKind::shewhart) {
        const std::uint64_t l_max = cs::lmax_shewhart(cfg.gamma, cfg.theta);
        for (std::uint64_t L = 1; L <= l_max; ++L) {
          const double q = cs::optimal_q_for_L_shewhart(L, cfg.gamma, cfg.theta);
          csv.row({std::to_string(L), cs::csv_double(q),
                   cs::csv_double(cs::utility_nats(q, L, cfg.sigma_ratio()))});
        }
      } else {
        cs::OptimizerConfig oc = to_optimizer_config(cfg, cfg.nu.front());
        oc.collect_trace = true;
        const cs::Optimum opt = cs::algorithm1(kind, oc);
        std::map<std::uint64_t, std::pair<double, double>> best;  // L -> (q, I)
        for (const cs::TracePoint& t : opt.trace) {
          if (t.covert < cfg.theta) continue;
          auto it = best.find(t.L);
          if (it == best.end() || t.utility > it->second.second)
            best[t.L] = {t.q, t.utility};
        }
        for (const auto& [L, qi] : best)
          csv.row({std::to_string(L), cs::csv_double(qi.first), cs::csv_double(qi.second)});
      }
    }
    return 0;
  }

  if (id == "I-vs-noise-ratio") {
    std::vector<double> ratios;
    for (double r = 1.0; r <= 10.0 + 1e-9; r += 1.0) ratios.push_back(r);
    optimizer_sweep("I_vs_noise_ratio", "sigma_b2_over_w2", ratios,
                    [](ExperimentConfig& local, std::uint64_t&, double x) {
                      local.sigma_b2_over_w2 = x;
                    });
    // companion curve: the closed-form approximation for the per-sample test
    if (std::find_if(tests.begin(), tests.end(), [](cs::TestKind k) {
          return k == cs::TestKind::shewhart;
        }) != tests.end()) {
      std::ofstream f = open_figure_file(cfg, "I_vs_noise_ratio_shewhart_approx");
      cs::CsvWriter csv(f);
      csv.comment("schema=covertseq.figure.I-vs-noise-ratio.v1");
      csv.comment("config=" + cfg.echo().dump());
      csv.row({"sigma_b2_over_w2", "q_star", "L_star", "I_star_nats", "feasible"});
      for (double r : ratios) {
        ExperimentConfig local = cfg;
        local.sigma_b2_over_w2 = r;
        const cs::Optimum opt = cs::approx_shewhart(to_optimizer_config(local, cfg.nu.front()));
        csv.row({cs::csv_double(r), cs::csv_double(opt.q_star), std::to_string(opt.l_star),
                 cs::csv_double(opt.i_star), opt.feasible ? "1" : "0"});
      }
    }
    return 0;
  }

  if (id == "I-vs-nu") {
    std::vector<double> nus = {0, 10, 20, 50, 100, 200, 300, 500};
    optimizer_sweep("I_vs_nu", "nu", nus,
                    [](ExperimentConfig&, std::uint64_t& nu, double x) {
                      nu = static_cast<std::uint64_t>(x);
                    });
    return 0;
  }

  if (id == "I-vs-theta") {
    std::vector<double> thetas = {0.92, 0.94, 0.95, 0.96, 0.97, 0.98, 0.99, 0.995};
    optimizer_sweep("I_vs_theta", "theta", thetas,
                    [](ExperimentConfig& local, std::uint64_t&, double x) { local.theta = x; });
    return 0;
  }

  if (id == "I-vs-gamma") {
    std::vector<double> gammas = {100, 200, 500, 1000, 2000};
    optimizer_sweep("I_vs_gamma", "gamma", gammas,
                    [](ExperimentConfig& local, std::uint64_t&, double x) { local.gamma = x; });
    return 0;
  }

  throw cs::ConfigError("unknown figure id: " + id);
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig cfg;

  // pre-scan for a config file so flags can override it
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        load_config_file(cfg, argv[i + 1]);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
      }
    }
  }

  CLI::App app{"covertseq: covert transmission analysis against sequential change detection"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)");

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override it)");
    sub->add_option("--test", cfg.test, "shewhart | cusum | sr | all");
    sub->add_option("--gamma", cfg.gamma, "ARL2FA target (> 1)");
    sub->add_option("--theta", cfg.theta, "covert-probability floor in (0,1)");
    sub->add_option("--nu", cfg.nu, "change-point(s)");
    sub->add_option("--q", cfg.q, "normalized transmit power(s)");
    sub->add_option("--L", cfg.L, "transmission duration(s)");
    sub->add_option("--ratio", cfg.sigma_b2_over_w2, "sigma_B^2 / sigma_W^2");
    sub->add_option("--grid-n", cfg.grid_n, "SR quadrature intervals");
    sub->add_option("--trials", cfg.trials, "Monte Carlo trials");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--out", cfg.out, "output file (default stdout)");
    sub->add_flag("--json", cfg.as_json, "JSON output for reports");
  };

  CLI::App* cal = app.add_subcommand("calibrate", "detection thresholds for an ARL2FA target");
  add_common(cal);
  cal->add_flag("--verify", cfg.verify, "Monte Carlo ARL2FA check");

  CLI::App* cov = app.add_subcommand("covert", "covert probabilities as CSV");
  add_common(cov);
  cov->add_flag("--mc", cfg.mc, "add Monte Carlo columns");

  CLI::App* opt = app.add_subcommand("optimize", "maximize throughput under the covert floor");
  add_common(opt);
  opt->add_option("--method", cfg.method, "exhaustive | approx | algorithm1");
  opt->add_option("--qmin", cfg.q_min, "scan start");
  opt->add_option("--qmax", cfg.q_max, "scan end");
  opt->add_option("--dq", cfg.dq, "scan step");
  opt->add_option("--lcap", cfg.l_cap, "duration cap for the inner loop");
  opt->add_option("--trace", cfg.trace, "write the full (q,L,Q,I) trace CSV here");
  opt->add_flag("--bits", cfg.bits, "also report utility in bits");

  CLI::App* fig = app.add_subcommand("figure", "CSV bundles for standard sweeps");
  add_common(fig);
  fig->add_option("--id", cfg.figure_id,
                  "covert-vs-L | covert-vs-q | I-vs-q | I-vs-L | I-vs-noise-ratio | "
                  "I-vs-nu | I-vs-theta | I-vs-gamma")
      ->required();
  fig->add_option("--out-dir", cfg.out_dir, "output directory");
  fig->add_option("--qmin", cfg.q_min, "scan start");
  fig->add_option("--qmax", cfg.q_max, "scan end");
  fig->add_option("--dq", cfg.dq, "scan step");
  fig->add_option("--lcap", cfg.l_cap, "duration cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (cal->parsed()) return cmd_calibrate(cfg);
    if (cov->parsed()) return cmd_covert(cfg);
    if (opt->parsed()) return cmd_optimize(cfg);
    if (fig->parsed()) return cmd_figure(cfg);
    return 2;
  } catch (const cs::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cs::SrThresholdError& e) {
    std::cerr << "calibration error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const cs::ConditioningStarvationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const cs::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 5;
  } catch (const cs::CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

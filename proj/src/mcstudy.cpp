#include "panelmix/mcstudy.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "panelmix/errors.hpp"
#include "panelmix/ot.hpp"
#include "panelmix/stats.hpp"

namespace panelmix {

std::uint64_t mc_sim_seed(std::uint64_t base, int rep) { return Rng::split(base, 3ull * rep); }
std::uint64_t mc_chain_seed(std::uint64_t base, int rep) { return Rng::split(base, 3ull * rep + 1); }
std::uint64_t mc_ident_seed(std::uint64_t base, int rep) { return Rng::split(base, 3ull * rep + 2); }

namespace {

// E_N[W1] between the identified posterior-mean measure and the truth,
// both pushed through the fitted conditional map.
double contraction_diagnostic(const RunConfig& cfg, const PanelData& view,
                              const post::PosteriorSummary& s) {
  if (s.atoms_mean.empty()) return std::numeric_limits<double>::quiet_NaN();
  ModelParams fitted;
  if (cfg.dynamic) fitted.gamma = s.gamma_mean;
  fitted.beta = s.beta_mean;
  fitted.atoms = s.atoms_mean;
  fitted.weights = s.weights_mean;

  ModelParams truth;
  const ModelParams& t = cfg.dgp->true_params;
  if (cfg.dynamic) truth.gamma = t.gamma;
  truth.beta = t.beta.head(view.n_covariates());
  truth.atoms = t.atoms;
  truth.weights = t.weights;

  const auto mode = cfg.dynamic ? ot::CondMode::kDynamic : ot::CondMode::kStatic;
  return ot::avg_conditional_w1(fitted, truth, view, mode);
}

RepResult run_one_rep(const RunConfig& cfg, std::uint64_t seed, int rep) {
  RepResult res;
  res.rep = rep;
  res.sim_seed = mc_sim_seed(seed, rep);
  res.chain_seed = mc_chain_seed(seed, rep);
  res.ident_seed = mc_ident_seed(seed, rep);
  try {
    DgpConfig dgp = *cfg.dgp;
    dgp.seed = res.sim_seed;
    const SimulatedPanel sim = simulate_panel(dgp);
    const PanelData view = fit_view(sim.data, cfg.dynamic, cfg.mc.fit_covariates);
    const PriorConfig priors = resolve_priors(cfg, view);
    SamplerSettings settings = cfg.sampler;
    settings.seed = res.chain_seed;
    const DrawStore store = run_chain(view, priors, settings);
    res.summary = post::summarize(store, cfg.ident.strategy, cfg.ident.features, res.ident_seed);
    if (cfg.mc.contraction_diagnostic) res.w1_truth = contraction_diagnostic(cfg, view, res.summary);
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  return res;
}

}  // namespace

McReport run_mc_study(const RunConfig& cfg, std::uint64_t seed) {
  if (!cfg.dgp) throw InputError("run_mc_study: config has no dgp section");
  McReport report;
  report.n_reps = cfg.mc.replications;
  report.reps.resize(cfg.mc.replications);
  if (cfg.mc.replications == 0) return report;

  const int workers = std::max(1, std::min(cfg.mc.threads, cfg.mc.replications));
  std::atomic<int> next{0};
  auto body = [&]() {
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= cfg.mc.replications) return;
      report.reps[rep] = run_one_rep(cfg, seed, rep);
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }

  std::vector<post::PosteriorSummary> ok;
  std::vector<double> w1;
  for (const auto& r : report.reps) {
    if (r.failed) {
      ++report.n_failed;
      continue;
    }
    ok.push_back(r.summary);
    if (std::isfinite(r.w1_truth)) w1.push_back(r.w1_truth);
  }
  if (!ok.empty())
    report.aggregate = post::aggregate_mc(ok, cfg.dgp->true_params.n_components());
  if (!w1.empty()) report.w1_truth_median = stats::quantile(w1, 0.5);
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void put(std::ofstream& out, const std::string& metric, int component, double value) {
  out << metric << "," << component << "," << fmt(value) << "\n";
}

}  // namespace

void write_summary_csv(const std::string& path, const post::PosteriorSummary& s) {
  std::ofstream out(path);
  if (!out) throw InputError("write_summary_csv: cannot open '" + path + "'");
  out << "metric,component,value\n";
  put(out, "n_draws", 0, s.n_draws);
  put(out, "k_map", 0, s.k_map);
  put(out, "k_q1", 0, s.k_q1);
  put(out, "k_q3", 0, s.k_q3);
  put(out, "kplus_map", 0, s.kplus_map);
  put(out, "kplus_q1", 0, s.kplus_q1);
  put(out, "kplus_q3", 0, s.kplus_q3);
  for (int k = 0; k < s.kplus_pmf.size(); ++k) put(out, "kplus_pmf", k + 1, s.kplus_pmf[k]);
  for (std::size_t k = 0; k < s.atoms_mean.size(); ++k) {
    put(out, "atom_alpha_mean", static_cast<int>(k) + 1, s.atoms_mean[k].alpha);
    put(out, "atom_sigma2_mean", static_cast<int>(k) + 1, s.atoms_mean[k].sigma2);
    put(out, "weight_mean", static_cast<int>(k) + 1, s.weights_mean[static_cast<Eigen::Index>(k)]);
  }
  if (s.dynamic) {
    put(out, "gamma_mean", 0, s.gamma_mean);
    put(out, "gamma_ci_lo", 0, s.gamma_lo);
    put(out, "gamma_ci_hi", 0, s.gamma_hi);
  }
  for (int j = 0; j < s.beta_mean.size(); ++j) {
    put(out, "beta_mean", j + 1, s.beta_mean[j]);
    put(out, "beta_ci_lo", j + 1, s.beta_lo[j]);
    put(out, "beta_ci_hi", j + 1, s.beta_hi[j]);
    put(out, "cumeff_mean", j + 1, s.cumeff_mean[j]);
    put(out, "cumeff_ci_lo", j + 1, s.cumeff_lo[j]);
    put(out, "cumeff_ci_hi", j + 1, s.cumeff_hi[j]);
  }
  put(out, "ident_discard_frac", 0, s.discard_frac);
  put(out, "ident_unreliable", 0, s.ident_unreliable ? 1 : 0);
}

void write_summary_table(const std::string& path, const post::PosteriorSummary& s) {
  std::ofstream out(path);
  if (!out) throw InputError("write_summary_table: cannot open '" + path + "'");
  out << "Posterior summary over " << s.n_draws << " retained draws\n\n";
  out << "K   MAP " << s.k_map << "   quartiles (" << s.k_q1 << ", " << s.k_q3 << ")\n";
  out << "K+  MAP " << s.kplus_map << "   quartiles (" << s.kplus_q1 << ", " << s.kplus_q3 << ")\n";
  out << "P(K+ = k | data):";
  for (int k = 0; k < s.kplus_pmf.size(); ++k)
    out << "  " << (k + 1) << ": " << fmt4(s.kplus_pmf[k]);
  out << "\n\n";
  if (!s.atoms_mean.empty()) {
    out << "component   alpha        sigma2       weight\n";
    for (std::size_t k = 0; k < s.atoms_mean.size(); ++k) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-11zu %-12.4f %-12.4f %-12.4f\n", k + 1,
                    s.atoms_mean[k].alpha, s.atoms_mean[k].sigma2,
                    s.weights_mean[static_cast<Eigen::Index>(k)]);
      out << line;
    }
    if (s.discard_frac > 0.0)
      out << "(clustering identification discarded " << fmt4(100.0 * s.discard_frac)
          << "% of draws" << (s.ident_unreliable ? "; unreliable" : "") << ")\n";
    out << "\n";
  } else {
    out << "no draws matched K+ = " << s.kplus_map << "; atom summary unavailable\n\n";
  }
  if (s.dynamic)
    out << "gamma        " << fmt4(s.gamma_mean) << "  (" << fmt4(s.gamma_lo) << ", "
        << fmt4(s.gamma_hi) << ")\n";
  for (int j = 0; j < s.beta_mean.size(); ++j) {
    out << "beta" << (j + 1) << "        " << fmt4(s.beta_mean[j]) << "  (" << fmt4(s.beta_lo[j])
        << ", " << fmt4(s.beta_hi[j]) << ")\n";
    out << "beta" << (j + 1) << "/(1-g)  " << fmt4(s.cumeff_mean[j]) << "  ("
        << fmt4(s.cumeff_lo[j]) << ", " << fmt4(s.cumeff_hi[j]) << ")\n";
  }
}

void write_mc_csv(const std::string& path, const McReport& report) {
  std::ofstream out(path);
  if (!out) throw InputError("write_mc_csv: cannot open '" + path + "'");
  out << "metric,component,value\n";
  put(out, "n_reps", 0, report.n_reps);
  put(out, "n_failed", 0, report.n_failed);
  if (report.n_reps == report.n_failed) return;
  const post::McAggregate& a = report.aggregate;
  put(out, "k_hat", 0, a.k_hat);
  put(out, "k_q1", 0, a.k_q1);
  put(out, "k_q3", 0, a.k_q3);
  put(out, "kplus_hat", 0, a.kplus_hat);
  put(out, "kplus_q1", 0, a.kplus_q1);
  put(out, "kplus_q3", 0, a.kplus_q3);
  put(out, "kplus_round", 0, a.kplus_round);
  put(out, "n_reps_atoms", 0, a.n_reps_atoms);
  for (std::size_t k = 0; k < a.atoms_mean.size(); ++k) {
    put(out, "atom_alpha_mean", static_cast<int>(k) + 1, a.atoms_mean[k].alpha);
    put(out, "atom_sigma2_mean", static_cast<int>(k) + 1, a.atoms_mean[k].sigma2);
    put(out, "weight_mean", static_cast<int>(k) + 1, a.weights_mean[static_cast<Eigen::Index>(k)]);
  }
  if (a.dynamic) {
    put(out, "gamma_mean", 0, a.gamma_mean);
    put(out, "gamma_ci_lo", 0, a.gamma_lo);
    put(out, "gamma_ci_hi", 0, a.gamma_hi);
  }
  for (int j = 0; j < a.beta_mean.size(); ++j) {
    put(out, "beta_mean", j + 1, a.beta_mean[j]);
    put(out, "beta_ci_lo", j + 1, a.beta_lo[j]);
    put(out, "beta_ci_hi", j + 1, a.beta_hi[j]);
    put(out, "cumeff_mean", j + 1, a.cumeff_mean[j]);
    put(out, "cumeff_ci_lo", j + 1, a.cumeff_lo[j]);
    put(out, "cumeff_ci_hi", j + 1, a.cumeff_hi[j]);
  }
  if (std::isfinite(report.w1_truth_median)) put(out, "w1_truth_median", 0, report.w1_truth_median);
}

void write_mc_reps_csv(const std::string& path, const McReport& report) {
  std::ofstream out(path);
  if (!out) throw InputError("write_mc_reps_csv: cannot open '" + path + "'");
  out << "rep,metric,component,value\n";
  auto putr = [&](int rep, const std::string& metric, int component, double value) {
    out << rep << "," << metric << "," << component << "," << fmt(value) << "\n";
  };
  for (const auto& r : report.reps) {
    putr(r.rep, "failed", 0, r.failed ? 1 : 0);
    if (r.failed) continue;
    const post::PosteriorSummary& s = r.summary;
    putr(r.rep, "k_map", 0, s.k_map);
    putr(r.rep, "kplus_map", 0, s.kplus_map);
    putr(r.rep, "k_q1", 0, s.k_q1);
    putr(r.rep, "k_q3", 0, s.k_q3);
    putr(r.rep, "kplus_q1", 0, s.kplus_q1);
    putr(r.rep, "kplus_q3", 0, s.kplus_q3);
    for (std::size_t k = 0; k < s.atoms_mean.size(); ++k) {
      putr(r.rep, "atom_alpha_mean", static_cast<int>(k) + 1, s.atoms_mean[k].alpha);
      putr(r.rep, "atom_sigma2_mean", static_cast<int>(k) + 1, s.atoms_mean[k].sigma2);
      putr(r.rep, "weight_mean", static_cast<int>(k) + 1,
           s.weights_mean[static_cast<Eigen::Index>(k)]);
    }
    if (s.dynamic) {
      putr(r.rep, "gamma_mean", 0, s.gamma_mean);
      putr(r.rep, "gamma_ci_lo", 0, s.gamma_lo);
      putr(r.rep, "gamma_ci_hi", 0, s.gamma_hi);
    }
    for (int j = 0; j < s.beta_mean.size(); ++j) {
      putr(r.rep, "beta_mean", j + 1, s.beta_mean[j]);
      putr(r.rep, "beta_ci_lo", j + 1, s.beta_lo[j]);
      putr(r.rep, "beta_ci_hi", j + 1, s.beta_hi[j]);
    }
    if (std::isfinite(r.w1_truth)) putr(r.rep, "w1_truth", 0, r.w1_truth);
  }
}

void write_mc_table(const std::string& path, const McReport& report) {
  std::ofstream out(path);
  if (!out) throw InputError("write_mc_table: cannot open '" + path + "'");
  out << "Monte Carlo study: " << report.n_reps << " replications";
  if (report.n_failed > 0) out << " (" << report.n_failed << " failed and skipped)";
  out << "\n\n";
  if (report.n_reps == report.n_failed) {
    out << "no successful replications\n";
    return;
  }
  const post::McAggregate& a = report.aggregate;
  out << "K-hat   " << fmt4(a.k_hat) << "   quartiles (" << fmt4(a.k_q1) << ", " << fmt4(a.k_q3)
      << ")\n";
  out << "K+-hat  " << fmt4(a.kplus_hat) << "   quartiles (" << fmt4(a.kplus_q1) << ", "
      << fmt4(a.kplus_q3) << ")\n\n";
  if (!a.atoms_mean.empty()) {
    out << "component   alpha        sigma2       weight     (averaged over " << a.n_reps_atoms
        << " replications)\n";
    for (std::size_t k = 0; k < a.atoms_mean.size(); ++k) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-11zu %-12.4f %-12.4f %-12.4f\n", k + 1,
                    a.atoms_mean[k].alpha, a.atoms_mean[k].sigma2,
                    a.weights_mean[static_cast<Eigen::Index>(k)]);
      out << line;
    }
    out << "\n";
  }
  if (a.dynamic)
    out << "gamma   " << fmt4(a.gamma_mean) << "  (" << fmt4(a.gamma_lo) << ", " << fmt4(a.gamma_hi)
        << ")\n";
  for (int j = 0; j < a.beta_mean.size(); ++j)
    out << "beta" << (j + 1) << "   " << fmt4(a.beta_mean[j]) << "  (" << fmt4(a.beta_lo[j]) << ", "
        << fmt4(a.beta_hi[j]) << ")\n";
  if (std::isfinite(report.w1_truth_median))
    out << "\nmedian E_N[W1] to truth: " << fmt4(report.w1_truth_median) << "\n";
}

}  // namespace panelmix

// Command-line front end: simulate | fit | mc | prior-kplus | summarize.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "panelmix/config.hpp"
#include "panelmix/csv.hpp"
#include "panelmix/errors.hpp"
#include "panelmix/mcstudy.hpp"

namespace fs = std::filesystem;
using namespace panelmix;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "config file (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "seed override");
  cmd->add_option("--threads", args.threads, "worker threads (mc)");
}

fs::path prepare_out(const CommonArgs& args) {
  fs::path dir(args.out_dir);
  fs::create_directories(dir);
  return dir;
}

int cmd_simulate(const CommonArgs& args) {
  RunConfig cfg = parse_config(args.config_path);
  if (!cfg.dgp) throw InputError("simulate: config has no dgp section");
  DgpConfig dgp = *cfg.dgp;
  if (args.seed) dgp.seed = *args.seed;
  const SimulatedPanel sim = simulate_panel(dgp);
  const fs::path dir = prepare_out(args);
  io::write_panel_csv((dir / "panel.csv").string(), sim.data);
  io::write_truth_json((dir / "truth.json").string(), dgp.true_params, sim.alloc);
  std::cout << "simulated N=" << sim.data.n_units() << " T=" << sim.data.n_periods()
            << " p=" << sim.data.n_covariates() << " -> " << (dir / "panel.csv").string() << "\n";
  return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& data_path) {
  RunConfig cfg = parse_config(args.config_path);
  io::LoadReport report;
  const PanelData raw = io::load_panel(data_path, cfg.dynamic, cfg.lag_offset, &report);
  std::cout << "loaded N=" << report.n_units << " T=" << report.n_periods
            << " p=" << report.n_covariates << " (dropped " << report.n_dropped
            << " incomplete units)\n";
  for (const auto& uid : report.dropped_units) std::cout << "  dropped unit " << uid << "\n";

  const PanelData view = fit_view(raw, cfg.dynamic, cfg.mc.fit_covariates);
  const PriorConfig priors = resolve_priors(cfg, view);
  SamplerSettings settings = cfg.sampler;
  if (args.seed) settings.seed = *args.seed;
  const DrawStore store = run_chain(view, priors, settings);
  const fs::path dir = prepare_out(args);
  io::write_draws_csv((dir / "draws.csv").string(), store);
  std::cout << "wrote " << store.size() << " draws -> " << (dir / "draws.csv").string() << "\n";
  return 0;
}

int cmd_summarize(const CommonArgs& args, const std::string& draws_path) {
  RunConfig cfg = parse_config(args.config_path);
  const DrawStore store = io::read_draws_csv(draws_path);
  const std::uint64_t seed = args.seed.value_or(cfg.sampler.seed);
  const post::PosteriorSummary s =
      post::summarize(store, cfg.ident.strategy, cfg.ident.features, seed);
  const fs::path dir = prepare_out(args);
  write_summary_csv((dir / "summary.csv").string(), s);
  write_summary_table((dir / "table.txt").string(), s);
  std::cout << "K+ MAP " << s.kplus_map << ", summary -> " << (dir / "summary.csv").string()
            << "\n";
  return 0;
}

int cmd_mc(const CommonArgs& args) {
  RunConfig cfg = parse_config(args.config_path);
  if (args.threads) cfg.mc.threads = *args.threads;
  const std::uint64_t seed = args.seed.value_or(cfg.sampler.seed);
  const McReport report = run_mc_study(cfg, seed);
  const fs::path dir = prepare_out(args);
  write_mc_csv((dir / "summary.csv").string(), report);
  write_mc_reps_csv((dir / "reps.csv").string(), report);
  write_mc_table((dir / "table.txt").string(), report);
  std::cout << report.n_reps - report.n_failed << "/" << report.n_reps
            << " replications succeeded -> " << (dir / "summary.csv").string() << "\n";
  if (report.n_failed > 0) {
    for (const auto& r : report.reps) {
      if (r.failed) std::cout << "  rep " << r.rep << " failed: " << r.error << "\n";
    }
  }
  return 0;
}

int cmd_prior_kplus(const CommonArgs& args) {
  RunConfig cfg = parse_config(args.config_path);
  PriorKplusConfig pk;
  if (cfg.prior_kplus) {
    pk = *cfg.prior_kplus;
  } else {
    pk.n_list = {50, 200};
    pk.k_priors.push_back(cfg.priors.k_prior);
    pk.weight_priors.push_back(cfg.priors.weight_prior);
  }
  const std::uint64_t seed = args.seed.value_or(cfg.sampler.seed);
  const fs::path dir = prepare_out(args);
  std::ofstream out(dir / "prior_kplus.csv");
  if (!out) throw InputError("prior-kplus: cannot open output");
  out << "n_units,k_prior,weight_mode,e0,nsim,mean_kplus\n";
  std::uint64_t stream = 0;
  for (std::size_t wi = 0; wi < pk.weight_priors.size(); ++wi) {
    const WeightPrior& wp = pk.weight_priors[wi];
    for (int n : pk.n_list) {
      for (std::size_t ki = 0; ki < pk.k_priors.size(); ++ki) {
        Rng rng(Rng::split(seed, stream++));
        const double m = induced_kplus_mean(pk.k_priors[ki], wp, n, pk.nsim, rng);
        out << n << ",k" << ki << "," << (wp.mode == WeightPrior::Mode::kStatic ? "static" : "dynamic")
            << "," << (wp.e0_fixed ? std::to_string(wp.e0) : std::string("random")) << "," << pk.nsim
            << ",";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", m);
        out << buf << "\n";
      }
    }
  }
  std::cout << "prior K+ means -> " << (dir / "prior_kplus.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian dynamic panel mixtures with an unknown number of groups"};
  app.require_subcommand(1);

  CommonArgs sim_args, fit_args, mc_args, pk_args, sum_args;
  std::string data_path, draws_path;

  auto* sim = app.add_subcommand("simulate", "draw a panel from the configured DGP");
  add_common(sim, sim_args);

  auto* fit = app.add_subcommand("fit", "run the telescoping sampler on a panel CSV");
  add_common(fit, fit_args);
  fit->add_option("--data", data_path, "panel CSV")->required();

  auto* mc = app.add_subcommand("mc", "Monte Carlo study: simulate, fit and aggregate");
  add_common(mc, mc_args);

  auto* pk = app.add_subcommand("prior-kplus", "prior mean of K+ under the configured priors");
  add_common(pk, pk_args);

  auto* sum = app.add_subcommand("summarize", "summarize a draws.csv file");
  add_common(sum, sum_args);
  sum->add_option("--draws", draws_path, "draws CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (fit->parsed()) return cmd_fit(fit_args, data_path);
    if (mc->parsed()) return cmd_mc(mc_args);
    if (pk->parsed()) return cmd_prior_kplus(pk_args);
    if (sum->parsed()) return cmd_summarize(sum_args, draws_path);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

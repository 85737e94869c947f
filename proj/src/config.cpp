#include "panelmix/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "panelmix/errors.hpp"

namespace panelmix {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw InputError("config: " + where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw InputError("config: unknown key '" + key + "' in " + where);
  }
}

double get_num(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) throw InputError("config: missing '" + key + "' in " + where);
  if (!j[key].is_number()) throw InputError("config: '" + key + "' in " + where + " must be a number");
  return j[key].get<double>();
}

double get_num(const json& j, const std::string& where, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw InputError("config: '" + key + "' in " + where + " must be a number");
  return j[key].get<double>();
}

bool get_bool(const json& j, const std::string& where, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw InputError("config: '" + key + "' in " + where + " must be a bool");
  return j[key].get<bool>();
}

std::string get_str(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key) || !j[key].is_string())
    throw InputError("config: missing string '" + key + "' in " + where);
  return j[key].get<std::string>();
}

// {"shape": s, "value": x, "parameterization": "rate"|"scale"}; the
// parameterization field is mandatory because both conventions appear in
// the wild and silently guessing would corrupt hyperpriors.
GammaHyper parse_gamma_hyper(const json& j, const std::string& where) {
  require_keys(j, where, {"shape", "value", "parameterization"});
  GammaHyper g;
  g.shape = get_num(j, where, "shape");
  const double value = get_num(j, where, "value");
  const std::string param = get_str(j, where, "parameterization");
  if (param == "rate") {
    g.rate = value;
  } else if (param == "scale") {
    g.rate = 1.0 / value;
  } else {
    throw InputError("config: parameterization in " + where + " must be 'rate' or 'scale'");
  }
  if (!(g.shape > 0) || !(g.rate > 0))
    throw InputError("config: gamma hyperprior in " + where + " must have positive parameters");
  return g;
}

KPrior parse_k_prior(const json& j, const std::string& where) {
  const std::string variant = get_str(j, where, "variant");
  if (variant == "bnb") {
    require_keys(j, where, {"variant", "a_lambda", "a_pi", "b_pi"});
    return KPrior::bnb(get_num(j, where, "a_lambda"), get_num(j, where, "a_pi"),
                       get_num(j, where, "b_pi"));
  }
  if (variant == "poisson") {
    require_keys(j, where, {"variant", "lambda"});
    return KPrior::translated_poisson(get_num(j, where, "lambda"));
  }
  if (variant == "geometric") {
    require_keys(j, where, {"variant", "q"});
    return KPrior::geometric(get_num(j, where, "q"));
  }
  if (variant == "negbin") {
    require_keys(j, where, {"variant", "r", "p"});
    return KPrior::translated_negbin(get_num(j, where, "r"), get_num(j, where, "p"));
  }
  if (variant == "uniform") {
    require_keys(j, where, {"variant", "lo", "hi"});
    return KPrior::uniform_range(static_cast<int>(get_num(j, where, "lo")),
                                 static_cast<int>(get_num(j, where, "hi")));
  }
  if (variant == "degenerate") {
    require_keys(j, where, {"variant", "k"});
    return KPrior::degenerate(static_cast<int>(get_num(j, where, "k")));
  }
  throw InputError("config: unknown K prior variant '" + variant + "' in " + where);
}

WeightPrior parse_weight_prior(const json& j, const std::string& where) {
  require_keys(j, where, {"mode", "e0", "e0_prior"});
  WeightPrior wp;
  const std::string mode = get_str(j, where, "mode");
  if (mode == "static") {
    wp.mode = WeightPrior::Mode::kStatic;
  } else if (mode == "dynamic") {
    wp.mode = WeightPrior::Mode::kDynamic;
  } else {
    throw InputError("config: weights mode must be 'static' or 'dynamic'");
  }
  if (j.contains("e0") == j.contains("e0_prior"))
    throw InputError("config: " + where + " needs exactly one of 'e0' or 'e0_prior'");
  if (j.contains("e0")) {
    wp.e0_fixed = true;
    wp.e0 = get_num(j, where, "e0");
  } else {
    wp.e0_fixed = false;
    wp.e0_prior = parse_gamma_hyper(j["e0_prior"], where + ".e0_prior");
    wp.e0 = wp.e0_prior.shape / wp.e0_prior.rate;  // chain initialization point
  }
  wp.validate();
  return wp;
}

AtomPrior parse_atom_prior(const json& j, const std::string& where, bool* auto_flag) {
  require_keys(j, where, {"auto", "b0", "B0", "c0", "C0", "C0_prior"});
  AtomPrior ap;
  *auto_flag = get_bool(j, where, "auto", false);
  ap.c0 = get_num(j, where, "c0", 2.5);
  if (*auto_flag) {
    if (j.contains("b0") || j.contains("B0") || j.contains("C0") || j.contains("C0_prior"))
      throw InputError("config: " + where + " with auto=true must not fix b0/B0/C0");
    ap.C0_fixed = false;
    return ap;  // b0, B0, C0 prior resolved against the data at fit time
  }
  ap.b0 = get_num(j, where, "b0");
  ap.B0 = get_num(j, where, "B0");
  if (j.contains("C0") == j.contains("C0_prior"))
    throw InputError("config: " + where + " needs exactly one of 'C0' or 'C0_prior'");
  if (j.contains("C0")) {
    ap.C0_fixed = true;
    ap.C0 = get_num(j, where, "C0");
  } else {
    ap.C0_fixed = false;
    ap.C0_prior = parse_gamma_hyper(j["C0_prior"], where + ".C0_prior");
    ap.C0 = ap.C0_prior.shape / ap.C0_prior.rate;
  }
  ap.validate();
  return ap;
}

Eigen::VectorXd parse_vector(const json& j, const std::string& where) {
  if (j.is_number()) {
    Eigen::VectorXd v(1);
    v[0] = j.get<double>();
    return v;
  }
  if (!j.is_array()) throw InputError("config: " + where + " must be a number or array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError("config: " + where + " entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

// beta0 broadcasts a scalar; Omega0 accepts a scalar (tau * I) or a diagonal.
RegressionPrior parse_regression_prior(const json& j, const std::string& where) {
  require_keys(j, where, {"gamma0", "Gamma0", "beta0", "Omega0"});
  RegressionPrior rp;
  rp.gamma0 = get_num(j, where, "gamma0", 0.0);
  rp.Gamma0 = get_num(j, where, "Gamma0", 1.0);
  Eigen::VectorXd beta0(1);
  beta0[0] = 0.0;
  if (j.contains("beta0")) beta0 = parse_vector(j["beta0"], where + ".beta0");
  Eigen::VectorXd omega(1);
  omega[0] = 100.0;
  if (j.contains("Omega0")) omega = parse_vector(j["Omega0"], where + ".Omega0");
  rp.beta0 = beta0;
  rp.Omega0 = omega.asDiagonal();
  return rp;
}

DgpConfig parse_dgp(const json& j, const std::string& where) {
  require_keys(j, where, {"n_units", "n_periods", "gamma", "beta", "atoms", "weights",
                          "covariate_mean", "covariate_sd", "y0_rule", "seed"});
  DgpConfig cfg;
  cfg.n_units = static_cast<int>(get_num(j, where, "n_units"));
  cfg.n_periods = static_cast<int>(get_num(j, where, "n_periods"));
  if (j.contains("gamma") && !j["gamma"].is_null())
    cfg.true_params.gamma = get_num(j, where, "gamma");
  cfg.true_params.beta = j.contains("beta") ? parse_vector(j["beta"], where + ".beta")
                                            : Eigen::VectorXd(0);
  if (!j.contains("atoms") || !j["atoms"].is_array() || j["atoms"].empty())
    throw InputError("config: " + where + ".atoms must be a non-empty array of [alpha, sigma2]");
  for (const auto& a : j["atoms"]) {
    if (!a.is_array() || a.size() != 2) throw InputError("config: each atom must be [alpha, sigma2]");
    cfg.true_params.atoms.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  Eigen::VectorXd w = parse_vector(j["weights"], where + ".weights");
  if (std::fabs(w.sum() - 1.0) > 1e-6) throw InputError("config: dgp weights must sum to 1");
  cfg.true_params.weights = w / w.sum();
  cfg.covariate_mean = get_num(j, where, "covariate_mean", 1.0);
  cfg.covariate_sd = get_num(j, where, "covariate_sd", 1.0);
  if (j.contains("y0_rule")) {
    const std::string rule = get_str(j, where, "y0_rule");
    if (rule == "zero") cfg.y0_rule = Y0Rule::kZero;
    else if (rule == "stationary-draw") cfg.y0_rule = Y0Rule::kStationaryDraw;
    else if (rule == "user-vector") throw InputError("config: user-vector y0 requires the API, not a config file");
    else throw InputError("config: unknown y0_rule '" + rule + "'");
  }
  cfg.seed = static_cast<std::uint64_t>(get_num(j, where, "seed", 0.0));
  cfg.validate();
  return cfg;
}

SamplerSettings parse_sampler(const json& j, const std::string& where) {
  require_keys(j, where, {"n_iter", "n_burnin", "thin", "s_v", "init", "init_k",
                          "store_allocations", "adapt_burnin", "seed"});
  SamplerSettings s;
  s.n_iter = static_cast<int>(get_num(j, where, "n_iter", 1000));
  s.n_burnin = static_cast<int>(get_num(j, where, "n_burnin", 100));
  s.thin = static_cast<int>(get_num(j, where, "thin", 1));
  s.mh_step_sd = get_num(j, where, "s_v", 0.5);
  s.init_k = static_cast<int>(get_num(j, where, "init_k", 0.0));
  s.seed = static_cast<std::uint64_t>(get_num(j, where, "seed", 0.0));
  s.store_allocations = get_bool(j, where, "store_allocations", false);
  s.adapt_mh_during_burnin = get_bool(j, where, "adapt_burnin", false);
  if (j.contains("init")) {
    const std::string init = get_str(j, where, "init");
    if (init == "prior-draw") s.init_rule = InitRule::kPriorDraw;
    else if (init == "kmeans-warmstart") s.init_rule = InitRule::kKmeansWarmstart;
    else throw InputError("config: unknown init rule '" + init + "'");
  }
  s.validate();
  return s;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: JSON parse error: ") + e.what());
  }
  require_keys(j, "top level",
               {"mode", "lag_offset", "prior", "sampler", "dgp", "mc", "identification",
                "prior_kplus"});

  RunConfig cfg;
  const std::string mode = get_str(j, "top level", "mode");
  if (mode == "dynamic") cfg.dynamic = true;
  else if (mode != "static") throw InputError("config: mode must be 'static' or 'dynamic'");
  cfg.lag_offset = static_cast<int>(get_num(j, "top level", "lag_offset", 0.0));

  if (!j.contains("prior")) throw InputError("config: missing 'prior' section");
  const json& pr = j["prior"];
  require_keys(pr, "prior", {"k", "weights", "atoms", "regression"});
  if (!pr.contains("k") || !pr.contains("weights") || !pr.contains("atoms"))
    throw InputError("config: prior needs 'k', 'weights' and 'atoms'");
  cfg.priors.k_prior = parse_k_prior(pr["k"], "prior.k");
  cfg.priors.weight_prior = parse_weight_prior(pr["weights"], "prior.weights");
  cfg.priors.atom_prior = parse_atom_prior(pr["atoms"], "prior.atoms", &cfg.atoms_auto);
  if (pr.contains("regression")) {
    cfg.priors.regression_prior = parse_regression_prior(pr["regression"], "prior.regression");
  } else {
    cfg.priors.regression_prior.beta0 = Eigen::VectorXd::Zero(1);
    cfg.priors.regression_prior.Omega0 = Eigen::MatrixXd::Identity(1, 1) * 100.0;
  }

  if (j.contains("sampler")) cfg.sampler = parse_sampler(j["sampler"], "sampler");
  if (j.contains("dgp")) cfg.dgp = parse_dgp(j["dgp"], "dgp");

  if (j.contains("mc")) {
    const json& mc = j["mc"];
    require_keys(mc, "mc", {"replications", "threads", "fit_covariates", "contraction_diagnostic"});
    cfg.mc.replications = static_cast<int>(get_num(mc, "mc", "replications", 0.0));
    cfg.mc.threads = static_cast<int>(get_num(mc, "mc", "threads", 1.0));
    cfg.mc.fit_covariates = static_cast<int>(get_num(mc, "mc", "fit_covariates", -1.0));
    cfg.mc.contraction_diagnostic = get_bool(mc, "mc", "contraction_diagnostic", false);
    if (cfg.mc.replications < 0) throw InputError("config: mc.replications must be >= 0");
    if (cfg.mc.threads < 1) throw InputError("config: mc.threads must be >= 1");
  }

  if (j.contains("identification")) {
    const json& id = j["identification"];
    require_keys(id, "identification", {"strategy", "features"});
    if (id.contains("strategy")) {
      const std::string strat = get_str(id, "identification", "strategy");
      if (strat == "ordering") cfg.ident.strategy = post::IdentStrategy::kOrdering;
      else if (strat == "clustering") cfg.ident.strategy = post::IdentStrategy::kClustering;
      else throw InputError("config: unknown identification strategy '" + strat + "'");
    }
    if (id.contains("features")) {
      const std::string feat = get_str(id, "identification", "features");
      if (feat == "alpha") cfg.ident.features = post::ClusterFeatures::kAlphaOnly;
      else if (feat == "alpha-logsigma2") cfg.ident.features = post::ClusterFeatures::kAlphaLogSigma2;
      else throw InputError("config: unknown identification features '" + feat + "'");
    }
  }

  if (j.contains("prior_kplus")) {
    const json& pk = j["prior_kplus"];
    require_keys(pk, "prior_kplus", {"n_list", "nsim", "k_priors", "weight_priors"});
    PriorKplusConfig pkc;
    if (!pk.contains("n_list") || !pk["n_list"].is_array())
      throw InputError("config: prior_kplus.n_list must be an array");
    for (const auto& n : pk["n_list"]) pkc.n_list.push_back(n.get<int>());
    pkc.nsim = static_cast<int>(get_num(pk, "prior_kplus", "nsim", 200000.0));
    if (pk.contains("k_priors")) {
      for (std::size_t i = 0; i < pk["k_priors"].size(); ++i)
        pkc.k_priors.push_back(parse_k_prior(pk["k_priors"][i], "prior_kplus.k_priors"));
    } else {
      pkc.k_priors.push_back(cfg.priors.k_prior);
    }
    if (pk.contains("weight_priors")) {
      for (std::size_t i = 0; i < pk["weight_priors"].size(); ++i)
        pkc.weight_priors.push_back(
            parse_weight_prior(pk["weight_priors"][i], "prior_kplus.weight_priors"));
    } else {
      pkc.weight_priors.push_back(cfg.priors.weight_prior);
    }
    cfg.prior_kplus = std::move(pkc);
  }

  if (cfg.dgp && cfg.dynamic && !cfg.dgp->true_params.gamma)
    throw InputError("config: dynamic mode needs a dgp gamma to simulate from");
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

AtomPrior auto_atom_prior(const PanelData& data, const AtomPrior& base) {
  AtomPrior ap = base;
  const Eigen::VectorXd unit_means = data.y.colwise().mean();
  ap.b0 = unit_means.mean();
  const double range = unit_means.maxCoeff() - unit_means.minCoeff();
  ap.B0 = std::max(range * range, 1.0);
  ap.C0_fixed = false;
  ap.C0_prior.shape = 0.5;
  ap.C0_prior.rate = 100.0 * ap.C0_prior.shape / (ap.c0 * ap.B0);
  ap.C0 = ap.C0_prior.shape / ap.C0_prior.rate;
  ap.validate();
  return ap;
}

PriorConfig resolve_priors(const RunConfig& cfg, const PanelData& data) {
  PriorConfig priors = cfg.priors;
  if (cfg.atoms_auto) priors.atom_prior = auto_atom_prior(data, priors.atom_prior);
  const int p = data.n_covariates();
  RegressionPrior& rp = priors.regression_prior;
  if (rp.beta0.size() != p) {
    if (rp.beta0.size() == 1 && p > 0) {
      const double b = rp.beta0[0];
      const double o = rp.Omega0(0, 0);
      rp.beta0 = Eigen::VectorXd::Constant(p, b);
      rp.Omega0 = Eigen::MatrixXd::Identity(p, p) * o;
    } else {
      rp.beta0 = Eigen::VectorXd::Zero(p);
      rp.Omega0 = Eigen::MatrixXd::Identity(p, p) * 100.0;
    }
  }
  rp.validate(p);
  return priors;
}

PanelData fit_view(const PanelData& data, bool dynamic, int fit_covariates) {
  PanelData view = data;
  if (dynamic && !data.dynamic)
    throw InputError("fit_view: dynamic fit requested but the panel has no initial conditions");
  view.dynamic = dynamic;
  const int p = data.n_covariates();
  const int keep = fit_covariates < 0 ? p : fit_covariates;
  if (keep > p) throw InputError("fit_view: fit_covariates exceeds available covariates");
  if (keep != p) {
    for (auto& zi : view.z) zi = Eigen::MatrixXd(zi.leftCols(keep));
  }
  view.validate();
  return view;
}

}  // namespace panelmix

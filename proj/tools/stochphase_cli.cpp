// Batch front end: one subcommand per pipeline, outputs into --out.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <set>

#include <CLI11.hpp>

#include "stochphase/errors.hpp"
#include "stochphase/gedmd.hpp"
#include "stochphase/io.hpp"
#include "stochphase/pipeline.hpp"

using namespace stochphase;
namespace fs = std::filesystem;

namespace {

// Flat config schema with defaults. Model parameters are accepted on top of
// these under their own names (see model_parameter_names).
json default_config() {
  return json{
      {"model", "hopf"},
      {"seed", 1},
      {"out", "out"},
      {"grid_n", 201},
      {"scheme", "central"},
      {"phase_map", "both"},
      {"cut_angle", 0.0},
      {"spectrum_count", 12},
      {"q_min", kDefaultQMin},
      {"n_traj", 10000},
      {"dt", nullptr},  // model default: 1e-3 planar, 1e-2 ms for ml3d
      {"t_burn", 20.0},
      {"t_window", 200.0},
      {"sample_interval", 0.05},
      {"bins", kDefaultBins},
      {"smoothing", kDefaultSmoothing},
      {"estimator", "km"},
      {"agreement_gate", 0.1},
      {"D_sweep", json::array({0.01, 0.02, 0.04, 0.06, 0.08, 0.1})},
      {"eps", json::array({0.01, 0.0})},
      {"n_trials", kDefaultPulseTrials},
      {"response_bins", kDefaultResponseBins},
      {"gedmd_mode", "auto"},
      {"gedmd_degree", 10},
      {"gedmd_samples", 100000},
      {"gedmd_region_steps", 1000000},
      {"gedmd_stride", 100},
      {"gedmd_sample_traj", 50},
      {"omega_hint", 0.0},
      {"steps", 1000},
      {"x0", json::array()},
  };
}

struct Run {
  std::string command;
  json config;
  fs::path out;
  std::vector<std::string> outputs;
  json summary = json::object();
  std::vector<std::string> warnings;

  void write(const std::string& name, const std::string& content) {
    write_file(out / name, content);
    outputs.push_back(name);
  }
  template <class T>
  T get(const std::string& key) const {
    try {
      return config.at(key).get<T>();
    } catch (const json::exception&) {
      throw config_error("bad_value", "config key '" + key + "' has the wrong type");
    }
  }
};

// ---------------------------------------------------------------------------
// Config

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

json resolve_config(const std::string& path, const std::vector<std::string>& overrides, const std::string& model,
                    const std::optional<std::uint64_t>& seed, const std::string& out) {
  json cfg = default_config();
  if (!path.empty()) {
    json file;
    try {
      file = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw config_error("config_syntax", std::string("config is not valid JSON: ") + e.what());
    }
    if (!file.is_object()) throw config_error("config_syntax", "config must be a flat JSON object");
    for (auto& [k, v] : file.items()) cfg[k] = v;
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw config_error("override", "override '" + o + "' is not key=value");
    cfg[o.substr(0, eq)] = parse_value(o.substr(eq + 1));
  }
  if (!model.empty()) cfg["model"] = model;
  if (seed) cfg["seed"] = *seed;
  if (!out.empty()) cfg["out"] = out;

  if (!cfg["model"].is_string()) throw config_error("bad_value", "model must be a string");
  const std::string key = cfg["model"].get<std::string>();
  std::vector<std::string> params;
  try {
    params = model_parameter_names(key);
  } catch (const Error&) {
    throw config_error("unknown_model", "unknown model key '" + key + "' (expected hopf, snic or ml3d)");
  }
  const json defaults = default_config();
  const std::set<std::string> param_set(params.begin(), params.end());
  for (auto& [k, v] : cfg.items()) {
    if (defaults.contains(k)) continue;
    if (param_set.count(k)) {
      if (!v.is_number()) throw config_error("bad_value", "model parameter '" + k + "' must be a number");
      continue;
    }
    throw config_error("unknown_key", "unknown config key '" + k + "'");
  }
  if (cfg["dt"].is_null()) cfg["dt"] = key == "ml3d" ? 0.01 : 1e-3;
  return cfg;
}

ParamTable model_params(const json& cfg) {
  ParamTable p;
  for (const auto& name : model_parameter_names(cfg["model"].get<std::string>()))
    if (cfg.contains(name)) p[name] = cfg[name].get<double>();
  return p;
}

std::string regime(const std::string& key, const SdeModel& m) {
  if (key == "hopf") return m.params().at("delta") > 0.0 ? "above" : "below";
  if (key == "snic") return m.params().at("m") > 1.0 ? "above" : "below";
  return "excitable";
}

PlanarOptions planar_options(const Run& r, bool mrt) {
  PlanarOptions o;
  o.n = r.get<std::size_t>("grid_n");
  const auto scheme = r.get<std::string>("scheme");
  if (scheme == "upwind") {
    o.assembly.scheme = DifferenceScheme::PecletUpwind;
  } else if (scheme != "central") {
    throw config_error("bad_value", "scheme must be central or upwind");
  }
  o.mrt = mrt;
  o.cut_angle = r.get<double>("cut_angle");
  return o;
}

std::vector<PhaseLabel> labels(const Run& r) {
  const auto pm = r.get<std::string>("phase_map");
  if (pm == "asymptotic") return {PhaseLabel::Asymptotic};
  if (pm == "mrt") return {PhaseLabel::Mrt};
  if (pm == "both") return {PhaseLabel::Asymptotic, PhaseLabel::Mrt};
  throw config_error("bad_value", "phase_map must be asymptotic, mrt or both");
}

bool wants_mrt(const Run& r) {
  const auto l = labels(r);
  return std::find(l.begin(), l.end(), PhaseLabel::Mrt) != l.end();
}

EnsembleSpec ensemble_spec(const Run& r, const std::array<double, 2>& start) {
  EnsembleSpec s;
  s.n_traj = r.get<std::size_t>("n_traj");
  s.dt = r.get<double>("dt");
  s.t_burn = r.get<double>("t_burn");
  s.t_end = s.t_burn + r.get<double>("t_window");
  s.seed = r.get<std::uint64_t>("seed");
  s.init = InitKind::Stationary;
  s.point = {start[0], start[1]};
  const double interval = r.get<double>("sample_interval");
  if (!(interval > 0.0)) throw config_error("bad_value", "sample_interval must be positive");
  s.record_stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(interval / s.dt)));
  if (s.n_traj < kMinTrajectories)
    throw underpowered_error("underpowered", "n_traj must be at least " + std::to_string(kMinTrajectories));
  return s;
}

void note_dropped(Run& r, const std::vector<PhaseEnsembleResult>& runs) {
  for (const auto& e : runs)
    if (e.dropped)
      r.warnings.push_back(std::to_string(e.dropped) + " trajectories dropped: phase undefined on too many samples");
}

json complex_json(cd z) { return json::array({z.real(), z.imag()}); }

void note_robustness(Run& r, const std::vector<cd>& spectrum) {
  const RobustnessReport rep = robustly_oscillatory_check(spectrum, r.get<double>("q_min"));
  r.summary["robustness"] = {{"q_factor", rep.q_factor},
                             {"gap_ratio", rep.gap_ratio},
                             {"verdict", rep.verdict},
                             {"failing", rep.failing},
                             {"lambda1", complex_json(rep.lambda1)}};
  if (!rep.verdict) r.warnings.push_back("not robustly oscillatory: " + rep.failing);
}

// ---------------------------------------------------------------------------
// Commands

void cmd_spectrum(Run& r) {
  const SdeModel model = make_model(r.get<std::string>("model"), model_params(r.config));
  const PlanarAnalysis a = analyze_planar(model, planar_options(r, false));
  const auto spectrum = leading_spectrum(a.backward, r.get<std::size_t>("spectrum_count"), a.circ.rate());
  CsvTable t;
  t.header = {"index", "re", "im"};
  for (std::size_t i = 0; i < spectrum.size(); ++i)
    t.add_row({std::to_string(i), format_number(spectrum[i].real()), format_number(spectrum[i].imag())});
  r.write("spectrum.csv", t.str());
  r.summary["lambda1"] = complex_json(a.pair.lambda);
  r.summary["omega_estimate"] = a.circ.rate();
  note_robustness(r, spectrum);
  r.write("robustness.json", r.summary["robustness"].dump(2) + "\n");
}

void cmd_phase(Run& r) {
  const SdeModel model = make_model(r.get<std::string>("model"), model_params(r.config));
  const PlanarAnalysis a = analyze_planar(model, planar_options(r, wants_mrt(r)));
  const Grid2D& g = *a.grid;
  const auto raw = [&](const std::string& name, const std::vector<double>& v) {
    r.write(name + ".bin", raw_block(v));
    r.write(name + ".json", raw_sidecar(g, name).dump(2) + "\n");
  };
  r.write("P0.csv", field_table(g, {"P0"}, {&a.P0.values}).str());
  raw("P0", a.P0.values);
  for (PhaseLabel l : labels(r)) {
    if (l == PhaseLabel::Asymptotic) {
      r.write("psi.csv", field_table(g, {"psi", "u"}, {&a.psi.psi.phase.values, &a.psi.u.values}).str());
      raw("psi", a.psi.psi.phase.values);
    } else {
      r.write("theta.csv", field_table(g, {"theta", "T"}, {&a.theta->phase.values, &a.mrt->T.values}).str());
      raw("theta", a.theta->phase.values);
      r.summary["Tbar"] = a.mrt->Tbar;
      r.summary["mrt_residual"] = a.mrt->residual;
      r.summary["mrt_cut_residual"] = a.mrt->cut_residual;
    }
  }
  r.summary["lambda1"] = complex_json(a.pair.lambda);
  r.summary["x_ref"] = a.x_ref;
  r.summary["core"] = a.circ.core;
}

void cmd_reduce(Run& r) {
  const SdeModel model = make_model(r.get<std::string>("model"), model_params(r.config));
  ensemble_spec(r, {0.0, 0.0});  // budget check before the expensive part
  const PlanarAnalysis a = analyze_planar(model, planar_options(r, wants_mrt(r)));
  const auto bins = r.get<std::size_t>("bins");
  const int order = r.get<int>("smoothing");
  const EnsembleSpec spec = ensemble_spec(r, a.x_ref);
  const auto ls = labels(r);
  std::vector<PhaseLookup> lookups;
  lookups.reserve(ls.size());
  std::vector<PhaseFn> fns;
  for (PhaseLabel l : ls) lookups.emplace_back(a.field(l));
  for (const auto& lk : lookups) fns.push_back(bridged_lookup(lk));
  const auto runs = run_phase_ensemble(model, spec, fns, bins, r.get<double>("t_window"));
  note_dropped(r, runs);
  const double gate = r.get<double>("agreement_gate");
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const std::string name = to_string(ls[i]);
    const ReducedPhaseModel grid = smooth_periodic(grid_reduce(model, a.field(ls[i]), a.P0, bins), order);
    const ReducedPhaseModel km = smooth_periodic(km_from_stats(runs[i].bins, runs[i].sample_dt, ls[i]), order);
    r.write("reduced_" + name + "_grid.csv", reduced_table(grid).str());
    r.write("reduced_" + name + "_km.csv", reduced_table(km).str());
    const double rms_a = relative_rms(km.a, grid.a), rms_D = relative_rms(km.D, grid.D);
    const bool agree = rms_a <= gate && rms_D <= gate;
    r.summary[name] = {{"grid", reduced_metadata(grid)},
                       {"km", reduced_metadata(km)},
                       {"rms_a", rms_a},
                       {"rms_D", rms_D},
                       {"agreement", agree},
                       {"flagged_samples", runs[i].flagged}};
    if (!agree) r.warnings.push_back(name + ": estimator disagreement above gate");
  }
  r.summary["lambda1"] = complex_json(a.pair.lambda);
  r.write("report.json", r.summary.dump(2) + "\n");
}

void cmd_longterm(Run& r) {
  const std::string key = r.get<std::string>("model");
  if (key == "ml3d") throw config_error("bad_value", "longterm sweeps planar models; use the gedmd command for ml3d");
  const auto sweep = r.config.at("D_sweep");
  if (!sweep.is_array() || sweep.empty()) throw config_error("bad_value", "D_sweep must be a nonempty array");
  const auto bins = r.get<std::size_t>("bins");
  const int order = r.get<int>("smoothing");
  const double t_window = r.get<double>("t_window");
  const auto est = r.get<std::string>("estimator");
  if (est != "km" && est != "grid") throw config_error("bad_value", "estimator must be km or grid");
  ensemble_spec(r, {0.0, 0.0});
  CsvTable t;
  t.header = {"model", "regime", "D", "label", "source", "omega_eff", "D_eff", "stderr_omega", "stderr_D"};
  json points = json::array();
  for (const auto& Dv : sweep) {
    ParamTable p = model_params(r.config);
    p["D"] = Dv.get<double>();
    const SdeModel model = make_model(key, p);
    const PlanarAnalysis a = analyze_planar(model, planar_options(r, wants_mrt(r)));
    const EnsembleSpec spec = ensemble_spec(r, a.x_ref);
    const auto ls = labels(r);
    std::vector<PhaseLookup> lookups;
    lookups.reserve(ls.size());
    std::vector<PhaseFn> fns;
    for (PhaseLabel l : ls) lookups.emplace_back(a.field(l));
    for (const auto& lk : lookups) fns.push_back(bridged_lookup(lk));
    const auto runs = run_phase_ensemble(model, spec, fns, bins, t_window);
    note_dropped(r, runs);
    const std::string reg = regime(key, model);
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const ReducedPhaseModel red =
          est == "km" ? smooth_periodic(km_from_stats(runs[i].bins, runs[i].sample_dt, ls[i]), order)
                      : smooth_periodic(grid_reduce(model, a.field(ls[i]), a.P0, bins), order);
      const LongTermComparison c = compare_longterm(red, runs[i].displacement, spec, t_window);
      const auto row = [&](const std::string& src, const LongTermStats& s) {
        t.add_row({key, reg, format_number(p["D"]), to_string(ls[i]), src, format_number(s.omega_eff),
                   format_number(s.D_eff), format_number(s.stderr_omega), format_number(s.stderr_D)});
      };
      row("full", c.full);
      row("reduced_mc", c.reduced_mc);
      if (c.analytic) row("analytic", *c.analytic);
      json pt{{"D", p["D"]},
              {"label", to_string(ls[i])},
              {"z_omega", c.z_omega},
              {"z_D", c.z_D},
              {"full_vs_reduced", c.z_omega < 2.0 && c.z_D < 2.0}};
      if (c.analytic) {
        pt["rel_omega"] = c.rel_omega;
        pt["rel_D"] = c.rel_D;
        pt["analytic_vs_reduced"] = c.rel_omega < 0.05 && c.rel_D < 0.05;
      } else {
        pt["analytic_absent"] = c.analytic_reason;
      }
      points.push_back(pt);
    }
  }
  r.write("stats.csv", t.str());
  r.summary["points"] = points;
  r.write("agreement.json", points.dump(2) + "\n");
}

void cmd_response(Run& r) {
  const auto eps = r.config.at("eps").get<std::vector<double>>();
  double norm = 0.0;
  for (double e : eps) norm += e * e;
  if (eps.size() != 2 || !(norm > 0.0)) throw config_error("eps", "eps must be a nonzero 2-vector");
  const SdeModel model = make_model(r.get<std::string>("model"), model_params(r.config));
  const PlanarAnalysis a = analyze_planar(model, planar_options(r, wants_mrt(r)));
  const auto bins = r.get<std::size_t>("response_bins");
  for (PhaseLabel l : labels(r)) {
    const std::string name = to_string(l);
    const PhaseField& f = a.field(l);
    const ResponseCurve curve = aiprc_grid(phase_gradient(f), f, a.P0, bins);
    const PhaseLookup lookup(f);
    const PulseResult pr = pulse_experiment(density_sampler(a.P0), bridged_lookup(lookup), eps,
                                            r.get<std::size_t>("n_trials"), r.get<std::uint64_t>("seed"), bins);
    r.write("aiprc_" + name + ".csv", response_table(curve).str());
    CsvTable t;
    t.header = {"phi", "pulse_shift", "stderr", "predicted", "agree"};
    std::size_t agree = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double pred = eps[0] * curve.values[0][b] + eps[1] * curve.values[1][b];
      const bool ok = std::abs(pr.mean_shift[b] - pred) < 2.0 * pr.shift_error[b];
      agree += ok;
      t.add_row({format_number(curve.phi[b]), format_number(pr.mean_shift[b]), format_number(pr.shift_error[b]),
                 format_number(pred), ok ? "1" : "0"});
    }
    r.write("pulse_" + name + ".csv", t.str());
    r.summary[name] = {{"bins_agreeing", agree},
                       {"bins", bins},
                       {"r2_x", single_harmonic_r2(curve.phi, curve.values[0])},
                       {"r2_y", single_harmonic_r2(curve.phi, curve.values[1])},
                       {"sign_bias_x", sign_bias(curve.values[0])},
                       {"peak", peak_magnitude(curve)},
                       {"trials", pr.n_trials},
                       {"discarded", pr.discarded},
                       {"redrawn", pr.redrawn}};
  }
  r.summary["eps"] = eps;
}

void cmd_gedmd(Run& r) {
  const std::string key = r.get<std::string>("model");
  const SdeModel model = make_model(key, model_params(r.config));
  std::string mode = r.get<std::string>("gedmd_mode");
  if (mode == "auto") mode = model.dim() == 2 ? "crosscheck" : "ml";
  if (mode != "crosscheck" && mode != "ml") throw config_error("bad_value", "gedmd_mode must be auto, crosscheck or ml");
  const std::uint64_t seed = r.get<std::uint64_t>("seed");
  const double dt = r.get<double>("dt");
  const std::size_t n_traj = r.get<std::size_t>("n_traj");
  if (mode == "ml" && n_traj < kMinTrajectories)
    throw underpowered_error("underpowered", "the reduced long-term comparison needs at least " +
                                                 std::to_string(kMinTrajectories) + " trajectories");

  std::vector<double> x0 = r.config.at("x0").get<std::vector<double>>();
  if (x0.empty()) {
    x0.resize(model.dim());
    for (std::size_t i = 0; i < model.dim(); ++i)
      x0[i] = 0.5 * (model.domain_hint().lower[i] + model.domain_hint().upper[i]);
  }
  if (x0.size() != model.dim()) throw config_error("x0", "x0 has the wrong dimension");
  const auto burn_steps = static_cast<std::size_t>(std::llround(r.get<double>("t_burn") / dt));
  Trajectory burn = euler_maruyama(model, x0, dt, burn_steps, child_seed(seed, 1));
  const auto start = burn.point(burn.size() - 1);
  x0.assign(start.begin(), start.end());
  const auto long_run = std::make_shared<const Trajectory>(
      euler_maruyama(model, x0, dt, r.get<std::size_t>("gedmd_region_steps"), child_seed(seed, 2)));
  const Region region = region_select(*long_run);
  if (region.fragmented) r.warnings.push_back("region is fragmented");
  double hint = r.get<double>("omega_hint");
  if (!(hint > 0.0)) hint = crossing_frequency(*long_run, 0);
  const Eigen::MatrixXd samples =
      stationary_samples(model, x0, dt, 0.0, r.get<std::size_t>("gedmd_stride"), r.get<std::size_t>("gedmd_samples"),
                         r.get<std::size_t>("gedmd_sample_traj"), child_seed(seed, 3));
  GedmdOptions opts;
  opts.degree = r.get<int>("gedmd_degree");
  opts.omega_hint = hint;
  const GedmdModel g = gedmd_fit(model, samples, region, opts);
  r.write("gedmd_model.json", to_json(g).dump(1) + "\n");
  r.summary["lambda1"] = complex_json(g.lambda1);
  r.summary["omega_hint"] = hint;
  r.summary["region"] = to_json(region);

  if (mode == "crosscheck") {
    const PlanarAnalysis a = analyze_planar(model, planar_options(r, false));
    const double rel = std::abs(g.lambda1 - a.pair.lambda) / std::abs(a.pair.lambda);
    CsvTable t;
    t.header = {"source", "re", "im"};
    t.add_row({"gedmd", format_number(g.lambda1.real()), format_number(g.lambda1.imag())});
    t.add_row({"grid", format_number(a.pair.lambda.real()), format_number(a.pair.lambda.imag())});
    r.write("lambda1_comparison.csv", t.str());
    r.summary["relative_difference"] = rel;
    r.summary["within_10_percent"] = rel < 0.1;
    return;
  }

  // Reduction and long-term statistics along gEDMD phase series.
  const auto bins = r.get<std::size_t>("bins");
  const double t_window = r.get<double>("t_window");
  EnsembleSpec spec;
  spec.n_traj = n_traj;
  spec.dt = dt;
  spec.t_burn = r.get<double>("t_burn");
  spec.t_end = spec.t_burn + t_window;
  spec.seed = child_seed(seed, 4);
  spec.init = InitKind::Stationary;
  spec.point = x0;
  spec.record_stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(r.get<double>("sample_interval") / dt)));
  const PhaseFn phase = gedmd_phase_fn(g);
  const auto runs = run_phase_ensemble(model, spec, {phase}, bins, t_window);
  note_dropped(r, runs);
  const ReducedPhaseModel red =
      smooth_periodic(km_from_stats(runs[0].bins, runs[0].sample_dt, PhaseLabel::Asymptotic), r.get<int>("smoothing"));
  r.write("reduced_asymptotic_km.csv", reduced_table(red).str());
  const LongTermComparison c = compare_longterm(red, runs[0].displacement, spec, t_window);
  json lt{{"full", to_json(c.full)}, {"reduced_mc", to_json(c.reduced_mc)}, {"z_omega", c.z_omega}, {"z_D", c.z_D}};
  if (c.analytic) lt["analytic"] = to_json(*c.analytic);
  r.summary["longterm"] = lt;

  // aiPRC from the gEDMD gradient against a direct pulse along the first axis.
  auto eps = r.config.at("eps").get<std::vector<double>>();
  eps.resize(model.dim(), 0.0);
  AiprcAccumulator acc(model.dim(), r.get<std::size_t>("response_bins"), "gedmd");
  const GradientFn grad = gedmd_gradient_fn(g);
  EnsembleSpec rs = spec;
  rs.seed = child_seed(seed, 5);
  ensemble(model, rs, [&](std::size_t, Trajectory&& tr) { acc.add(tr, phase, grad); });
  const ResponseCurve curve = acc.result();
  const PulseResult pr = pulse_experiment(trajectory_sampler(long_run), phase, eps, r.get<std::size_t>("n_trials"),
                                          child_seed(seed, 6), r.get<std::size_t>("response_bins"));
  r.write("aiprc_gedmd.csv", response_table(curve).str());
  CsvTable t;
  t.header = {"phi", "pulse_shift", "stderr", "predicted", "predicted_stderr"};
  for (std::size_t b = 0; b < curve.n_bins(); ++b) {
    double pred = 0.0, perr = 0.0;
    for (std::size_t k = 0; k < eps.size(); ++k) {
      pred += eps[k] * curve.values[k][b];
      perr += std::pow(eps[k] * curve.error[k][b], 2);
    }
    t.add_row({format_number(curve.phi[b]), format_number(pr.mean_shift[b]), format_number(pr.shift_error[b]),
               format_number(pred), format_number(std::sqrt(perr))});
  }
  r.write("pulse_gedmd.csv", t.str());
}

void cmd_simulate(Run& r) {
  const SdeModel model = make_model(r.get<std::string>("model"), model_params(r.config));
  std::vector<double> x0 = r.config.at("x0").get<std::vector<double>>();
  if (x0.empty()) {
    // Off-centre default: the planar models are singular or stationary at the origin.
    const Box& b = model.domain_hint();
    for (std::size_t i = 0; i < model.dim(); ++i) x0.push_back(b.lower[i] + (i == 0 ? 0.75 : 0.5) * b.width(i));
  }
  if (x0.size() != model.dim()) throw config_error("x0", "x0 has the wrong dimension");
  EnsembleSpec s;
  s.n_traj = r.get<std::size_t>("n_traj");
  s.dt = r.get<double>("dt");
  s.t_burn = 0.0;
  s.t_end = s.dt * static_cast<double>(r.get<std::size_t>("steps"));
  s.seed = r.get<std::uint64_t>("seed");
  s.init = InitKind::Fixed;
  s.point = x0;
  CsvTable t;
  t.header = {"traj", "t"};
  for (std::size_t i = 0; i < model.dim(); ++i) t.header.push_back("x" + std::to_string(i));
  std::size_t reflections = 0;
  ensemble(model, s, [&](std::size_t j, Trajectory&& tr) {
    reflections += tr.report.reflections;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      std::vector<std::string> row{std::to_string(j), format_number(tr.times[i])};
      for (double v : tr.point(i)) row.push_back(format_number(v));
      t.add_row(std::move(row));
    }
  });
  r.write("trajectories.csv", t.str());
  r.summary["reflections"] = reflections;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Numerical: return 3;
    case ErrorKind::Underpowered: return 4;
  }
  return 3;
}

std::string kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Underpowered: return "underpowered";
  }
  return "numerical";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic phase reduction of noisy oscillators"};
  app.require_subcommand(1, 1);
  std::string config_path, model, out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "flat JSON config file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--model", model, "model key: hopf, snic or ml3d");
  app.add_option("overrides", overrides, "key=value config overrides");
  app.fallthrough();
  const std::vector<std::pair<std::string, std::string>> commands{
      {"spectrum", "leading spectrum of the backward operator and robustness report"},
      {"phase", "asymptotic and MRT phase fields with the stationary density"},
      {"reduce", "reduced phase model from grid and trajectory estimators"},
      {"longterm", "long-term statistics over a noise sweep"},
      {"response", "aiPRC curves and pulse experiments"},
      {"gedmd", "generator EDMD fit and the high-dimensional pipeline"},
      {"simulate", "Euler-Maruyama trajectories"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->allow_extras(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  Run run;
  run.command = app.get_subcommands().front()->get_name();
  fs::path out_dir = out.empty() ? fs::path("out") : fs::path(out);
  try {
    run.config = resolve_config(config_path, overrides, model, seed, out);
    out_dir = run.get<std::string>("out");
    run.out = out_dir;
    fs::create_directories(run.out);
    fs::remove(run.out / "FAILED");
    fs::remove(run.out / "error.json");
    fs::remove(run.out / "manifest.json");
    if (run.command == "spectrum") cmd_spectrum(run);
    else if (run.command == "phase") cmd_phase(run);
    else if (run.command == "reduce") cmd_reduce(run);
    else if (run.command == "longterm") cmd_longterm(run);
    else if (run.command == "response") cmd_response(run);
    else if (run.command == "gedmd") cmd_gedmd(run);
    else cmd_simulate(run);
    const json manifest{{"command", run.command}, {"version", kVersion},  {"config", run.config},
                        {"outputs", run.outputs}, {"summary", run.summary}, {"warnings", run.warnings},
                        {"status", "ok"}};
    write_file(run.out / "manifest.json", manifest.dump(2) + "\n");
    for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
  } catch (const Error& e) {
    const json err{{"kind", kind_name(e.kind())}, {"code", e.code()}, {"message", e.what()}, {"command", run.command}};
    std::cerr << err.dump() << "\n";
    try {
      write_file(out_dir / "error.json", err.dump(2) + "\n");
      write_file(out_dir / "FAILED", run.command + ": " + e.code() + "\n");
    } catch (...) {
    }
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    const json err{{"kind", "numerical"}, {"code", "internal"}, {"message", e.what()}, {"command", run.command}};
    std::cerr << err.dump() << "\n";
    try {
      write_file(out_dir / "error.json", err.dump(2) + "\n");
      write_file(out_dir / "FAILED", run.command + ": internal\n");
    } catch (...) {
    }
    return 3;
  }
}

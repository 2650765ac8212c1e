#include "stochphase/pipeline.hpp"

#include <cmath>
#include <numbers>

#include "stochphase/errors.hpp"

namespace stochphase {

const PhaseField& PlanarAnalysis::field(PhaseLabel label) const {
  if (label == PhaseLabel::Asymptotic) return psi.psi;
  if (!theta) throw config_error("phase_map", "MRT phase was not computed for this run");
  return *theta;
}

PlanarAnalysis analyze_planar(const SdeModel& model, const PlanarOptions& opts) {
  if (model.dim() != 2) throw config_error("dimension", "grid pipeline needs a planar model, got " + model.name());
  if (opts.n < 11) throw config_error("grid", "grid needs at least 11 nodes per axis");
  PlanarAnalysis a;
  if (opts.mrt && !strongly_elliptic(model))
    throw underpowered_error("not_elliptic", "MRT phase requires a strongly elliptic backward operator; model '" +
                                                 model.name() + "' has a degenerate diffusion tensor");
  a.grid = Grid2D::create(model.domain_hint(), opts.n, opts.n, &model);
  a.backward = assemble_backward(model, a.grid, opts.assembly);
  a.forward = assemble_forward(a.backward);
  a.P0 = stationary_density(a.forward, &a.stationary);
  a.circ = circulation(stationary_current(a.backward, a.P0));
  if (!(a.circ.flux > 0.0)) throw numerical_error("no_circulation", "stationary current does not circulate");
  a.x_ref = reference_point(a.P0, a.circ.core);
  a.pair = slowest_mode(a.backward, a.forward, a.circ.rate(), &a.x_ref, opts.eig);
  a.psi = asymptotic_phase(a.pair, a.x_ref);
  if (opts.mrt) {
    a.mrt = mrt_solve(model, a.backward, Cut{a.circ.core, opts.cut_angle});
    a.theta = mrt_phase(*a.mrt, a.x_ref);
  }
  return a;
}

double crossing_frequency(const Trajectory& traj, std::size_t axis) {
  if (traj.size() < 3 || axis >= traj.dim) throw config_error("trajectory", "need a trajectory with the axis");
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) mean += traj.point(i)[axis];
  mean /= static_cast<double>(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) sq += std::pow(traj.point(i)[axis] - mean, 2);
  const double half = 0.5 * std::sqrt(sq / static_cast<double>(traj.size()));
  bool armed = false;
  std::size_t crossings = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double v = traj.point(i)[axis];
    if (v < mean - half) armed = true;
    if (armed && v > mean + half) {
      ++crossings;
      armed = false;
    }
  }
  const double T = traj.times.back() - traj.times.front();
  return 2.0 * std::numbers::pi * static_cast<double>(crossings) / T;
}

std::vector<PhaseEnsembleResult> run_phase_ensemble(const SdeModel& model, const EnsembleSpec& spec,
                                                    const std::vector<PhaseFn>& phases, std::size_t n_bins,
                                                    double t_window, IntegrationReport* report) {
  spec.validate();
  const double sample_dt = spec.dt * static_cast<double>(spec.record_stride);
  const auto window_index = static_cast<std::size_t>(std::llround(t_window / sample_dt));
  if (window_index == 0 || spec.t_burn + t_window > spec.t_end + 1e-9 * spec.t_end)
    throw config_error("t_window", "t_window must fit inside the recorded span");
  std::vector<PhaseEnsembleResult> out(phases.size());
  for (auto& r : out) {
    r.bins = BinStats(n_bins);
    r.sample_dt = sample_dt;
    r.displacement.reserve(spec.n_traj);
  }
  IntegrationReport total;
  ensemble(model, spec, [&](std::size_t, Trajectory&& traj) {
    total += traj.report;
    for (std::size_t p = 0; p < phases.size(); ++p) {
      std::size_t flagged = 0;
      PhaseSeries s;
      try {
        s = full_phase_series(traj, phases[p], &flagged);
      } catch (const Error& e) {
        if (e.code() != "unreliable_series") throw;
        ++out[p].dropped;
        continue;
      }
      accumulate(out[p].bins, s);
      out[p].displacement.push_back(s.unwrapped[window_index] - s.unwrapped[0]);
      out[p].flagged += flagged;
      out[p].samples += s.size();
    }
  });
  for (const auto& r : out) {
    if (static_cast<double>(r.dropped) > 0.05 * static_cast<double>(spec.n_traj))
      throw numerical_error("unreliable_series", std::to_string(r.dropped) + " of " + std::to_string(spec.n_traj) +
                                                     " trajectories spent too long where the phase is undefined");
  }
  if (report) *report = total;
  return out;
}

LongTermComparison compare_longterm(const ReducedPhaseModel& reduced, const std::vector<double>& full_displacement,
                                    const EnsembleSpec& spec, double t_window) {
  LongTermComparison c;
  c.full = stats_from_displacements(full_displacement, t_window);
  EnsembleSpec rs;
  rs.n_traj = spec.n_traj;
  rs.dt = spec.dt;
  rs.t_burn = spec.t_burn;
  rs.t_end = spec.t_burn + t_window;
  rs.seed = child_seed(spec.seed, 0x7265647563ULL);
  rs.init = InitKind::Stationary;
  rs.point = {0.0};
  c.reduced_mc = stats_from_displacements(reduced_displacements(reduced, rs), t_window);
  c.z_omega = z_score(c.full.omega_eff, c.full.stderr_omega, c.reduced_mc.omega_eff, c.reduced_mc.stderr_omega);
  c.z_D = z_score(c.full.D_eff, c.full.stderr_D, c.reduced_mc.D_eff, c.reduced_mc.stderr_D);
  try {
    c.analytic = analytic_stats(reduced);
    c.rel_omega = std::abs(c.analytic->omega_eff / c.reduced_mc.omega_eff - 1.0);
    c.rel_D = std::abs(c.analytic->D_eff / c.reduced_mc.D_eff - 1.0);
  } catch (const Error& e) {
    if (e.code() != "stiffness") throw;
    c.analytic_reason = e.what();
  }
  return c;
}

}  // namespace stochphase

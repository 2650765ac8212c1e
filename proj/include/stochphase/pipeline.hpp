#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stochphase/longterm.hpp"
#include "stochphase/phase_maps.hpp"
#include "stochphase/reduction.hpp"
#include "stochphase/response.hpp"
#include "stochphase/spectrum.hpp"

namespace stochphase {

struct PlanarOptions {
  std::size_t n = 201;  // nodes per axis
  AssemblyOptions assembly;
  EigenOptions eig;
  bool mrt = true;
  double cut_angle = 0.0;
};

/// Everything the planar pipelines share: operators, P0, the slowest mode and
/// both phase maps on one grid.
struct PlanarAnalysis {
  GridPtr grid;
  SparseOperator backward, forward;
  RealField P0;
  StationaryReport stationary;
  Circulation circ;
  std::array<double, 2> x_ref{0.0, 0.0};
  SpectralPair pair;
  AsymptoticPhase psi;
  std::optional<MrtSolution> mrt;
  std::optional<PhaseField> theta;

  const PhaseField& field(PhaseLabel label) const;
};

PlanarAnalysis analyze_planar(const SdeModel& model, const PlanarOptions& opts = {});

/// Mean rotation rate from hysteresis up-crossings of one coordinate through
/// its mean (thresholds at +-sd/2), as 2 pi crossings / duration.
double crossing_frequency(const Trajectory& traj, std::size_t axis = 0);

/// Per phase map: increments for the Kramers-Moyal estimate and the
/// displacement over the window, from one shared ensemble.
struct PhaseEnsembleResult {
  BinStats bins;
  std::vector<double> displacement;
  std::size_t flagged = 0;
  std::size_t samples = 0;
  std::size_t dropped = 0;  // trajectories whose series was unreliable
  double sample_dt = 0.0;
};

/// Runs the ensemble once and evaluates every phase map on each recorded
/// sample. The window is measured from the first recorded sample. Series that
/// spend too long where the phase is undefined are dropped and counted; more
/// than 5% dropped is an error.
std::vector<PhaseEnsembleResult> run_phase_ensemble(const SdeModel& model, const EnsembleSpec& spec,
                                                    const std::vector<PhaseFn>& phases, std::size_t n_bins,
                                                    double t_window, IntegrationReport* report = nullptr);

/// The three-way long-term comparison at one parameter point.
struct LongTermComparison {
  LongTermStats full;
  LongTermStats reduced_mc;
  std::optional<LongTermStats> analytic;
  std::string analytic_reason;  // why the analytic source is absent
  double z_omega = 0.0;         // full vs reduced MC, in combined stderr
  double z_D = 0.0;
  double rel_omega = 0.0;       // analytic vs reduced MC, relative
  double rel_D = 0.0;
};

/// Reduced MC uses the same trajectory count and window as `spec`, starting
/// from phase 0 after the same burn-in.
LongTermComparison compare_longterm(const ReducedPhaseModel& reduced, const std::vector<double>& full_displacement,
                                    const EnsembleSpec& spec, double t_window);

}  // namespace stochphase

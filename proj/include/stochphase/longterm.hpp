#pragma once

#include <vector>

#include "stochphase/reduction.hpp"

namespace stochphase {

struct LongTermStats {
  double omega_eff = 0.0;
  double D_eff = 0.0;
  double stderr_omega = 0.0;
  double stderr_D = 0.0;
  std::size_t n_traj = 0;
  double t_window = 0.0;
};

inline constexpr std::size_t kMinTrajectories = 30;

/// omega_eff = mean(d)/t, D_eff = var(d)/(2t) over per-trajectory unwrapped
/// displacements d; standard errors from the across-trajectory scatter.
LongTermStats stats_from_displacements(const std::vector<double>& displacement, double t_window);

/// Same, with d taken between the first sample and the sample t_window later.
LongTermStats empirical_stats(const std::vector<PhaseSeries>& ensemble, double t_window);

enum class Calculus { Ito, Stratonovich };

/// Closed-form rotation rate and phase diffusion of a periodic 1D diffusion on a
/// circular mesh. The Ito model (the default) is first rewritten with the
/// Stratonovich drift a - D'/2 that the formulas assume. Integrals of e^{+-V}
/// are exact for piecewise-linear V; everything runs in log space.
LongTermStats analytic_stats(const ReducedPhaseModel& model, std::size_t mesh = 2048,
                             Calculus calculus = Calculus::Ito);

/// |x - y| / sqrt(sx^2 + sy^2).
double z_score(double x, double sx, double y, double sy);

}  // namespace stochphase

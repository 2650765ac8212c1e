#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stochphase/phase_maps.hpp"
#include "stochphase/simulate.hpp"

namespace stochphase {

/// Per-bin sums of phase increments, binned by the phase at the left endpoint.
/// Partial statistics merge associatively.
struct BinStats {
  std::size_t n_bins = 0;
  std::vector<double> sum;
  std::vector<double> sumsq;
  std::vector<std::uint64_t> count;

  explicit BinStats(std::size_t bins = 0) : n_bins(bins), sum(bins, 0.0), sumsq(bins, 0.0), count(bins, 0) {}

  std::size_t bin_of(double phi) const;
  void add(double phi, double dphi);
  void merge(const BinStats& other);
  std::uint64_t total() const;
};

/// dphi = a(phi) dt + sqrt(2 D(phi)) dW with coefficients tabulated at bin centres.
struct ReducedPhaseModel {
  PhaseLabel label = PhaseLabel::Asymptotic;
  std::size_t n_bins = 0;
  std::vector<double> phi;     // bin centres (b + 1/2) 2pi/n
  std::vector<double> a;
  std::vector<double> D;
  std::vector<double> count;   // samples (trajectory estimator) or P0 mass (grid estimator)
  int smoothing = 0;           // Fourier order, 0 if raw

  /// Linear interpolation between bin centres with wraparound.
  double drift_at(double phi) const;
  double diffusion_at(double phi) const;
  /// Sign changes of a around the circle.
  std::size_t zero_crossings() const;
  /// count-weighted mean of a.
  double weighted_mean_drift() const;
};

inline constexpr std::size_t kDefaultBins = 100;
inline constexpr int kDefaultSmoothing = 8;
/// Share of bridged (masked) lookups above which a series is rejected.
inline constexpr double kMaxFlaggedFraction = 0.01;

/// Grid lookup that clamps points outside the grid to its edge and flags them.
std::function<LookupResult(std::span<const double>)> bridged_lookup(const PhaseLookup& lookup);

/// Phase along a trajectory by pointwise lookup, then unwrapped.
PhaseSeries full_phase_series(const Trajectory& traj, const PhaseLookup& lookup, std::size_t* flagged = nullptr);
/// Same for any phase map given as a function of the state.
PhaseSeries full_phase_series(const Trajectory& traj,
                              const std::function<LookupResult(std::span<const double>)>& phase,
                              std::size_t* flagged = nullptr);

/// Kramers-Moyal estimate from stationary series sampled at step dt.
ReducedPhaseModel km_estimate(const std::vector<PhaseSeries>& series, double dt, std::size_t n_bins,
                              PhaseLabel label = PhaseLabel::Asymptotic);
void accumulate(BinStats& stats, const PhaseSeries& series);
ReducedPhaseModel km_from_stats(const BinStats& stats, double dt, PhaseLabel label);

/// Isochron averages over grid cells binned by phase, weighted by P0 * cell volume.
/// a uses omega_1 - Omega (asymptotic) or 2pi/Tbar (MRT); D uses grad Phi^T G grad Phi.
ReducedPhaseModel grid_reduce(const SdeModel& model, const PhaseField& field, const RealField& P0,
                              std::size_t n_bins = kDefaultBins);

/// Truncated Fourier series of a and D up to `order`; D floored at 1e-12.
ReducedPhaseModel smooth_periodic(const ReducedPhaseModel& model, int order = kDefaultSmoothing);

/// Euler-Maruyama on the unwrapped line. spec.point[0] is the initial phase
/// (default 0); spec.init == Stationary runs the burn-in first.
std::vector<PhaseSeries> simulate_reduced(const ReducedPhaseModel& model, const EnsembleSpec& spec);

/// Displacement phi(t_end) - phi(t_burn) of each trajectory, without storing paths.
std::vector<double> reduced_displacements(const ReducedPhaseModel& model, const EnsembleSpec& spec);

/// Root-mean-square of (x - y) relative to the RMS of y.
double relative_rms(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace stochphase

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "stochphase/phase_maps.hpp"
#include "stochphase/simulate.hpp"

namespace stochphase {

/// Per-bin vector response. values[c][b] is component c in bin b.
struct ResponseCurve {
  std::string label;
  std::vector<double> phi;                 // bin centres
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> error;  // standard errors, same layout
  std::vector<double> weight;              // P0 mass or sample count per bin

  std::size_t n_bins() const { return phi.size(); }
  std::size_t dim() const { return values.size(); }
  /// Linear interpolation between bin centres with wraparound.
  std::vector<double> at(double phi) const;
};

inline constexpr std::size_t kDefaultResponseBins = 50;
inline constexpr std::size_t kDefaultPulseTrials = 100000;
/// Bins whose shifts have a resultant length below this report no mean.
inline constexpr double kMinResultant = 0.1;

/// Phase at a state; `flagged` marks states without a reliable phase.
using PhaseFn = std::function<LookupResult(std::span<const double>)>;
/// Phase gradient at a state; false where undefined.
using GradientFn = std::function<bool(std::span<const double>, std::span<double>)>;
/// Writes one stationary state into `out`.
using StateSampler = std::function<void(Rng&, std::span<double>)>;

PhaseFn grid_phase_fn(const PhaseLookup& lookup);
GradientFn grid_gradient_fn(const VectorField2D& gradient);

/// P0-weighted isochron average of the phase gradient on the grid.
ResponseCurve aiprc_grid(const VectorField2D& gradient, const PhaseField& field, const RealField& P0,
                         std::size_t n_bins = kDefaultResponseBins);

/// Streaming trajectory estimator: gradients binned by the concurrent phase.
/// The standard error is the ratio-estimator scatter across trajectories.
class AiprcAccumulator {
 public:
  AiprcAccumulator(std::size_t dim, std::size_t n_bins, std::string label);

  void add(const Trajectory& traj, const PhaseFn& phase, const GradientFn& gradient);
  ResponseCurve result() const;
  std::size_t trajectories() const { return n_traj_; }
  std::size_t skipped() const { return skipped_; }

 private:
  std::size_t dim_, n_bins_;
  std::string label_;
  std::size_t n_traj_ = 0, skipped_ = 0;
  // Sums over trajectories of per-trajectory totals s_j, counts n_j and their products.
  std::vector<double> n_, nn_;
  std::vector<std::vector<double>> s_, ss_, sn_;
};

ResponseCurve aiprc_trajectory(const std::vector<Trajectory>& ensemble, const PhaseFn& phase,
                               const GradientFn& gradient, std::size_t n_bins = kDefaultResponseBins,
                               const std::string& label = "trajectory");

struct PulseResult {
  ResponseCurve curve;             // circular mean shift / |eps| per bin
  std::vector<double> mean_shift;  // raw circular mean shift; NaN below kMinResultant
  std::vector<double> shift_error; // circular standard error; inf below kMinResultant
  std::vector<double> resultant;
  std::vector<double> eps;
  std::size_t n_trials = 0;
  std::size_t discarded = 0;       // displaced state without a phase
  std::size_t redrawn = 0;         // draws without a phase before the pulse
};

/// Weak-pulse experiment: stationary draw, phase before and after x -> x + eps,
/// shifts binned by the phase before. Trial t uses child seed (seed, t).
PulseResult pulse_experiment(const StateSampler& sampler, const PhaseFn& phase, const std::vector<double>& eps,
                             std::size_t n_trials, std::uint64_t seed, std::size_t n_bins = kDefaultResponseBins);

/// Stationary draws from P0 on the grid: node by mass, then uniform in its cell.
StateSampler density_sampler(const RealField& P0);
/// Uniformly chosen states of a stationary trajectory.
StateSampler trajectory_sampler(std::shared_ptr<const Trajectory> traj);

/// eps . curve(phi).
double predict_shift(const ResponseCurve& curve, double phi, const std::vector<double>& eps);

/// Coefficient of determination of a least-squares fit c0 + c1 cos + s1 sin.
double single_harmonic_r2(const std::vector<double>& phi, const std::vector<double>& v);

/// |sum v| / sum |v|: 1 for a single-signed curve, near 0 for a sinusoid.
double sign_bias(const std::vector<double>& v);

/// max over bins of the curve magnitude.
double peak_magnitude(const ResponseCurve& curve);

}  // namespace stochphase

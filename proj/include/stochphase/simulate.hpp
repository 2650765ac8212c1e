#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "stochphase/errors.hpp"
#include "stochphase/models.hpp"

namespace stochphase {

using Rng = boost::random::mt19937_64;

/// Counter-based child seed: independent of execution order.
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index);

/// Fraction of the domain hint width added on each side before reflecting.
inline constexpr double kReflectionPad = 0.2;
/// Escape-step fraction above which a run is flagged.
inline constexpr double kEscapeFlagFraction = 1e-3;

struct IntegrationReport {
  std::size_t steps = 0;
  std::size_t reflections = 0;

  double escape_fraction() const {
    return steps == 0 ? 0.0 : static_cast<double>(reflections) / static_cast<double>(steps);
  }
  bool flagged() const { return escape_fraction() > kEscapeFlagFraction; }
  IntegrationReport& operator+=(const IntegrationReport& o) {
    steps += o.steps;
    reflections += o.reflections;
    return *this;
  }
};

/// Euler-Maruyama stepper X <- X + f dt + g sqrt(dt) xi, reflecting at the
/// padded domain hint.
class EulerMaruyama {
 public:
  EulerMaruyama(const SdeModel& model, double dt);

  double dt() const { return dt_; }
  const SdeModel& model() const { return *model_; }

  /// One step in place. Returns true if the state was reflected.
  bool step(std::span<double> x, Rng& rng);

  /// `steps` steps starting at time t0. After each step the observer is called
  /// as obs(step_index, t, x) with step_index counting from 1.
  template <class Observer>
  IntegrationReport run(std::span<double> x, double t0, std::size_t steps, Rng& rng, Observer&& obs) {
    IntegrationReport report;
    for (std::size_t i = 1; i <= steps; ++i) {
      if (step(x, rng)) ++report.reflections;
      for (double v : x) {
        if (!std::isfinite(v)) {
          throw numerical_error("divergence",
                                "non-finite state at step " + std::to_string(i) + " of model " +
                                    model_->name());
        }
      }
      obs(i, t0 + static_cast<double>(i) * dt_, std::span<const double>(x.data(), x.size()));
    }
    report.steps = steps;
    return report;
  }

  IntegrationReport run(std::span<double> x, std::size_t steps, Rng& rng) {
    return run(x, 0.0, steps, rng, [](std::size_t, double, std::span<const double>) {});
  }

 private:
  const SdeModel* model_;
  double dt_;
  double sqrt_dt_;
  Box reflect_;
  std::vector<double> drift_;
  std::vector<double> g_;
  std::vector<double> xi_;
  boost::random::normal_distribution<double> normal_;
};

/// Realization of the SDE sampled at constant step.
struct Trajectory {
  std::size_t dim = 0;
  std::vector<double> times;
  std::vector<double> states;  // row-major, times.size() x dim
  IntegrationReport report;

  std::size_t size() const { return times.size(); }
  std::span<const double> point(std::size_t i) const {
    return {states.data() + i * dim, dim};
  }
};

/// Integrates `steps` steps from x0 and records every state including x0.
Trajectory euler_maruyama(const SdeModel& model, std::span<const double> x0, double dt,
                          std::size_t steps, std::uint64_t seed);

enum class InitKind { Fixed, BoxUniform, Stationary };

struct EnsembleSpec {
  std::size_t n_traj = 1;
  double dt = 1e-3;
  double t_burn = 0.0;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  InitKind init = InitKind::Fixed;
  std::vector<double> point;  // Fixed / Stationary start point
  Box box;                    // BoxUniform sampler
  std::size_t record_stride = 1;

  void validate() const;
  std::size_t burn_steps() const;
  std::size_t record_steps() const;
};

/// Trajectory-level job: seeded generator and the state after burn-in.
struct EnsembleMember {
  std::size_t index = 0;
  Rng rng;
  std::vector<double> state;
  IntegrationReport burn;
};

/// Seeds member `index` and runs its burn-in. Independent of any other member.
EnsembleMember prepare_member(const SdeModel& model, const EnsembleSpec& spec, std::size_t index);

/// Runs the ensemble and hands each recorded trajectory to `sink` in index
/// order. Divergence errors are rethrown with the trajectory index attached.
void ensemble(const SdeModel& model, const EnsembleSpec& spec,
              const std::function<void(std::size_t, Trajectory&&)>& sink);

std::vector<Trajectory> ensemble(const SdeModel& model, const EnsembleSpec& spec);

/// Circular series lifted to the real line.
struct PhaseSeries {
  std::vector<double> times;
  std::vector<double> wrapped;    // in [0, 2pi)
  std::vector<double> unwrapped;  // wrapped = unwrapped mod 2pi
  std::size_t aliasing_steps = 0;  // steps whose circular distance exceeded pi - 0.1

  std::size_t size() const { return wrapped.size(); }
};

double wrap_phase(double phi);
/// Representative of a - b in (-pi, pi].
double circular_difference(double a, double b);

/// Nearest-branch unwrapping; increments are circular differences in (-pi, pi].
PhaseSeries unwrap(std::span<const double> wrapped, std::span<const double> times = {});

/// Box spanned by a burn-in trajectory, padded by `pad` of its width per axis.
Box fit_domain_from_burn_in(const SdeModel& model, std::span<const double> x0, double dt,
                            std::size_t steps, std::uint64_t seed, double pad = 0.15);

}  // namespace stochphase

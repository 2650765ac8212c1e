#include "stochphase/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/random/uniform_real_distribution.hpp>

namespace stochphase {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

EulerMaruyama::EulerMaruyama(const SdeModel& model, double dt)
    : model_(&model),
      dt_(dt),
      sqrt_dt_(std::sqrt(dt)),
      reflect_(model.domain_hint().padded(kReflectionPad)),
      drift_(model.dim()),
      g_(model.dim() * model.noise_dim()),
      xi_(model.noise_dim()) {
  if (!(dt > 0.0)) throw config_error("dt", "time step must be positive");
  if (model.additive_noise()) {
    std::vector<double> x0(model.dim());
    for (std::size_t i = 0; i < model.dim(); ++i)
      x0[i] = 0.5 * (model.domain_hint().lower[i] + model.domain_hint().upper[i]);
    model.diffusion(x0, g_);
  }
}

bool EulerMaruyama::step(std::span<double> x, Rng& rng) {
  const std::size_t n = model_->dim();
  const std::size_t k = model_->noise_dim();
  model_->drift(x, drift_);
  if (!model_->additive_noise()) model_->diffusion(x, g_);
  for (std::size_t j = 0; j < k; ++j) xi_[j] = normal_(rng) * sqrt_dt_;
  for (std::size_t i = 0; i < n; ++i) {
    double noise = 0.0;
    for (std::size_t j = 0; j < k; ++j) noise += g_[i * k + j] * xi_[j];
    x[i] += drift_[i] * dt_ + noise;
  }
  bool reflected = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = reflect_.lower[i], hi = reflect_.upper[i];
    if (x[i] < lo) {
      x[i] = std::min(2.0 * lo - x[i], hi);
      reflected = true;
    } else if (x[i] > hi) {
      x[i] = std::max(2.0 * hi - x[i], lo);
      reflected = true;
    }
  }
  return reflected;
}

Trajectory euler_maruyama(const SdeModel& model, std::span<const double> x0, double dt,
                          std::size_t steps, std::uint64_t seed) {
  if (x0.size() != model.dim()) throw config_error("x0", "initial state dimension mismatch");
  EulerMaruyama em(model, dt);
  Rng rng(seed);
  Trajectory traj;
  traj.dim = model.dim();
  traj.times.reserve(steps + 1);
  traj.states.reserve((steps + 1) * model.dim());
  traj.times.push_back(0.0);
  traj.states.insert(traj.states.end(), x0.begin(), x0.end());
  std::vector<double> x(x0.begin(), x0.end());
  traj.report = em.run(x, 0.0, steps, rng, [&](std::size_t, double t, std::span<const double> s) {
    traj.times.push_back(t);
    traj.states.insert(traj.states.end(), s.begin(), s.end());
  });
  return traj;
}

void EnsembleSpec::validate() const {
  if (n_traj == 0) throw config_error("ensemble", "n_traj must be positive");
  if (!(dt > 0.0)) throw config_error("ensemble", "dt must be positive");
  if (!(t_burn >= 0.0) || !(t_end > t_burn)) throw config_error("ensemble", "need t_end > t_burn >= 0");
  if (dt > t_end) throw config_error("ensemble", "dt must not exceed t_end");
  if (record_stride == 0) throw config_error("ensemble", "record_stride must be positive");
  if (init == InitKind::BoxUniform && box.dim() == 0) throw config_error("ensemble", "box sampler needs a box");
  if (init == InitKind::Stationary && !(t_burn > 0.0))
    throw config_error("ensemble", "stationary init needs a positive burn-in");
}

std::size_t EnsembleSpec::burn_steps() const { return static_cast<std::size_t>(std::llround(t_burn / dt)); }

std::size_t EnsembleSpec::record_steps() const {
  return static_cast<std::size_t>(std::llround((t_end - t_burn) / dt));
}

EnsembleMember prepare_member(const SdeModel& model, const EnsembleSpec& spec, std::size_t index) {
  EnsembleMember m;
  m.index = index;
  m.rng.seed(child_seed(spec.seed, index));
  const std::size_t n = model.dim();
  switch (spec.init) {
    case InitKind::Fixed:
    case InitKind::Stationary:
      if (spec.point.empty()) {
        m.state.resize(n);
        for (std::size_t i = 0; i < n; ++i)
          m.state[i] = 0.5 * (model.domain_hint().lower[i] + model.domain_hint().upper[i]);
      } else {
        if (spec.point.size() != n) throw config_error("ensemble", "init point dimension mismatch");
        m.state = spec.point;
      }
      break;
    case InitKind::BoxUniform: {
      if (spec.box.dim() != n) throw config_error("ensemble", "init box dimension mismatch");
      m.state.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        boost::random::uniform_real_distribution<double> u(spec.box.lower[i], spec.box.upper[i]);
        m.state[i] = u(m.rng);
      }
      break;
    }
  }
  if (spec.burn_steps() > 0) {
    EulerMaruyama em(model, spec.dt);
    m.burn = em.run(m.state, spec.burn_steps(), m.rng);
  }
  return m;
}

void ensemble(const SdeModel& model, const EnsembleSpec& spec,
              const std::function<void(std::size_t, Trajectory&&)>& sink) {
  spec.validate();
  const std::size_t steps = spec.record_steps();
  for (std::size_t j = 0; j < spec.n_traj; ++j) {
    try {
      EnsembleMember m = prepare_member(model, spec, j);
      EulerMaruyama em(model, spec.dt);
      Trajectory traj;
      traj.dim = model.dim();
      const std::size_t samples = steps / spec.record_stride + 1;
      traj.times.reserve(samples);
      traj.states.reserve(samples * traj.dim);
      traj.times.push_back(spec.t_burn);
      traj.states.insert(traj.states.end(), m.state.begin(), m.state.end());
      traj.report = em.run(m.state, spec.t_burn, steps, m.rng,
                           [&](std::size_t i, double t, std::span<const double> s) {
                             if (i % spec.record_stride != 0) return;
                             traj.times.push_back(t);
                             traj.states.insert(traj.states.end(), s.begin(), s.end());
                           });
      traj.report += m.burn;
      sink(j, std::move(traj));
    } catch (const Error& e) {
      throw Error(e.kind(), e.code(), std::string(e.what()) + " (trajectory " + std::to_string(j) + ")");
    }
  }
}

std::vector<Trajectory> ensemble(const SdeModel& model, const EnsembleSpec& spec) {
  std::vector<Trajectory> out;
  out.reserve(spec.n_traj);
  ensemble(model, spec, [&](std::size_t, Trajectory&& t) { out.push_back(std::move(t)); });
  return out;
}

double wrap_phase(double phi) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (phi >= 0.0 && phi < two_pi) return phi;
  double w = phi - two_pi * std::floor(phi / two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w -= two_pi;
  return w;
}

double circular_difference(double a, double b) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double d = std::remainder(a - b, two_pi);  // in [-pi, pi]
  if (d <= -std::numbers::pi) d += two_pi;
  return d;
}

PhaseSeries unwrap(std::span<const double> wrapped, std::span<const double> times) {
  PhaseSeries s;
  s.times.assign(times.begin(), times.end());
  s.wrapped.reserve(wrapped.size());
  s.unwrapped.reserve(wrapped.size());
  // Whole turns are counted as an integer so long series do not accumulate rounding.
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double offset = 0.0;
  long long turns = 0;
  for (std::size_t i = 0; i < wrapped.size(); ++i) {
    s.wrapped.push_back(wrap_phase(wrapped[i]));
    if (i == 0) {
      offset = wrapped[0] - s.wrapped[0];
      s.unwrapped.push_back(wrapped[0]);
      continue;
    }
    const double d = circular_difference(wrapped[i], wrapped[i - 1]);
    if (std::abs(d) >= std::numbers::pi - 0.1) ++s.aliasing_steps;
    turns += std::llround((d - (s.wrapped[i] - s.wrapped[i - 1])) / two_pi);
    s.unwrapped.push_back(offset + s.wrapped[i] + two_pi * static_cast<double>(turns));
  }
  return s;
}

Box fit_domain_from_burn_in(const SdeModel& model, std::span<const double> x0, double dt,
                            std::size_t steps, std::uint64_t seed, double pad) {
  const std::size_t n = model.dim();
  Box box{std::vector<double>(x0.begin(), x0.end()), std::vector<double>(x0.begin(), x0.end())};
  EulerMaruyama em(model, dt);
  Rng rng(seed);
  std::vector<double> x(x0.begin(), x0.end());
  em.run(x, 0.0, steps, rng, [&](std::size_t, double, std::span<const double> s) {
    for (std::size_t i = 0; i < n; ++i) {
      box.lower[i] = std::min(box.lower[i], s[i]);
      box.upper[i] = std::max(box.upper[i], s[i]);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!(box.width(i) > 0.0)) {
      box.lower[i] -= 0.5;
      box.upper[i] += 0.5;
    }
  }
  return box.padded(pad);
}

}  // namespace stochphase

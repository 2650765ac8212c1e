#include "stochphase/reduction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "stochphase/errors.hpp"

namespace stochphase {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Stencil {
  std::size_t i0, i1;
  double f;
};

// Linear interpolation weights between bin centres, with wraparound.
Stencil circular_stencil(std::size_t n, double phi) {
  const double t = wrap_phase(phi) * (static_cast<double>(n) / kTwoPi) - 0.5;
  const double fl = std::floor(t);
  const std::size_t i0 = fl < 0.0 ? n - 1 : std::min(static_cast<std::size_t>(fl), n - 1);
  return {i0, i0 + 1 == n ? 0 : i0 + 1, t - fl};
}

double interp_circular(const std::vector<double>& v, double phi) {
  const Stencil s = circular_stencil(v.size(), phi);
  return (1.0 - s.f) * v[s.i0] + s.f * v[s.i1];
}

std::vector<double> bin_centres(std::size_t n) {
  std::vector<double> c(n);
  for (std::size_t b = 0; b < n; ++b) c[b] = (static_cast<double>(b) + 0.5) * kTwoPi / static_cast<double>(n);
  return c;
}

void hole_check(const std::vector<double>& count, const char* what) {
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (!(count[b] > 0.0)) {
      throw numerical_error("hole", std::string(what) + ": phase bin " + std::to_string(b) +
                                        " is empty; use fewer bins or more data");
    }
  }
}

}  // namespace

std::size_t BinStats::bin_of(double phi) const {
  const auto b = static_cast<std::size_t>(wrap_phase(phi) / kTwoPi * static_cast<double>(n_bins));
  return std::min(b, n_bins - 1);
}

void BinStats::add(double phi, double dphi) {
  const std::size_t b = bin_of(phi);
  sum[b] += dphi;
  sumsq[b] += dphi * dphi;
  ++count[b];
}

void BinStats::merge(const BinStats& other) {
  if (other.n_bins != n_bins) throw config_error("bins", "cannot merge statistics with different bin counts");
  for (std::size_t b = 0; b < n_bins; ++b) {
    sum[b] += other.sum[b];
    sumsq[b] += other.sumsq[b];
    count[b] += other.count[b];
  }
}

std::uint64_t BinStats::total() const {
  std::uint64_t t = 0;
  for (auto c : count) t += c;
  return t;
}

double ReducedPhaseModel::drift_at(double p) const { return interp_circular(a, p); }
double ReducedPhaseModel::diffusion_at(double p) const { return std::max(0.0, interp_circular(D, p)); }

std::size_t ReducedPhaseModel::zero_crossings() const {
  std::size_t n = 0;
  for (std::size_t b = 0; b < a.size(); ++b) {
    const double x = a[b], y = a[(b + 1) % a.size()];
    if ((x < 0.0) != (y < 0.0)) ++n;
  }
  return n;
}

double ReducedPhaseModel::weighted_mean_drift() const {
  double s = 0.0, w = 0.0;
  for (std::size_t b = 0; b < a.size(); ++b) {
    s += count[b] * a[b];
    w += count[b];
  }
  return s / w;
}

PhaseSeries full_phase_series(const Trajectory& traj,
                              const std::function<LookupResult(std::span<const double>)>& phase,
                              std::size_t* flagged) {
  std::vector<double> wrapped(traj.size());
  std::size_t bad = 0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const LookupResult r = phase(traj.point(i));
    if (r.flagged) ++bad;
    wrapped[i] = r.phase;
  }
  if (flagged) *flagged = bad;
  if (static_cast<double>(bad) > kMaxFlaggedFraction * static_cast<double>(traj.size())) {
    throw numerical_error("unreliable_series", std::to_string(bad) + " of " + std::to_string(traj.size()) +
                                                   " samples fell where the phase is undefined");
  }
  return unwrap(wrapped, traj.times);
}

std::function<LookupResult(std::span<const double>)> bridged_lookup(const PhaseLookup& lookup) {
  return [&lookup](std::span<const double> x) {
    const Grid2D& g = *lookup.field().grid;
    if (g.contains(x[0], x[1])) return lookup(x[0], x[1]);
    // Excursions past the grid edge are bridged from the edge and flagged.
    LookupResult r = lookup(std::clamp(x[0], g.x_min, g.x_max), std::clamp(x[1], g.y_min, g.y_max));
    r.flagged = true;
    return r;
  };
}

PhaseSeries full_phase_series(const Trajectory& traj, const PhaseLookup& lookup, std::size_t* flagged) {
  if (traj.dim != 2) throw config_error("dimension", "grid phase lookup needs a planar trajectory");
  return full_phase_series(traj, bridged_lookup(lookup), flagged);
}

void accumulate(BinStats& stats, const PhaseSeries& s) {
  for (std::size_t i = 0; i + 1 < s.size(); ++i) stats.add(s.wrapped[i], s.unwrapped[i + 1] - s.unwrapped[i]);
}

ReducedPhaseModel km_from_stats(const BinStats& stats, double dt, PhaseLabel label) {
  if (!(dt > 0.0)) throw config_error("dt", "sampling step must be positive");
  ReducedPhaseModel m;
  m.label = label;
  m.n_bins = stats.n_bins;
  m.phi = bin_centres(stats.n_bins);
  m.a.resize(stats.n_bins);
  m.D.resize(stats.n_bins);
  m.count.resize(stats.n_bins);
  for (std::size_t b = 0; b < stats.n_bins; ++b) m.count[b] = static_cast<double>(stats.count[b]);
  hole_check(m.count, "km_estimate");
  for (std::size_t b = 0; b < stats.n_bins; ++b) {
    const double n = m.count[b];
    const double mean = stats.sum[b] / n;
    m.a[b] = mean / dt;
    m.D[b] = std::max(0.0, stats.sumsq[b] / n - mean * mean) / (2.0 * dt);
  }
  return m;
}

ReducedPhaseModel km_estimate(const std::vector<PhaseSeries>& series, double dt, std::size_t n_bins,
                              PhaseLabel label) {
  if (n_bins < 2) throw config_error("bins", "need at least 2 bins");
  BinStats stats(n_bins);
  for (const auto& s : series) accumulate(stats, s);
  return km_from_stats(stats, dt, label);
}

ReducedPhaseModel grid_reduce(const SdeModel& model, const PhaseField& field, const RealField& P0,
                              std::size_t n_bins) {
  if (n_bins < 2) throw config_error("bins", "need at least 2 bins");
  if (P0.grid != field.grid && (P0.grid->nx != field.grid->nx || P0.grid->ny != field.grid->ny))
    throw config_error("grid", "phase field and density live on different grids");
  const Grid2D& g = *field.grid;
  const LogGradient lg = log_gradient(field.companion);
  BinStats bins(n_bins);
  std::vector<double> mass(n_bins, 0.0), sa(n_bins, 0.0), sd(n_bins, 0.0);
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!field.is_valid(node) || !lg.valid[node]) continue;
    const double w = P0.values[node] * g.cell_weight(node);
    if (!(w > 0.0)) continue;
    const auto p = g.point(node);
    const Eigen::MatrixXd G = diffusion_tensor(model, p);
    const Eigen::Vector2d dphi(lg.gx.values[node].imag(), lg.gy.values[node].imag());
    double integrand_a;
    if (field.label == PhaseLabel::Asymptotic) {
      const Eigen::Vector2d lnu(lg.gx.values[node].real(), lg.gy.values[node].real());
      integrand_a = field.rate - 2.0 * lnu.dot(G * dphi);
    } else {
      integrand_a = field.rate;
    }
    const std::size_t b = bins.bin_of(field.phase.values[node]);
    mass[b] += w;
    sa[b] += w * integrand_a;
    sd[b] += w * dphi.dot(G * dphi);
  }
  ReducedPhaseModel m;
  m.label = field.label;
  m.n_bins = n_bins;
  m.phi = bin_centres(n_bins);
  m.count = mass;
  hole_check(m.count, "grid_reduce");
  m.a.resize(n_bins);
  m.D.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    m.a[b] = sa[b] / mass[b];
    m.D[b] = sd[b] / mass[b];
  }
  return m;
}

ReducedPhaseModel smooth_periodic(const ReducedPhaseModel& model, int order) {
  const std::size_t n = model.n_bins;
  if (order < 0 || 2 * static_cast<std::size_t>(order) >= n)
    throw config_error("aliasing", "smoothing order must be below n_bins/2");
  hole_check(model.count, "smooth_periodic");
  const auto fit = [&](const std::vector<double>& v) {
    std::vector<double> out(n, 0.0);
    for (int k = 0; k <= order; ++k) {
      double c = 0.0, s = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        c += v[b] * std::cos(k * model.phi[b]);
        s += v[b] * std::sin(k * model.phi[b]);
      }
      const double scale = (k == 0 ? 1.0 : 2.0) / static_cast<double>(n);
      for (std::size_t b = 0; b < n; ++b) out[b] += scale * (c * std::cos(k * model.phi[b]) + s * std::sin(k * model.phi[b]));
    }
    return out;
  };
  ReducedPhaseModel m = model;
  m.a = fit(model.a);
  // The diffusion spans orders of magnitude near a ghost; fitting its square root
  // keeps the truncated series from ringing below zero.
  std::vector<double> root(n);
  for (std::size_t b = 0; b < n; ++b) root[b] = std::sqrt(std::max(model.D[b], 0.0));
  m.D = fit(root);
  for (double& d : m.D) d = std::max(d * d, 1e-12);
  m.smoothing = order;
  return m;
}

namespace {

template <class Observer>
void run_reduced(const ReducedPhaseModel& model, const EnsembleSpec& spec, std::size_t j, Observer&& obs) {
  Rng rng(child_seed(spec.seed, j));
  boost::random::normal_distribution<double> normal;
  double phi = spec.point.empty() ? 0.0 : spec.point[0];
  if (spec.init == InitKind::BoxUniform) {
    const double lo = spec.box.dim() ? spec.box.lower[0] : 0.0, hi = spec.box.dim() ? spec.box.upper[0] : kTwoPi;
    phi = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  }
  const double dt = spec.dt, sdt = std::sqrt(dt);
  const std::size_t n = model.a.size();
  const auto step = [&](std::size_t i) {
    const Stencil s = circular_stencil(n, phi);
    const double a = (1.0 - s.f) * model.a[s.i0] + s.f * model.a[s.i1];
    const double D = std::max(0.0, (1.0 - s.f) * model.D[s.i0] + s.f * model.D[s.i1]);
    phi += a * dt + std::sqrt(2.0 * D) * sdt * normal(rng);
    if (!std::isfinite(phi))
      throw numerical_error("divergence", "non-finite reduced phase at step " + std::to_string(i) + " (trajectory " +
                                              std::to_string(j) + ")");
  };
  const std::size_t burn = spec.burn_steps();
  for (std::size_t i = 1; i <= burn; ++i) step(i);
  obs(0, phi);
  const std::size_t steps = spec.record_steps();
  for (std::size_t i = 1; i <= steps; ++i) {
    step(i);
    obs(i, phi);
  }
}

}  // namespace

std::vector<PhaseSeries> simulate_reduced(const ReducedPhaseModel& model, const EnsembleSpec& spec) {
  spec.validate();
  std::vector<PhaseSeries> out(spec.n_traj);
  for (std::size_t j = 0; j < spec.n_traj; ++j) {
    PhaseSeries& s = out[j];
    run_reduced(model, spec, j, [&](std::size_t i, double phi) {
      if (i % spec.record_stride != 0) return;
      s.times.push_back(spec.t_burn + static_cast<double>(i) * spec.dt);
      s.unwrapped.push_back(phi);
      s.wrapped.push_back(wrap_phase(phi));
    });
  }
  return out;
}

std::vector<double> reduced_displacements(const ReducedPhaseModel& model, const EnsembleSpec& spec) {
  spec.validate();
  if (spec.init == InitKind::BoxUniform) {
    std::vector<double> out(spec.n_traj);
    for (std::size_t j = 0; j < spec.n_traj; ++j) {
      double start = 0.0, end = 0.0;
      run_reduced(model, spec, j, [&](std::size_t i, double phi) {
        if (i == 0) start = phi;
        end = phi;
      });
      out[j] = end - start;
    }
    return out;
  }
  // A single reduced path is one long dependency chain, so several are
  // advanced side by side. Each keeps its own child generator.
  constexpr std::size_t kLanes = 4;
  const std::size_t n = model.a.size();
  const double dt = spec.dt, sdt = std::sqrt(dt);
  const std::size_t burn = spec.burn_steps(), steps = spec.record_steps();
  const double phi0 = spec.point.empty() ? 0.0 : spec.point[0];
  std::vector<double> out(spec.n_traj);
  for (std::size_t j0 = 0; j0 < spec.n_traj; j0 += kLanes) {
    const std::size_t lanes = std::min(kLanes, spec.n_traj - j0);
    std::array<Rng, kLanes> rng;
    std::array<boost::random::normal_distribution<double>, kLanes> normal;
    std::array<double, kLanes> w{}, moved{};
    for (std::size_t l = 0; l < lanes; ++l) {
      rng[l].seed(child_seed(spec.seed, j0 + l));
      w[l] = wrap_phase(phi0);
    }
    for (std::size_t i = 1; i <= burn + steps; ++i) {
      if (i == burn + 1) moved.fill(0.0);
      for (std::size_t l = 0; l < lanes; ++l) {
        const Stencil s = circular_stencil(n, w[l]);
        const double a = (1.0 - s.f) * model.a[s.i0] + s.f * model.a[s.i1];
        const double D = std::max(0.0, (1.0 - s.f) * model.D[s.i0] + s.f * model.D[s.i1]);
        const double inc = a * dt + std::sqrt(2.0 * D) * sdt * normal[l](rng[l]);
        if (!std::isfinite(inc))
          throw numerical_error("divergence", "non-finite reduced phase at step " + std::to_string(i) +
                                                  " (trajectory " + std::to_string(j0 + l) + ")");
        moved[l] += inc;
        double v = w[l] + inc;
        if (v >= kTwoPi) v -= kTwoPi;
        else if (v < 0.0) v += kTwoPi;
        w[l] = v >= 0.0 && v < kTwoPi ? v : wrap_phase(v);
      }
    }
    for (std::size_t l = 0; l < lanes; ++l) out[j0 + l] = moved[l];
  }
  return out;
}

double relative_rms(const std::vector<double>& x, const std::vector<double>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    num += (x[k] - y[k]) * (x[k] - y[k]);
    den += y[k] * y[k];
  }
  return std::sqrt(num / den);
}

}  // namespace stochphase

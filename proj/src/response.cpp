#include "stochphase/response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/random/uniform_real_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "stochphase/errors.hpp"
#include "stochphase/longterm.hpp"

namespace stochphase {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kInf = std::numeric_limits<double>::infinity();
const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t bin_index(double phi, std::size_t n) {
  const auto b = static_cast<std::size_t>(wrap_phase(phi) / kTwoPi * static_cast<double>(n));
  return std::min(b, n - 1);
}

std::vector<double> centres(std::size_t n) {
  std::vector<double> c(n);
  for (std::size_t b = 0; b < n; ++b) c[b] = (static_cast<double>(b) + 0.5) * kTwoPi / static_cast<double>(n);
  return c;
}

void check_bins(std::size_t n) {
  if (n < 2) throw config_error("bins", "need at least 2 bins");
}

ResponseCurve empty_curve(std::size_t dim, std::size_t n, std::string label) {
  ResponseCurve c;
  c.label = std::move(label);
  c.phi = centres(n);
  c.values.assign(dim, std::vector<double>(n, 0.0));
  c.error.assign(dim, std::vector<double>(n, 0.0));
  c.weight.assign(n, 0.0);
  return c;
}

}  // namespace

std::vector<double> ResponseCurve::at(double p) const {
  const std::size_t n = n_bins();
  const double t = wrap_phase(p) / (kTwoPi / static_cast<double>(n)) - 0.5;
  const double fl = std::floor(t);
  const double f = t - fl;
  const long m = static_cast<long>(n);
  const auto i0 = static_cast<std::size_t>((static_cast<long>(fl) % m + m) % m);
  const std::size_t i1 = (i0 + 1) % n;
  std::vector<double> out(dim());
  for (std::size_t c = 0; c < dim(); ++c) out[c] = (1.0 - f) * values[c][i0] + f * values[c][i1];
  return out;
}

PhaseFn grid_phase_fn(const PhaseLookup& lookup) {
  return [&lookup](std::span<const double> x) {
    try {
      return lookup(x[0], x[1]);
    } catch (const Error& e) {
      if (e.code() != "out_of_domain") throw;
      return LookupResult{kNaN, true};
    }
  };
}

GradientFn grid_gradient_fn(const VectorField2D& gradient) {
  return [&gradient](std::span<const double> x, std::span<double> out) {
    return vector_lookup(gradient, x[0], x[1], out[0], out[1]);
  };
}

ResponseCurve aiprc_grid(const VectorField2D& gradient, const PhaseField& field, const RealField& P0,
                         std::size_t n_bins) {
  check_bins(n_bins);
  const Grid2D& g = *field.grid;
  if (gradient.grid->size() != g.size() || P0.grid->size() != g.size())
    throw config_error("grid", "gradient, phase field and density live on different grids");
  ResponseCurve c = empty_curve(2, n_bins, "grid:" + to_string(field.label));
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!field.is_valid(node) || !gradient.valid[node]) continue;
    const double w = P0.values[node] * g.cell_weight(node);
    if (!(w > 0.0)) continue;
    const std::size_t b = bin_index(field.phase.values[node], n_bins);
    c.weight[b] += w;
    c.values[0][b] += w * gradient.x[node];
    c.values[1][b] += w * gradient.y[node];
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (!(c.weight[b] > 0.0))
      throw numerical_error("hole", "aiprc_grid: phase bin " + std::to_string(b) + " is empty; use fewer bins");
    for (auto& comp : c.values) comp[b] /= c.weight[b];
  }
  return c;
}

AiprcAccumulator::AiprcAccumulator(std::size_t dim, std::size_t n_bins, std::string label)
    : dim_(dim),
      n_bins_(n_bins),
      label_(std::move(label)),
      n_(n_bins, 0.0),
      nn_(n_bins, 0.0),
      s_(dim, std::vector<double>(n_bins, 0.0)),
      ss_(dim, std::vector<double>(n_bins, 0.0)),
      sn_(dim, std::vector<double>(n_bins, 0.0)) {
  check_bins(n_bins);
}

void AiprcAccumulator::add(const Trajectory& traj, const PhaseFn& phase, const GradientFn& gradient) {
  if (traj.dim != dim_) throw config_error("dimension", "trajectory dimension does not match the accumulator");
  std::vector<double> cnt(n_bins_, 0.0);
  std::vector<std::vector<double>> sum(dim_, std::vector<double>(n_bins_, 0.0));
  std::vector<double> grad(dim_);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto x = traj.point(i);
    const LookupResult r = phase(x);
    if (r.flagged || !gradient(x, grad)) {
      ++skipped_;
      continue;
    }
    const std::size_t b = bin_index(r.phase, n_bins_);
    cnt[b] += 1.0;
    for (std::size_t c = 0; c < dim_; ++c) sum[c][b] += grad[c];
  }
  for (std::size_t b = 0; b < n_bins_; ++b) {
    n_[b] += cnt[b];
    nn_[b] += cnt[b] * cnt[b];
    for (std::size_t c = 0; c < dim_; ++c) {
      s_[c][b] += sum[c][b];
      ss_[c][b] += sum[c][b] * sum[c][b];
      sn_[c][b] += sum[c][b] * cnt[b];
    }
  }
  ++n_traj_;
}

ResponseCurve AiprcAccumulator::result() const {
  if (n_traj_ < kMinTrajectories)
    throw underpowered_error("underpowered", "aiPRC from trajectories needs at least " +
                                                 std::to_string(kMinTrajectories) + " trajectories, got " +
                                                 std::to_string(n_traj_));
  ResponseCurve c = empty_curve(dim_, n_bins_, label_);
  const double J = static_cast<double>(n_traj_);
  for (std::size_t b = 0; b < n_bins_; ++b) {
    if (!(n_[b] > 0.0))
      throw numerical_error("hole", "aiprc_trajectory: phase bin " + std::to_string(b) + " is empty");
    c.weight[b] = n_[b];
    for (std::size_t k = 0; k < dim_; ++k) {
      const double mu = s_[k][b] / n_[b];
      const double scatter = ss_[k][b] - 2.0 * mu * sn_[k][b] + mu * mu * nn_[b];
      c.values[k][b] = mu;
      c.error[k][b] = std::sqrt(std::max(0.0, scatter) * J / (J - 1.0)) / n_[b];
    }
  }
  return c;
}

ResponseCurve aiprc_trajectory(const std::vector<Trajectory>& ensemble, const PhaseFn& phase,
                               const GradientFn& gradient, std::size_t n_bins, const std::string& label) {
  if (ensemble.empty()) throw underpowered_error("underpowered", "empty ensemble");
  AiprcAccumulator acc(ensemble.front().dim, n_bins, label);
  for (const auto& t : ensemble) acc.add(t, phase, gradient);
  return acc.result();
}

PulseResult pulse_experiment(const StateSampler& sampler, const PhaseFn& phase, const std::vector<double>& eps,
                             std::size_t n_trials, std::uint64_t seed, std::size_t n_bins) {
  check_bins(n_bins);
  if (eps.empty()) throw config_error("eps", "pulse direction is empty");
  if (n_trials == 0) throw config_error("n_trials", "n_trials must be positive");
  const std::size_t dim = eps.size();
  double norm = 0.0;
  for (double e : eps) norm += e * e;
  norm = std::sqrt(norm);

  const auto safe_phase = [&](std::span<const double> x) {
    try {
      return phase(x);
    } catch (const Error& e) {
      if (e.code() != "out_of_domain") throw;
      return LookupResult{kNaN, true};
    }
  };

  PulseResult out;
  out.eps = eps;
  out.n_trials = n_trials;
  std::vector<double> n(n_bins, 0.0), c1(n_bins, 0.0), s1(n_bins, 0.0), c2(n_bins, 0.0), s2(n_bins, 0.0);
  std::vector<double> x(dim), y(dim);
  for (std::size_t t = 0; t < n_trials; ++t) {
    Rng rng(child_seed(seed, t));
    LookupResult before;
    std::size_t attempts = 0;
    for (;;) {
      sampler(rng, x);
      before = safe_phase(x);
      if (!before.flagged) break;
      ++out.redrawn;
      if (++attempts > 1000)
        throw numerical_error("sampler", "stationary sampler keeps landing where the phase is undefined");
    }
    for (std::size_t k = 0; k < dim; ++k) y[k] = x[k] + eps[k];
    const LookupResult after = safe_phase(y);
    if (after.flagged) {
      ++out.discarded;
      continue;
    }
    const double d = circular_difference(after.phase, before.phase);
    const std::size_t b = bin_index(before.phase, n_bins);
    n[b] += 1.0;
    c1[b] += std::cos(d);
    s1[b] += std::sin(d);
    c2[b] += std::cos(2.0 * d);
    s2[b] += std::sin(2.0 * d);
  }

  out.curve = empty_curve(1, n_bins, "pulse");
  out.mean_shift.assign(n_bins, kNaN);
  out.shift_error.assign(n_bins, kInf);
  out.resultant.assign(n_bins, 0.0);
  for (std::size_t b = 0; b < n_bins; ++b) {
    out.curve.weight[b] = n[b];
    if (n[b] < 2.0) {
      out.curve.values[0][b] = kNaN;
      out.curve.error[0][b] = kInf;
      continue;
    }
    const double C = c1[b] / n[b], S = s1[b] / n[b];
    const double R = std::hypot(C, S);
    out.resultant[b] = R;
    if (R < kMinResultant) {
      out.curve.values[0][b] = kNaN;
      out.curve.error[0][b] = kInf;
      continue;
    }
    const double mean = std::atan2(S, C);
    const double R2 = (c2[b] * std::cos(2.0 * mean) + s2[b] * std::sin(2.0 * mean)) / n[b];
    const double delta = std::max(0.0, 1.0 - R2) / (2.0 * R * R);
    out.mean_shift[b] = mean;
    out.shift_error[b] = std::sqrt(delta / n[b]);
    out.curve.values[0][b] = norm > 0.0 ? mean / norm : 0.0;
    out.curve.error[0][b] = norm > 0.0 ? out.shift_error[b] / norm : 0.0;
  }
  return out;
}

StateSampler density_sampler(const RealField& P0) {
  const GridPtr g = P0.grid;
  auto cdf = std::make_shared<std::vector<double>>();
  auto nodes = std::make_shared<std::vector<std::size_t>>();
  double total = 0.0;
  for (std::size_t node = 0; node < g->size(); ++node) {
    const double w = g->is_valid(node) ? std::max(0.0, P0.values[node]) * g->cell_weight(node) : 0.0;
    if (!(w > 0.0)) continue;
    total += w;
    cdf->push_back(total);
    nodes->push_back(node);
  }
  if (nodes->empty()) throw config_error("density", "density has no mass");
  return [g, cdf, nodes, total](Rng& rng, std::span<double> out) {
    boost::random::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(rng) * total;
    const auto k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cdf->begin(), cdf->end(), u) - cdf->begin()), nodes->size() - 1);
    const auto p = g->point((*nodes)[k]);
    const double x = p[0] + (u01(rng) - 0.5) * g->hx();
    const double y = p[1] + (u01(rng) - 0.5) * g->hy();
    out[0] = std::clamp(x, g->x_min, g->x_max);
    out[1] = std::clamp(y, g->y_min, g->y_max);
  };
}

StateSampler trajectory_sampler(std::shared_ptr<const Trajectory> traj) {
  if (!traj || traj->size() == 0) throw config_error("trajectory", "sampler needs a nonempty trajectory");
  return [traj](Rng& rng, std::span<double> out) {
    boost::random::uniform_int_distribution<std::size_t> pick(0, traj->size() - 1);
    const auto x = traj->point(pick(rng));
    std::copy(x.begin(), x.end(), out.begin());
  };
}

double predict_shift(const ResponseCurve& curve, double phi, const std::vector<double>& eps) {
  if (eps.size() != curve.dim()) throw config_error("eps", "pulse dimension does not match the curve");
  const auto v = curve.at(phi);
  double s = 0.0;
  for (std::size_t c = 0; c < eps.size(); ++c) s += eps[c] * v[c];
  return s;
}

double single_harmonic_r2(const std::vector<double>& phi, const std::vector<double>& v) {
  const auto n = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::cos(phi[i]);
    X(i, 2) = std::sin(phi[i]);
    y(i) = v[i];
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  const double ss_res = (y - X * beta).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  return ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
}

double sign_bias(const std::vector<double>& v) {
  double s = 0.0, a = 0.0;
  for (double x : v) {
    s += x;
    a += std::abs(x);
  }
  return a > 0.0 ? std::abs(s) / a : 0.0;
}

double peak_magnitude(const ResponseCurve& curve) {
  double peak = 0.0;
  for (std::size_t b = 0; b < curve.n_bins(); ++b) {
    double m = 0.0;
    for (const auto& comp : curve.values) m += comp[b] * comp[b];
    peak = std::max(peak, std::sqrt(m));
  }
  return peak;
}

}  // namespace stochphase

#include "stochphase/longterm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "stochphase/errors.hpp"

namespace stochphase {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// log((e^x - 1) / x)
double log_expm1_over(double x) {
  if (std::abs(x) < 1e-10) return 0.5 * x;
  if (x > 0) return x + std::log(-std::expm1(-x)) - std::log(x);
  return std::log(-std::expm1(x)) - std::log(-x);
}

double logsumexp(const std::vector<double>& t) {
  const double m = *std::max_element(t.begin(), t.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : t) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

LongTermStats stats_from_displacements(const std::vector<double>& d, double t_window) {
  if (d.size() < kMinTrajectories)
    throw underpowered_error("underpowered", "long-term statistics need at least " +
                                                 std::to_string(kMinTrajectories) + " trajectories, got " +
                                                 std::to_string(d.size()));
  if (!(t_window > 0.0)) throw config_error("t_window", "t_window must be positive");
  const double n = static_cast<double>(d.size());
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : d) {
    const double e = (v - mean) * (v - mean);
    m2 += e;
    m4 += e * e;
  }
  const double var = m2 / (n - 1.0);
  m4 /= n;
  const double pop_var = m2 / n;
  LongTermStats s;
  s.n_traj = d.size();
  s.t_window = t_window;
  s.omega_eff = mean / t_window;
  s.stderr_omega = std::sqrt(var / n) / t_window;
  s.D_eff = var / (2.0 * t_window);
  s.stderr_D = std::sqrt(std::max(0.0, m4 - pop_var * pop_var) / n) / (2.0 * t_window);
  return s;
}

LongTermStats empirical_stats(const std::vector<PhaseSeries>& ensemble, double t_window) {
  std::vector<double> d;
  d.reserve(ensemble.size());
  for (const auto& s : ensemble) {
    if (s.size() < 2 || s.times.size() != s.size())
      throw config_error("series", "series needs at least two timed samples");
    const double t_end = s.times.front() + t_window;
    const double tol = 1e-9 * std::max(1.0, std::abs(t_end));
    const auto it = std::lower_bound(s.times.begin(), s.times.end(), t_end - tol);
    if (it == s.times.end())
      throw config_error("t_window", "series shorter than t_window");
    const auto k = static_cast<std::size_t>(it - s.times.begin());
    d.push_back(s.unwrapped[k] - s.unwrapped[0]);
  }
  return stats_from_displacements(d, t_window);
}

namespace {

LongTermStats analytic_on_mesh(const ReducedPhaseModel& model, std::size_t mesh, Calculus calculus) {
  // Mesh aligned with the bin centres, so the interpolated coefficients are
  // linear on every mesh interval.
  const std::size_t nb = std::max<std::size_t>(model.n_bins, 1);
  const std::size_t M = (mesh + nb - 1) / nb * nb;
  const double h = kTwoPi / static_cast<double>(M);
  const double phi0 = model.n_bins ? model.phi[0] : 0.0;
  std::vector<double> a(M), D(M), logsqrtD(M);
  for (std::size_t k = 0; k < M; ++k) {
    const double phi = phi0 + h * static_cast<double>(k);
    a[k] = model.drift_at(phi);
    D[k] = model.diffusion_at(phi);
  }
  const double dmin = *std::min_element(D.begin(), D.end());
  if (!(dmin >= 1e-8))
    throw numerical_error("stiffness", "phase diffusion falls below 1e-8; the closed-form statistics are not computable");
  for (std::size_t k = 0; k < M; ++k) logsqrtD[k] = 0.5 * std::log(D[k]);

  // V on the mesh, V[M] = V(2 pi). a/D is integrated exactly for linear a and D.
  std::vector<double> V(M + 1, 0.0);
  for (std::size_t k = 0; k < M; ++k) {
    const std::size_t k1 = (k + 1) % M;
    const double a0 = a[k], a1 = a[k1], d0 = D[k], d1 = D[k1];
    const double da = a1 - a0, dd = d1 - d0;
    double mean;
    if (std::abs(dd) < 1e-3 * d0) {
      mean = (a0 / d0 + 4.0 * (0.5 * (a0 + a1)) / (0.5 * (d0 + d1)) + a1 / d1) / 6.0;
    } else {
      mean = da / dd + (a0 - da * d0 / dd) * std::log1p(dd / d0) / dd;
    }
    V[k + 1] = V[k] - h * mean;
  }
  // The Ito drift a becomes a - D'/2, which adds (1/2) ln(D/D(0)) to V.
  if (calculus == Calculus::Ito) {
    for (std::size_t k = 1; k < M; ++k) V[k] += logsqrtD[k] - logsqrtD[0];
  }
  const double V2pi = V[M];
  const auto Vext = [&](long j) {
    const long m = static_cast<long>(M);
    const long q = (j >= 0) ? j / m : -((-j + m - 1) / m);
    return V[static_cast<std::size_t>(j - q * m)] + static_cast<double>(q) * V2pi;
  };
  // Per-interval log factors: exact exponential integral times the mean weight.
  std::vector<double> cplus(M), cminus(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double dv = V[i + 1] - V[i];
    const double lw = std::log(0.5 * (std::exp(-logsqrtD[i]) + std::exp(-logsqrtD[(i + 1) % M])));
    cplus[i] = log_expm1_over(dv) + lw + std::log(h);
    cminus[i] = log_expm1_over(-dv) + lw + std::log(h);
  }
  const auto wrap = [&](long j) {
    const long m = static_cast<long>(M);
    return static_cast<std::size_t>(((j % m) + m) % m);
  };

  // log I+(phi_k) and log I-(phi_k); I- is positive as written in the formula.
  std::vector<double> lip(M), lim(M), terms(M);
  const double logh = std::log(h);
  for (std::size_t k = 0; k < M; ++k) {
    const long kk = static_cast<long>(k);
    const double vk = V[k];
    for (std::size_t s = 0; s < M; ++s) {
      const long j = kk + static_cast<long>(s);
      terms[s] = Vext(j) - vk + cplus[wrap(j)];
    }
    lip[k] = logsumexp(terms);
    for (std::size_t s = 0; s < M; ++s) {
      const long j = kk - static_cast<long>(M) + static_cast<long>(s);
      terms[s] = vk - Vext(j) + cminus[wrap(j)];
    }
    lim[k] = logsumexp(terms);
  }
  // Outer integrals over the periodic mesh (trapezoid = rectangle here).
  std::vector<double> outer1(M), outer2(M);
  for (std::size_t k = 0; k < M; ++k) {
    outer1[k] = lip[k] - logsqrtD[k] + logh;
    outer2[k] = lim[k] + 2.0 * lip[k] - logsqrtD[k] + logh;
  }
  const double L1 = logsumexp(outer1);
  const double L2 = logsumexp(outer2);
  // 1 - e^{V(2pi)} in sign/log form.
  double sign, log_num;
  if (V2pi < 0) {
    sign = 1.0;
    log_num = std::log(-std::expm1(V2pi));
  } else if (V2pi > 0) {
    sign = -1.0;
    log_num = V2pi + std::log(-std::expm1(-V2pi));
  } else {
    sign = 0.0;
    log_num = 0.0;
  }
  LongTermStats s;
  s.omega_eff = sign == 0.0 ? 0.0 : sign * std::exp(std::log(kTwoPi) + log_num - L1);
  s.D_eff = std::exp(std::log(kTwoPi * kTwoPi) + L2 - 3.0 * L1);
  if (!std::isfinite(s.omega_eff) || !std::isfinite(s.D_eff))
    throw numerical_error("stiffness", "closed-form statistics overflowed");
  return s;
}

}  // namespace

LongTermStats analytic_stats(const ReducedPhaseModel& model, std::size_t mesh, Calculus calculus) {
  if (mesh < 16) throw config_error("mesh", "mesh needs at least 16 points");
  // The quadrature error is O(h^2) with kinks only on mesh nodes; one
  // Richardson step removes the leading term.
  const LongTermStats c = analytic_on_mesh(model, mesh, calculus);
  const LongTermStats f = analytic_on_mesh(model, 2 * mesh, calculus);
  LongTermStats s;
  s.omega_eff = (4.0 * f.omega_eff - c.omega_eff) / 3.0;
  s.D_eff = (4.0 * f.D_eff - c.D_eff) / 3.0;
  return s;
}

double z_score(double x, double sx, double y, double sy) {
  const double s = std::sqrt(sx * sx + sy * sy);
  if (s == 0.0) return x == y ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(x - y) / s;
}

}  // namespace stochphase

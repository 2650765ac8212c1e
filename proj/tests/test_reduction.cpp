#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/random/normal_distribution.hpp>

#include "stochphase/pipeline.hpp"

using namespace stochphase;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// dphi = (3.5 + 0.5 sin phi) dt + sqrt(2 * 0.05) dW, integrated directly.
PhaseSeries synthetic_series(std::size_t n, double dt, std::uint64_t seed) {
  Rng rng(seed);
  boost::random::normal_distribution<double> xi;
  std::vector<double> lifted(n);
  double phi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lifted[i] = phi;
    phi += (3.5 + 0.5 * std::sin(phi)) * dt + std::sqrt(2.0 * 0.05 * dt) * xi(rng);
  }
  std::vector<double> wrapped(n);
  for (std::size_t i = 0; i < n; ++i) wrapped[i] = wrap_phase(lifted[i]);
  return unwrap(wrapped);
}

}  // namespace

TEST_CASE("kramers-moyal estimate of a synthetic phase SDE") {
  const double dt = 1e-3;
  const std::vector<PhaseSeries> s{synthetic_series(1'000'000, dt, 1), synthetic_series(1'000'000, dt, 2)};
  const ReducedPhaseModel km = smooth_periodic(km_estimate(s, dt, 50), 4);
  std::vector<double> a_true, d_true;
  for (double p : km.phi) {
    a_true.push_back(3.5 + 0.5 * std::sin(p));
    d_true.push_back(0.05);
  }
  CHECK(relative_rms(km.a, a_true) < 0.05);
  CHECK(relative_rms(km.D, d_true) < 0.05);
  CHECK(km.zero_crossings() == 0);
}

TEST_CASE("bin statistics merge associatively") {
  BinStats a(10), b(10), c(10), all(10);
  for (int i = 0; i < 300; ++i) {
    const double phi = std::fmod(0.37 * i, kTwoPi), d = std::sin(i);
    (i < 100 ? a : i < 200 ? b : c).add(phi, d);
    all.add(phi, d);
  }
  BinStats ab = a;
  ab.merge(b);
  ab.merge(c);
  BinStats bc = b;
  bc.merge(c);
  bc.merge(a);
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(ab.count[k] == all.count[k]);
    CHECK(ab.sum[k] == doctest::Approx(all.sum[k]));
    CHECK(bc.sumsq[k] == doctest::Approx(all.sumsq[k]));
  }
  CHECK(all.total() == 300);
  CHECK(all.bin_of(kTwoPi - 1e-12) == 9);
  CHECK_THROWS_AS(a.merge(BinStats(5)), Error);
}

TEST_CASE("fourier smoothing keeps low harmonics exactly") {
  ReducedPhaseModel m;
  m.n_bins = 64;
  for (std::size_t b = 0; b < 64; ++b) {
    const double p = (b + 0.5) * kTwoPi / 64;
    m.phi.push_back(p);
    m.a.push_back(1.0 + 0.3 * std::cos(2 * p) - 0.2 * std::sin(5 * p) + 0.1 * std::cos(20 * p));
    m.D.push_back(std::pow(0.3 + 0.05 * std::sin(p), 2));
    m.count.push_back(1.0);
  }
  const ReducedPhaseModel s = smooth_periodic(m, 8);
  for (std::size_t b = 0; b < 64; ++b) {
    CHECK(s.a[b] == doctest::Approx(m.a[b] - 0.1 * std::cos(20 * m.phi[b])).epsilon(1e-12));
    CHECK(s.D[b] == doctest::Approx(m.D[b]).epsilon(1e-12));
  }
  CHECK(s.weighted_mean_drift() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.drift_at(m.phi[3]) == doctest::Approx(s.a[3]));
  CHECK_THROWS_AS(smooth_periodic(m, 32), Error);
  // A narrow trough three decades deep stays positive after truncation.
  for (std::size_t b = 0; b < 64; ++b) m.D[b] = 1e-3 + std::exp(-8.0 * (1.0 + std::cos(m.phi[b])));
  const ReducedPhaseModel t = smooth_periodic(m, 8);
  CHECK(*std::min_element(t.D.begin(), t.D.end()) > 1e-8);
  m.a.assign(64, 0.0);
  for (std::size_t b = 0; b < 64; ++b) m.a[b] = 0.5 + std::sin(m.phi[b]);
  CHECK(m.zero_crossings() == 2);
}

TEST_CASE("empty bins are holes") {
  BinStats s(8);
  for (int i = 0; i < 50; ++i) s.add(0.1, 0.01);
  CHECK_THROWS_AS(km_from_stats(s, 0.01, PhaseLabel::Asymptotic), Error);
}

TEST_CASE("grid reduction of the hopf oscillator") {
  PlanarOptions o;
  o.n = 101;
  const SdeModel m = hopf_model({1.0, 0.5, 4.0, 1.0, 0.02});
  const PlanarAnalysis a = analyze_planar(m, o);
  for (PhaseLabel l : {PhaseLabel::Asymptotic, PhaseLabel::Mrt}) {
    const ReducedPhaseModel r = smooth_periodic(grid_reduce(m, a.field(l), a.P0, 50), 8);
    double lo = 1e9, hi = -1e9;
    for (double v : r.a) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK((hi - lo) / r.weighted_mean_drift() < 0.05);
    // The mean drift is the mean rotation rate.
    CHECK(r.weighted_mean_drift() == doctest::Approx(a.circ.rate()).epsilon(0.02));
  }
  const ReducedPhaseModel mrt = grid_reduce(m, a.field(PhaseLabel::Mrt), a.P0, 50);
  for (double v : mrt.a) CHECK(v == doctest::Approx(kTwoPi / a.mrt->Tbar));
}

TEST_CASE("reduced displacements of a constant model") {
  ReducedPhaseModel m;
  m.n_bins = 10;
  for (std::size_t b = 0; b < 10; ++b) {
    m.phi.push_back((b + 0.5) * kTwoPi / 10);
    m.a.push_back(2.0);
    m.D.push_back(0.1);
    m.count.push_back(1);
  }
  EnsembleSpec s;
  s.n_traj = 2000;
  s.dt = 0.01;
  s.t_end = 10.0;
  s.seed = 4;
  const std::vector<double> d = reduced_displacements(m, s);
  double mean = 0.0, sq = 0.0;
  for (double v : d) mean += v;
  mean /= 2000;
  for (double v : d) sq += (v - mean) * (v - mean);
  const double var = sq / 1999;
  CHECK(std::abs(mean - 20.0) < 4 * std::sqrt(2.0 / 2000));
  CHECK(std::abs(var / 2.0 - 1.0) < 4 * std::sqrt(2.0 / 2000));
}

TEST_CASE("relative rms") {
  CHECK(relative_rms({1.0, 1.0}, {1.0, 1.0}) == 0.0);
  CHECK(relative_rms({1.1, 0.9}, {1.0, 1.0}) == doctest::Approx(0.1));
}

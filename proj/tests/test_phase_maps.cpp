#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stochphase/pipeline.hpp"

using namespace stochphase;

namespace {

const PlanarAnalysis& hopf_analysis() {
  static const PlanarAnalysis a = [] {
    PlanarOptions o;
    o.n = 121;
    return analyze_planar(hopf_model({1.0, 0.5, 4.0, 1.0, 0.01}), o);
  }();
  return a;
}

}  // namespace

TEST_CASE("asymptotic phase follows the deterministic isochrons at weak noise") {
  const PlanarAnalysis& a = hopf_analysis();
  const HopfParams hp{1.0, 0.5, 4.0, 1.0, 0.01};
  std::vector<double> psi, det;
  for (std::size_t k = 0; k < a.grid->size(); ++k) {
    const auto p = a.grid->point(k);
    const double r = std::hypot(p[0], p[1]);
    if (r < 0.5 || r > 1.5 || !a.psi.psi.is_valid(k)) continue;
    psi.push_back(a.psi.psi.phase[k]);
    det.push_back(deterministic_hopf_phase(p, hp));
  }
  CHECK(circular_correlation(psi, det) > 0.999);
  CHECK(phase_lookup(a.psi.psi, a.x_ref[0], a.x_ref[1]) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("mean return time phase") {
  const PlanarAnalysis& a = hopf_analysis();
  REQUIRE(a.mrt);
  // Mean period equals one over the circulating flux.
  CHECK(a.mrt->Tbar == doctest::Approx(1.0 / a.circ.flux).epsilon(0.01));
  CHECK(a.mrt->residual < 1e-8);
  CHECK(mrt_generator_residual(a.backward, *a.mrt) < 1e-6 * (2 * std::numbers::pi / a.mrt->Tbar));
  const MrtSolution rotated = mrt_solve(hopf_model({1.0, 0.5, 4.0, 1.0, 0.01}), a.backward, Cut{a.circ.core, 2.0});
  CHECK(rotated.Tbar == doctest::Approx(a.mrt->Tbar).epsilon(0.005));
  std::vector<double> t1, t2;
  const PhaseField th2 = mrt_phase(rotated, a.x_ref);
  for (std::size_t k = 0; k < a.grid->size(); ++k) {
    if (!a.theta->is_valid(k) || !th2.is_valid(k) || a.P0[k] < 1e-3) continue;
    t1.push_back(a.theta->phase[k]);
    t2.push_back(th2.phase[k]);
  }
  CHECK(circular_correlation(t1, t2) > 0.999);
}

TEST_CASE("degenerate noise refuses the MRT phase") {
  const SdeModel m = hopf_model({1.0, 0.5, 4.0, 1.0, 0.0});
  CHECK_FALSE(strongly_elliptic(m));
  try {
    analyze_planar(m, {});
    FAIL("degenerate model accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Underpowered);
    CHECK(e.code() == "not_elliptic");
  }
}

TEST_CASE("phase gradient of the asymptotic phase") {
  const PlanarAnalysis& a = hopf_analysis();
  const VectorField2D g = phase_gradient(a.psi.psi);
  // On the cycle r = 1 the deterministic gradient is (-y, x) - (beta/kappa)(x, y).
  double worst = 0.0;
  for (double th = 0.1; th < 6.2; th += 0.3) {
    const double x = std::cos(th), y = std::sin(th);
    double gx, gy;
    REQUIRE(vector_lookup(g, x, y, gx, gy));
    worst = std::max(worst, std::hypot(gx - (-y - 0.5 * x), gy - (x - 0.5 * y)));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("lookups interpolate the companion") {
  const PlanarAnalysis& a = hopf_analysis();
  const PhaseLookup lookup(a.psi.psi);
  const std::size_t node = a.grid->index(80, 60);
  const auto p = a.grid->point(node);
  CHECK(lookup(p[0], p[1]).phase == doctest::Approx(a.psi.psi.phase[node]).epsilon(1e-12));
  CHECK_THROWS_AS(lookup(10.0, 0.0), Error);
  const auto bridged = bridged_lookup(lookup);
  const double far[2] = {10.0, 0.0};
  CHECK(bridged(far).flagged);
}

TEST_CASE("circular correlation is rotation invariant") {
  const std::vector<double> a{0.1, 1.0, 2.0, 4.0};
  std::vector<double> b;
  for (double v : a) b.push_back(wrap_phase(v + 1.3));
  CHECK(circular_correlation(a, b) == doctest::Approx(1.0));
  const std::vector<double> c{0.0, std::numbers::pi, 0.0, std::numbers::pi};
  CHECK(circular_correlation(std::vector<double>(4, 0.0), c) == doctest::Approx(0.0).epsilon(1e-12));
}

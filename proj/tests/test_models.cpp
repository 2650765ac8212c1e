#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stochphase/errors.hpp"
#include "stochphase/models.hpp"

using namespace stochphase;

namespace {

// Polar velocity (r', theta') from a planar drift.
std::array<double, 2> polar_rates(const SdeModel& m, double r, double th) {
  const double x[2] = {r * std::cos(th), r * std::sin(th)};
  double f[2];
  m.drift(x, f);
  const double rdot = (x[0] * f[0] + x[1] * f[1]) / r;
  const double thdot = (x[0] * f[1] - x[1] * f[0]) / (r * r);
  return {rdot, thdot};
}

}  // namespace

TEST_CASE("hopf normal form in polar coordinates") {
  const HopfParams p{0.7, 0.5, 4.0, 1.3, 0.02};
  const SdeModel m = hopf_model(p);
  for (double r : {0.3, 1.0, 1.7}) {
    for (double th : {0.0, 1.1, 4.0}) {
      const auto [rd, td] = polar_rates(m, r, th);
      CHECK(rd == doctest::Approx(p.delta * r - p.kappa * r * r * r).epsilon(1e-12));
      CHECK(td == doctest::Approx(p.gamma - p.beta * r * r).epsilon(1e-12));
    }
  }
  CHECK(p.cycle_radius() == doctest::Approx(std::sqrt(0.7 / 1.3)));
  const double x[2] = {0.4, -0.2};
  const Eigen::MatrixXd G = diffusion_tensor(m, x);
  CHECK(G(0, 0) == doctest::Approx(0.02));
  CHECK(G(1, 1) == doctest::Approx(0.02));
  CHECK(G(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("snic angular dynamics m - sin theta") {
  const SnicParams p{1.03, 1.0, 0.01};
  const SdeModel m = snic_model(p);
  for (double th : {0.0, 0.5, 1.5707963, 3.0, 5.0}) {
    const auto [rd, td] = polar_rates(m, 0.8, th);
    CHECK(rd == doctest::Approx(0.8 - 0.8 * 0.8 * 0.8).epsilon(1e-12));
    CHECK(td == doctest::Approx(1.03 - std::sin(th)).epsilon(1e-12));
  }
  const double origin[2] = {0.0, 0.0};
  CHECK(m.is_singular(origin));
  double out[2];
  CHECK_THROWS_AS(m.drift(origin, out), Error);
}

TEST_CASE("morris-lecar gating functions and current balance") {
  const MorrisLecarParams p;
  CHECK(p.m_inf(p.beta_m) == doctest::Approx(0.5));
  CHECK(p.Y_inf(p.beta_Y) == doctest::Approx(0.5));
  CHECK(p.tau_Y(p.beta_Y) == doctest::Approx(1.0));
  CHECK(p.tau_Z(p.beta_Z + 2.0 * p.gamma_Z) == doctest::Approx(1.0 / std::cosh(1.0)));

  const Box box{{-100, 0, 0}, {60, 1, 1}};
  const SdeModel m = morris_lecar_model(p, box);
  const double x[3] = {-40.0, 0.2, 0.3};
  double f[3];
  m.drift(x, f);
  // Written out with the default constants.
  const double minf = 0.5 * (1 + std::tanh((-40.0 + 1.2) / 18.0));
  const double I = 20 * minf * (-90.0) + 20 * 0.2 * 60.0 + 2 * 0.3 * (-90.0) + 2 * 30.0;
  CHECK(f[0] == doctest::Approx(29.0 - I));
  const double yinf = 0.5 * (1 + std::tanh(-30.0 / 10.0));
  CHECK(f[1] == doctest::Approx(0.15 * (yinf - 0.2) * std::cosh(-30.0 / 20.0)));
  double g[3];
  m.diffusion(x, g);
  CHECK(g[0] == doctest::Approx(std::sqrt(40.0)));
  CHECK(g[1] == 0.0);
}

TEST_CASE("model registry") {
  const SdeModel m = make_model("hopf", {{"delta", -0.01}, {"D", 0.08}});
  CHECK(m.params().at("delta") == -0.01);
  CHECK(m.params().at("beta") == 0.5);
  CHECK(m.dim() == 2);
  const auto names = model_parameter_names("snic");
  CHECK(std::find(names.begin(), names.end(), "m") != names.end());
  try {
    make_model("hopf", {{"mu", 1.0}});
    FAIL("unknown parameter accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(e.code() == "unknown_parameter");
  }
  CHECK_THROWS_AS(make_model("vdp", {}), Error);
  CHECK_THROWS_AS(make_model("snic", {{"D", -1.0}}), Error);
}

TEST_CASE("box helpers") {
  const Box b{{-1, 0}, {1, 4}};
  const Box p = b.padded(0.1);
  CHECK(p.lower[0] == doctest::Approx(-1.2));
  CHECK(p.upper[1] == doctest::Approx(4.4));
  CHECK(b.volume() == doctest::Approx(8.0));
  const double in[2] = {0.0, 2.0}, out[2] = {0.0, 5.0};
  CHECK(b.contains(in));
  CHECK_FALSE(b.contains(out));
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/random/uniform_real_distribution.hpp>

#include "stochphase/operator.hpp"
#include "stochphase/simulate.hpp"

using namespace stochphase;

namespace {

SdeModel ou2d(double D) {
  const double s = std::sqrt(2.0 * D);
  return SdeModel(
      "ou2", 2, 2,
      [](std::span<const double> x, std::span<double> o) {
        o[0] = -x[0];
        o[1] = -2.0 * x[1];
      },
      [s](std::span<const double>, std::span<double> o) {
        o[0] = s;
        o[1] = 0.0;
        o[2] = 0.0;
        o[3] = s;
      },
      Box{{-2.5, -2.5}, {2.5, 2.5}}, {}, true);
}

RealField sample_field(GridPtr g, double (*f)(double, double)) {
  RealField r(g, 0.0);
  for (std::size_t k = 0; k < g->size(); ++k) {
    const auto p = g->point(k);
    r[k] = f(p[0], p[1]);
  }
  return r;
}

}  // namespace

TEST_CASE("forward operator is the weighted adjoint") {
  const SdeModel m = hopf_model({});
  const GridPtr g = Grid2D::create(m.domain_hint(), 41, 41, &m);
  const SparseOperator B = assemble_backward(m, g);
  const SparseOperator F = assemble_forward(B);
  Rng rng(3);
  boost::random::uniform_real_distribution<double> u(-1, 1);
  Eigen::VectorXd a(B.size()), b(B.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a(i) = u(rng);
    b(i) = u(rng);
  }
  const double lhs = weighted_inner(B.matrix * a, b, B.weights);
  const double rhs = weighted_inner(a, F.matrix * b, B.weights);
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
}

TEST_CASE("backward operator is exact on quadratics in the interior") {
  const SdeModel m = hopf_model({1.0, 0.5, 4.0, 1.0, 0.05});
  const GridPtr g = Grid2D::create(m.domain_hint(), 51, 51, &m);
  const SparseOperator B = assemble_backward(m, g);
  // L(x^2) = 2 x f_x + 2 G_xx with G_xx = D.
  const RealField q = sample_field(g, [](double x, double) { return x * x; });
  const Eigen::VectorXd Lq = B.matrix * B.restrict(q);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < B.size(); ++k) {
    const std::size_t node = static_cast<std::size_t>(B.node_of[k]);
    const std::size_t i = node % g->nx, j = node / g->nx;
    if (i == 0 || j == 0 || i + 1 == g->nx || j + 1 == g->ny) continue;
    const auto p = g->point(node);
    double f[2];
    m.drift(p, f);
    worst = std::max(worst, std::abs(Lq(k) - (2.0 * p[0] * f[0] + 2.0 * 0.05)));
  }
  CHECK(worst < 1e-9);
  // Constants lie in the kernel, boundary rows included.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(B.size());
  CHECK((B.matrix * ones).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("stationary density of a linear diffusion") {
  const double D = 0.2;
  const SdeModel m = ou2d(D);
  const GridPtr g = Grid2D::create(m.domain_hint(), 81, 81, &m);
  const SparseOperator F = assemble_forward(m, g);
  StationaryReport rep;
  const RealField P = stationary_density(F, &rep);
  CHECK(integrate(P) == doctest::Approx(1.0).epsilon(1e-12));
  double l1 = 0.0, mass = 0.0;
  // Gaussian with variances D and D/2.
  const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(D * D / 2.0));
  for (std::size_t k = 0; k < g->size(); ++k) {
    CHECK(P[k] >= 0.0);
    const auto p = g->point(k);
    const double exact = norm * std::exp(-p[0] * p[0] / (2 * D) - p[1] * p[1] / D);
    l1 += std::abs(P[k] - exact) * g->cell_weight(k);
    mass += exact * g->cell_weight(k);
  }
  CHECK(l1 / mass < 0.01);
  // Detailed balance: no circulation.
  const CurrentField J = stationary_current(m, P);
  double jmax = 0.0;
  for (double v : J.flux_x) jmax = std::max(jmax, std::abs(v));
  CHECK(jmax < 1e-8);
}

TEST_CASE("hopf stationary density and mean rotation") {
  const HopfParams hp{1.0, 0.5, 4.0, 1.0, 0.1};
  const SdeModel m = hopf_model(hp);
  const GridPtr g = Grid2D::create(m.domain_hint(), 101, 101, &m);
  const SparseOperator B = assemble_backward(m, g);
  const SparseOperator F = assemble_forward(B);
  const RealField P = stationary_density(F);
  // Radial Gibbs density exp((delta r^2/2 - kappa r^4/4)/D); the rotation is divergence free.
  const auto U = [&](double r) { return (hp.delta * r * r / 2 - hp.kappa * r * r * r * r / 4) / hp.D; };
  double Z = 0.0, r2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * 3.0 / n;
    const double w = std::exp(U(r)) * r * 3.0 / n;
    Z += w;
    r2 += w * r * r;
  }
  r2 /= Z;
  double l1 = 0.0;
  for (std::size_t k = 0; k < g->size(); ++k) {
    const auto p = g->point(k);
    const double r = std::hypot(p[0], p[1]);
    l1 += std::abs(P[k] - std::exp(U(r)) / (2 * std::numbers::pi * Z)) * g->cell_weight(k);
  }
  CHECK(l1 < 0.01);
  // Mean angular velocity gamma - beta <r^2> equals 2 pi times the circulating flux.
  const Circulation c = circulation(stationary_current(B, P));
  CHECK(c.orientation == 1);
  CHECK(c.rate() == doctest::Approx(hp.gamma - hp.beta * r2).epsilon(0.01));
  CHECK(std::hypot(c.core[0], c.core[1]) < 0.1);
}

TEST_CASE("masked nodes and digests") {
  const SdeModel m = snic_model({});
  const GridPtr g = Grid2D::create(m.domain_hint(), 51, 51, &m);
  std::size_t masked = 0;
  for (std::size_t k = 0; k < g->size(); ++k) masked += !g->is_valid(k);
  CHECK(masked == 1);
  const SparseOperator B = assemble_backward(m, g);
  CHECK(static_cast<std::size_t>(B.size()) == g->size() - 1);
  CHECK(g->mask_digest() == Grid2D::create(m.domain_hint(), 51, 51, &m)->mask_digest());
  CHECK(g->mask_digest() != Grid2D::create(m.domain_hint(), 50, 50, &m)->mask_digest());
}

TEST_CASE("peclet upwinding refuses coarse grids") {
  const SdeModel m = hopf_model({1.0, 0.5, 4.0, 1.0, 1e-4});
  const GridPtr g = Grid2D::create(m.domain_hint(), 21, 21, &m);
  AssemblyOptions o;
  o.scheme = DifferenceScheme::PecletUpwind;
  try {
    assemble_backward(m, g, o);
    FAIL("coarse grid accepted");
  } catch (const Error& e) {
    CHECK(e.code() == "resolution");
  }
}

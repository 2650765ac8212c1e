#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "stochphase/operator.hpp"
#include "stochphase/spectrum.hpp"

using namespace stochphase;

namespace {

// Block diagonal with 2x2 blocks [[a, -b], [b, a]]: eigenvalues a +- i b.
SparseMatrix rotation_blocks(std::size_t blocks) {
  SparseMatrix A(2 * blocks, 2 * blocks);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t k = 0; k < blocks; ++k) {
    const double a = -0.01 * static_cast<double>(k + 1), b = 1.0 + 0.1 * static_cast<double>(k);
    const int i = static_cast<int>(2 * k);
    t.emplace_back(i, i, a);
    t.emplace_back(i, i + 1, -b);
    t.emplace_back(i + 1, i, b);
    t.emplace_back(i + 1, i + 1, a);
  }
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

void check_blocks(std::size_t blocks) {
  const SparseMatrix A = rotation_blocks(blocks);
  const EigenPairs e = eigs_near(A, cd(0.0, 1.21), 3);
  REQUIRE(e.values.size() == 3);
  CHECK(std::abs(e.values[0] - cd(-0.03, 1.2)) < 1e-9);
  for (std::size_t i = 0; i < 3; ++i) {
    const Eigen::VectorXcd r = A.cast<cd>() * e.vectors[i] - e.values[i] * e.vectors[i];
    CHECK(r.norm() < 1e-8);
  }
}

}  // namespace

TEST_CASE("shift-invert eigenpairs, dense and Arnoldi paths") {
  check_blocks(200);
  check_blocks(1500);
}

TEST_CASE("hopf slowest mode against the weak-noise phase diffusion") {
  const HopfParams hp{1.0, 0.5, 4.0, 1.0, 0.01};
  const SdeModel m = hopf_model(hp);
  const GridPtr g = Grid2D::create(m.domain_hint(), 121, 121, &m);
  const SparseOperator B = assemble_backward(m, g);
  const SparseOperator F = assemble_forward(B);
  const SpectralPair p = slowest_mode(B, F, 3.5);
  // Re lambda_1 ~ -D (1 + beta^2/kappa^2) / R^2 and Im ~ gamma - beta delta / kappa for weak noise.
  CHECK(p.lambda.real() == doctest::Approx(-0.0125).epsilon(0.05));
  CHECK(p.lambda.imag() == doctest::Approx(3.5).epsilon(0.005));

  // Normalisation and biorthogonality with the stationary and conjugate pairs.
  double qmax = 0.0;
  for (const cd& q : p.Q.values) qmax = std::max(qmax, std::abs(q));
  CHECK(qmax == doctest::Approx(1.0));
  CHECK(std::abs(p.Q[p.ref_node].imag()) < 1e-12);
  CHECK(p.Q[p.ref_node].real() > 0.0);
  const RealField P0 = stationary_density(F);
  CHECK(biorthogonality_check({stationary_pair(B, P0), p, p.conjugate()}) < 1e-6);

  const auto spec = leading_spectrum(B, 9, 3.5);
  CHECK(std::abs(spec[0]) < 1e-8);
  for (const cd& z : spec) {
    if (std::abs(z.imag()) < 1e-9) continue;
    const auto it = std::find_if(spec.begin(), spec.end(), [&](cd w) { return std::abs(w - std::conj(z)) < 1e-8; });
    CHECK(it != spec.end());
  }
  const RobustnessReport rep = robustly_oscillatory_check(spec);
  CHECK(rep.verdict);
  CHECK(rep.q_factor > 100.0);
}

TEST_CASE("robustness check on a hand spectrum") {
  const std::vector<cd> good{0.0, cd(-0.1, 3.0), cd(-0.1, -3.0), -1.0, cd(-1.2, 6.0), cd(-1.2, -6.0)};
  CHECK(robustly_oscillatory_check(good).verdict);
  const std::vector<cd> low_q{0.0, cd(-1.0, 3.0), cd(-1.0, -3.0), -5.0};
  const RobustnessReport r = robustly_oscillatory_check(low_q);
  CHECK_FALSE(r.verdict);
  CHECK_FALSE(r.failing.empty());
  CHECK(r.q_factor == doctest::Approx(3.0));
  const std::vector<cd> no_gap{0.0, cd(-0.1, 3.0), cd(-0.1, -3.0), -0.15};
  CHECK_FALSE(robustly_oscillatory_check(no_gap).verdict);
}

TEST_CASE("inverse iteration recovers a known vector") {
  const SparseMatrix A = rotation_blocks(50);
  const Eigen::VectorXcd v = inverse_iteration(A, cd(-0.05, 1.4 + 1e-7));
  const Eigen::VectorXcd r = A.cast<cd>() * v - cd(-0.05, 1.4) * v;
  CHECK(r.norm() < 1e-6 * v.norm());
}

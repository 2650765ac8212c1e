#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stochphase/simulate.hpp"

using namespace stochphase;

namespace {

SdeModel ou1d(double theta, double sigma) {
  return SdeModel(
      "ou", 1, 1, [theta](std::span<const double> x, std::span<double> o) { o[0] = -theta * x[0]; },
      [sigma](std::span<const double>, std::span<double> o) { o[0] = sigma; }, Box{{-5}, {5}}, {}, true);
}

}  // namespace

TEST_CASE("euler-maruyama ensemble matches OU transition moments") {
  const double theta = 1.5, sigma = 0.6, t = 1.0;
  const SdeModel m = ou1d(theta, sigma);
  EnsembleSpec s;
  s.n_traj = 4000;
  s.dt = 1e-3;
  s.t_end = t;
  s.seed = 7;
  s.point = {1.0};
  s.record_stride = 1000;
  double sum = 0.0, sq = 0.0;
  ensemble(m, s, [&](std::size_t, Trajectory&& tr) {
    const double x = tr.point(tr.size() - 1)[0];
    sum += x;
    sq += x * x;
  });
  const double n = static_cast<double>(s.n_traj);
  const double mean = sum / n, var = sq / n - mean * mean;
  const double exact_mean = std::exp(-theta * t);
  const double exact_var = sigma * sigma / (2 * theta) * (1 - std::exp(-2 * theta * t));
  CHECK(std::abs(mean - exact_mean) < 4.0 * std::sqrt(exact_var / n) + 2e-3);
  CHECK(std::abs(var / exact_var - 1.0) < 4.0 * std::sqrt(2.0 / n) + 5e-3);
}

TEST_CASE("ensemble members are independent of execution order") {
  const SdeModel m = ou1d(1.0, 0.5);
  EnsembleSpec s;
  s.n_traj = 5;
  s.dt = 0.01;
  s.t_end = 0.5;
  s.seed = 99;
  s.point = {0.2};
  const auto all = ensemble(m, s);
  s.n_traj = 3;
  const auto few = ensemble(m, s);
  for (std::size_t j = 0; j < 3; ++j) CHECK(all[j].states == few[j].states);
  CHECK(all[0].states != all[1].states);
  CHECK(all[0].size() == 51);
  CHECK(child_seed(1, 2) == child_seed(1, 2));
  CHECK(child_seed(1, 2) != child_seed(2, 1));
}

TEST_CASE("record stride and times") {
  const SdeModel m = ou1d(1.0, 0.5);
  EnsembleSpec s;
  s.dt = 0.01;
  s.t_burn = 0.2;
  s.t_end = 1.2;
  s.record_stride = 10;
  s.init = InitKind::Stationary;
  s.point = {0.0};
  const auto tr = ensemble(m, s).front();
  REQUIRE(tr.size() == 11);
  CHECK(tr.times.front() == doctest::Approx(0.2));
  CHECK(tr.times.back() == doctest::Approx(1.2));
}

TEST_CASE("reflection keeps states in the padded box") {
  const SdeModel m(
      "drift", 1, 1, [](std::span<const double>, std::span<double> o) { o[0] = 50.0; },
      [](std::span<const double>, std::span<double> o) { o[0] = 0.1; }, Box{{-1}, {1}}, {}, true);
  const double x0[1] = {0.0};
  const Trajectory tr = euler_maruyama(m, x0, 0.01, 200, 3);
  for (double v : tr.states) CHECK(v <= 1.4 + 1e-12);
  CHECK(tr.report.reflections > 0);
  CHECK(tr.report.flagged());
}

TEST_CASE("divergence is reported") {
  const SdeModel m(
      "blowup", 1, 1, [](std::span<const double> x, std::span<double> o) { o[0] = x[0] * x[0] * 1e300; },
      [](std::span<const double>, std::span<double> o) { o[0] = 0.0; }, Box{{-1e308}, {1e308}}, {}, true);
  const double x0[1] = {1e10};
  try {
    euler_maruyama(m, x0, 1.0, 10, 1);
    FAIL("no divergence error");
  } catch (const Error& e) {
    CHECK(e.code() == "divergence");
  }
}

TEST_CASE("unwrap round trip") {
  std::vector<double> lifted, wrapped;
  double phi = 0.3;
  for (int i = 0; i < 500; ++i) {
    phi += 0.2 + 0.5 * std::sin(0.1 * i);
    lifted.push_back(phi);
    wrapped.push_back(wrap_phase(phi));
  }
  const PhaseSeries s = unwrap(wrapped);
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    CHECK(s.unwrapped[i] - s.unwrapped[0] == doctest::Approx(lifted[i] - lifted[0]).epsilon(1e-12));
    CHECK(wrap_phase(s.unwrapped[i]) == doctest::Approx(s.wrapped[i]).epsilon(1e-12));
  }
  CHECK(s.aliasing_steps == 0);
  CHECK(circular_difference(0.1, 2 * std::numbers::pi - 0.1) == doctest::Approx(0.2));
  CHECK(wrap_phase(-0.5) == doctest::Approx(2 * std::numbers::pi - 0.5));
}

TEST_CASE("burn-in domain fit covers the trajectory") {
  const SdeModel m = ou1d(1.0, 1.0);
  const double x0[1] = {0.0};
  const Box b = fit_domain_from_burn_in(m, x0, 0.01, 20000, 5);
  CHECK(b.lower[0] < -1.5);
  CHECK(b.upper[0] > 1.5);
}

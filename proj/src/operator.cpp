#include "stochphase/operator.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "stochphase/errors.hpp"
#include "stochphase/spectrum.hpp"

namespace stochphase {

Eigen::VectorXd SparseOperator::restrict(const RealField& f) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(node_of.size()));
  for (std::size_t u = 0; u < node_of.size(); ++u) v[static_cast<Eigen::Index>(u)] = f.values[node_of[u]];
  return v;
}

Eigen::VectorXcd SparseOperator::restrict(const ComplexField& f) const {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(node_of.size()));
  for (std::size_t u = 0; u < node_of.size(); ++u) v[static_cast<Eigen::Index>(u)] = f.values[node_of[u]];
  return v;
}

RealField SparseOperator::expand(const Eigen::VectorXd& v, double fill) const {
  RealField f(grid, fill);
  for (std::size_t u = 0; u < node_of.size(); ++u) f.values[node_of[u]] = v[static_cast<Eigen::Index>(u)];
  return f;
}

ComplexField SparseOperator::expand(const Eigen::VectorXcd& v, cd fill) const {
  ComplexField f(grid, fill);
  for (std::size_t u = 0; u < node_of.size(); ++u) f.values[node_of[u]] = v[static_cast<Eigen::Index>(u)];
  return f;
}

namespace {

// Coefficients of f d/dx + G d^2/dx^2 along one axis.
struct AxisStencil {
  double minus = 0, center = 0, plus = 0;
};

AxisStencil axis_stencil(double f, double G, double h, bool has_minus, bool has_plus, bool upwind) {
  AxisStencil s;
  if (!has_minus && !has_plus) return s;
  const double diff = G / (h * h);
  double dm, dc, dp;  // first-derivative weights
  if (upwind) {
    if (f >= 0) {
      dm = 0, dc = -1.0 / h, dp = 1.0 / h;
    } else {
      dm = -1.0 / h, dc = 1.0 / h, dp = 0;
    }
  } else {
    dm = -0.5 / h, dc = 0, dp = 0.5 / h;
  }
  s.minus = f * dm + diff;
  s.center = f * dc - 2.0 * diff;
  s.plus = f * dp + diff;
  // Mirror ghost: the missing neighbour takes the value of the opposite one.
  if (!has_minus) {
    s.plus += s.minus;
    s.minus = 0;
  } else if (!has_plus) {
    s.minus += s.plus;
    s.plus = 0;
  }
  return s;
}

}  // namespace

SparseOperator assemble_backward(const SdeModel& model, GridPtr grid, const AssemblyOptions& opts) {
  if (model.dim() != 2) throw config_error("dimension", "finite-difference operators need a 2D model");
  const Grid2D& g = *grid;
  SparseOperator op;
  op.kind = SparseOperator::Kind::Backward;
  op.grid = grid;
  op.unknown_of.assign(g.size(), -1);
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (g.is_valid(node)) {
      op.unknown_of[node] = static_cast<int>(op.node_of.size());
      op.node_of.push_back(static_cast<int>(node));
    }
  }
  const auto n = static_cast<Eigen::Index>(op.node_of.size());
  op.weights.resize(n);

  const double hx = g.hx(), hy = g.hy();
  const bool upwind_mode = opts.scheme == DifferenceScheme::PecletUpwind;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 9);
  std::size_t high_peclet = 0;

  const auto ok = [&](long i, long j) {
    return i >= 0 && j >= 0 && i < static_cast<long>(g.nx) && j < static_cast<long>(g.ny) &&
           g.is_valid(g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
  };

  for (Eigen::Index u = 0; u < n; ++u) {
    const std::size_t node = static_cast<std::size_t>(op.node_of[static_cast<std::size_t>(u)]);
    op.weights[u] = g.cell_weight(node);
    const long i = static_cast<long>(node % g.nx), j = static_cast<long>(node / g.nx);
    const auto p = g.point(node);
    const Eigen::VectorXd f = model.drift_at(p);
    const Eigen::MatrixXd G = diffusion_tensor(model, p);

    const double pe_x = G(0, 0) > 0 ? std::abs(f[0]) * hx / (2 * G(0, 0)) : std::numeric_limits<double>::infinity();
    const double pe_y = G(1, 1) > 0 ? std::abs(f[1]) * hy / (2 * G(1, 1)) : std::numeric_limits<double>::infinity();
    const bool high = pe_x > opts.peclet_threshold || pe_y > opts.peclet_threshold;
    if (high) ++high_peclet;
    const bool up_x = upwind_mode && pe_x > opts.peclet_threshold;
    const bool up_y = upwind_mode && pe_y > opts.peclet_threshold;
    if (up_x || up_y) ++op.upwind_nodes;

    const auto col = [&](long a, long b) {
      return op.unknown_of[g.index(static_cast<std::size_t>(a), static_cast<std::size_t>(b))];
    };

    const AxisStencil sx = axis_stencil(f[0], G(0, 0), hx, ok(i - 1, j), ok(i + 1, j), up_x);
    const AxisStencil sy = axis_stencil(f[1], G(1, 1), hy, ok(i, j - 1), ok(i, j + 1), up_y);
    trip.emplace_back(u, u, sx.center + sy.center);
    if (sx.minus != 0) trip.emplace_back(u, col(i - 1, j), sx.minus);
    if (sx.plus != 0) trip.emplace_back(u, col(i + 1, j), sx.plus);
    if (sy.minus != 0) trip.emplace_back(u, col(i, j - 1), sy.minus);
    if (sy.plus != 0) trip.emplace_back(u, col(i, j + 1), sy.plus);

    // 2 G_xy d^2/dxdy; dropped where the four-corner stencil is incomplete.
    const double gxy = G(0, 1);
    if (gxy != 0.0 && ok(i + 1, j + 1) && ok(i - 1, j - 1) && ok(i - 1, j + 1) && ok(i + 1, j - 1)) {
      const double c = 2.0 * gxy / (4.0 * hx * hy);
      trip.emplace_back(u, col(i + 1, j + 1), c);
      trip.emplace_back(u, col(i - 1, j - 1), c);
      trip.emplace_back(u, col(i - 1, j + 1), -c);
      trip.emplace_back(u, col(i + 1, j - 1), -c);
    }
  }
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  op.peclet_fraction = n > 0 ? static_cast<double>(high_peclet) / static_cast<double>(n) : 0.0;
  if (upwind_mode && op.peclet_fraction > opts.max_peclet_fraction) {
    throw numerical_error("resolution", "grid too coarse: cell Peclet number above threshold on " +
                                            std::to_string(op.peclet_fraction * 100) + "% of nodes");
  }
  return op;
}

SparseOperator assemble_forward(const SparseOperator& backward) {
  SparseOperator op = backward;
  op.kind = SparseOperator::Kind::Forward;
  const Eigen::VectorXd w = backward.weights;
  const Eigen::VectorXd winv = w.cwiseInverse();
  SparseMatrix bt = backward.matrix.transpose();
  op.matrix = winv.asDiagonal() * bt * w.asDiagonal();
  op.matrix.makeCompressed();
  return op;
}

SparseOperator assemble_forward(const SdeModel& model, GridPtr grid, const AssemblyOptions& opts) {
  return assemble_forward(assemble_backward(model, std::move(grid), opts));
}

double weighted_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return (u.array() * v.array() * w.array()).sum();
}

RealField stationary_density(const SparseOperator& forward, StationaryReport* report) {
  if (forward.kind != SparseOperator::Kind::Forward)
    throw config_error("operator", "stationary_density needs the forward operator");
  EigenOptions eo;
  const EigenPairs pairs = eigs_near(forward.matrix, cd(1e-3, 0.0), 2, eo);
  // pairs are sorted by distance to the shift: the first should be zero.
  const cd lam0 = pairs.values[0];
  const double scale = std::max(1.0, std::abs(pairs.values[1]));
  if (std::abs(lam0) > 1e-6 * scale) {
    throw numerical_error("non_ergodic", "forward operator has no isolated zero eigenvalue");
  }
  if (std::abs(pairs.values[1]) < 1e-7) {
    throw numerical_error("non_ergodic", "multiple near-zero eigenvalues: stationary state is not unique");
  }
  Eigen::VectorXd p(pairs.vectors[0].size());
  // Rotate the (complex) null vector to real.
  const Eigen::VectorXcd& z = pairs.vectors[0];
  Eigen::Index imax;
  z.cwiseAbs().maxCoeff(&imax);
  const cd phase = std::conj(z[imax]) / std::abs(z[imax]);
  for (Eigen::Index k = 0; k < z.size(); ++k) p[k] = (z[k] * phase).real();
  double total = p.dot(forward.weights);
  if (total < 0) {
    p = -p;
    total = -total;
  }
  p /= total;
  double clipped = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p[k] < 0) {
      clipped += -p[k] * forward.weights[k];
      p[k] = 0.0;
    }
  }
  p /= p.dot(forward.weights);
  if (report) {
    report->clipped_mass = clipped;
    report->second_eigenvalue_abs = std::abs(pairs.values[1]);
  }
  return forward.expand(p, 0.0);
}

CurrentField stationary_current(const SparseOperator& backward, const RealField& P0) {
  if (backward.kind != SparseOperator::Kind::Backward)
    throw config_error("operator", "stationary_current needs the backward operator");
  const Grid2D& g = *backward.grid;
  const Eigen::VectorXd m = backward.restrict(P0).cwiseProduct(backward.weights);
  const SparseMatrix& B = backward.matrix;

  const auto coeff = [&](int a, int b) { return B.coeff(a, b); };
  const auto edge_flux = [&](std::size_t na, std::size_t nb) {
    const int a = backward.unknown_of[na], b = backward.unknown_of[nb];
    if (a < 0 || b < 0) return 0.0;
    return m[a] * coeff(a, b) - m[b] * coeff(b, a);
  };

  CurrentField c{VectorField2D(backward.grid), {}, {}, RealField(backward.grid, 0.0)};
  c.flux_x.assign((g.nx - 1) * g.ny, 0.0);
  c.flux_y.assign(g.nx * (g.ny - 1), 0.0);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i + 1 < g.nx; ++i) c.flux_x[j * (g.nx - 1) + i] = edge_flux(g.index(i, j), g.index(i + 1, j));
  for (std::size_t j = 0; j + 1 < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) c.flux_y[j * g.nx + i] = edge_flux(g.index(i, j), g.index(i, j + 1));

  const double hx = g.hx(), hy = g.hy();
  for (std::size_t j = 0; j < g.ny; ++j) {
    const double face_x = (j == 0 || j + 1 == g.ny) ? 0.5 * hy : hy;
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t node = g.index(i, j);
      if (!g.is_valid(node)) continue;
      const double face_y = (i == 0 || i + 1 == g.nx) ? 0.5 * hx : hx;
      const double left = i > 0 ? c.flux_x[j * (g.nx - 1) + i - 1] : 0.0;
      const double right = i + 1 < g.nx ? c.flux_x[j * (g.nx - 1) + i] : 0.0;
      const double down = j > 0 ? c.flux_y[(j - 1) * g.nx + i] : 0.0;
      const double up = j + 1 < g.ny ? c.flux_y[j * g.nx + i] : 0.0;
      c.J.x[node] = 0.5 * (left + right) / face_x;
      c.J.y[node] = 0.5 * (down + up) / face_y;
      c.J.valid[node] = 1;
    }
  }
  const Eigen::VectorXd outflow = -(B.transpose() * m);
  for (std::size_t u = 0; u < backward.node_of.size(); ++u) {
    c.divergence.values[backward.node_of[u]] =
        outflow[static_cast<Eigen::Index>(u)] / backward.weights[static_cast<Eigen::Index>(u)];
  }
  return c;
}

CurrentField stationary_current(const SdeModel& model, const RealField& P0, const AssemblyOptions& opts) {
  return stationary_current(assemble_backward(model, P0.grid, opts), P0);
}

double Circulation::rate() const { return 2.0 * std::numbers::pi * flux; }

Circulation circulation(const CurrentField& current) {
  const Grid2D& g = *current.J.grid;
  const std::size_t cx = g.nx - 1, cy = g.ny - 1;
  std::vector<double> S(cx * cy, 0.0);
  double smax = 0.0;
  for (std::size_t i = 0; i < cx; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cy; ++j) {
      acc -= current.flux_x[j * cx + i];
      S[j * cx + i] = acc;
      smax = std::max(smax, std::abs(acc));
    }
  }
  Circulation c;
  c.flux = smax;
  if (!(smax > 0.0)) return c;
  double sx = 0.0, sy = 0.0, n = 0.0, sign = 0.0;
  for (std::size_t j = 0; j < cy; ++j) {
    for (std::size_t i = 0; i < cx; ++i) {
      const double s = S[j * cx + i];
      if (std::abs(s) < (1.0 - 1e-3) * smax) continue;
      sx += g.x(i) + 0.5 * g.hx();
      sy += g.y(j) + 0.5 * g.hy();
      sign += s;
      n += 1.0;
    }
  }
  c.core = {sx / n, sy / n};
  c.orientation = sign < 0 ? 1 : -1;
  return c;
}

}  // namespace stochphase

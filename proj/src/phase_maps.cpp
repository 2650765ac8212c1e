#include "stochphase/phase_maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/SparseLU>

#include "stochphase/errors.hpp"
#include "stochphase/simulate.hpp"

namespace stochphase {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

double max_abs(const ComplexField& z) {
  double m = 0.0;
  const Grid2D& g = *z.grid;
  for (std::size_t node = 0; node < g.size(); ++node)
    if (g.is_valid(node)) m = std::max(m, std::abs(z.values[node]));
  return m;
}

}  // namespace

std::string to_string(PhaseLabel label) { return label == PhaseLabel::Asymptotic ? "asymptotic" : "mrt"; }

AsymptoticPhase asymptotic_phase(const SpectralPair& pair, const std::array<double, 2>& x_ref) {
  const GridPtr grid = pair.Q.grid;
  const Grid2D& g = *grid;
  const double floor = kAmplitudeFloor * max_abs(pair.Q);
  const std::size_t ref = g.nearest_valid_node(x_ref[0], x_ref[1]);
  const cd qref = pair.Q.values[ref];
  if (!(std::abs(qref) >= floor)) throw numerical_error("bad_reference", "amplitude at x_ref is below the floor");
  const cd rot = std::conj(qref) / std::abs(qref);

  AsymptoticPhase out;
  PhaseField& f = out.psi;
  f.grid = grid;
  f.label = PhaseLabel::Asymptotic;
  f.phase = RealField(grid, kNaN);
  f.companion = ComplexField(grid, cd(0.0));
  f.valid.assign(g.size(), 0);
  f.x_ref = x_ref;
  f.ref_node = ref;
  f.rate = pair.lambda.imag();
  out.u = RealField(grid, kNaN);
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!g.is_valid(node)) continue;
    const cd q = pair.Q.values[node] * rot;
    f.companion.values[node] = q;
    out.u.values[node] = std::abs(q);
    if (std::abs(q) >= floor) {
      f.valid[node] = 1;
      f.phase.values[node] = wrap_phase(std::arg(q));
    }
  }
  f.phase.values[ref] = 0.0;
  return out;
}

LogGradient log_gradient(const ComplexField& z, double floor_fraction) {
  const Grid2D& g = *z.grid;
  LogGradient out{ComplexField(z.grid, cd(0.0)), ComplexField(z.grid, cd(0.0)), std::vector<std::uint8_t>(g.size(), 0)};
  const double floor = floor_fraction * max_abs(z);
  const auto ok = [&](long i, long j) {
    return i >= 0 && j >= 0 && i < static_cast<long>(g.nx) && j < static_cast<long>(g.ny) &&
           g.is_valid(g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j)));
  };
  const auto at = [&](long i, long j) {
    return z.values[g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))];
  };
  // Derivative along one axis; false when the node has no neighbour on it.
  const auto diff = [&](long i, long j, long di, long dj, double h, cd& d) {
    const bool p = ok(i + di, j + dj), m = ok(i - di, j - dj);
    if (p && m) d = (at(i + di, j + dj) - at(i - di, j - dj)) / (2.0 * h);
    else if (p) d = (at(i + di, j + dj) - at(i, j)) / h;
    else if (m) d = (at(i, j) - at(i - di, j - dj)) / h;
    else return false;
    return true;
  };
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!g.is_valid(node)) continue;
    const cd q = z.values[node];
    if (!(std::abs(q) >= floor) || std::abs(q) == 0.0) continue;
    const long i = static_cast<long>(node % g.nx), j = static_cast<long>(node / g.nx);
    cd dx, dy;
    if (!diff(i, j, 1, 0, g.hx(), dx) || !diff(i, j, 0, 1, g.hy(), dy)) continue;
    out.gx.values[node] = dx / q;
    out.gy.values[node] = dy / q;
    out.valid[node] = 1;
  }
  return out;
}

namespace {

VectorField2D gradient_from(const ComplexField& z, const std::vector<std::uint8_t>* phase_valid) {
  const LogGradient lg = log_gradient(z);
  VectorField2D v(z.grid);
  for (std::size_t node = 0; node < z.grid->size(); ++node) {
    if (!lg.valid[node] || (phase_valid && !(*phase_valid)[node])) continue;
    v.x[node] = lg.gx.values[node].imag();
    v.y[node] = lg.gy.values[node].imag();
    v.valid[node] = 1;
  }
  return v;
}

}  // namespace

VectorField2D phase_gradient(const PhaseField& field) { return gradient_from(field.companion, &field.valid); }

VectorField2D phase_gradient(const SpectralPair& pair) { return gradient_from(pair.Q, nullptr); }

RealField omega_field(const SdeModel& model, const SpectralPair& pair) {
  const Grid2D& g = *pair.Q.grid;
  const LogGradient lg = log_gradient(pair.Q);
  RealField omega(pair.Q.grid, kNaN);
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!lg.valid[node]) continue;
    const auto p = g.point(node);
    const Eigen::MatrixXd G = diffusion_tensor(model, p);
    const Eigen::Vector2d lnu(lg.gx.values[node].real(), lg.gy.values[node].real());
    const Eigen::Vector2d dpsi(lg.gx.values[node].imag(), lg.gy.values[node].imag());
    omega.values[node] = 2.0 * lnu.dot(G * dpsi);
  }
  return omega;
}

RealField drift_diagnostic_field(const SdeModel& model, const RealField& P0, const SpectralPair& pair) {
  RealField a = omega_field(model, pair);
  const double w1 = pair.lambda.imag();
  for (std::size_t node = 0; node < a.values.size(); ++node) {
    if (std::isnan(a.values[node])) continue;
    a.values[node] = P0.values[node] * (w1 - a.values[node]);
  }
  return a;
}

bool strongly_elliptic(const SdeModel& model, const Grid2D* grid) {
  const auto check = [&](std::span<const double> x) {
    const Eigen::MatrixXd G = diffusion_tensor(model, x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double top = es.eigenvalues().maxCoeff();
    return top > 0.0 && es.eigenvalues().minCoeff() > 1e-10 * top;
  };
  if (grid) {
    for (std::size_t node = 0; node < grid->size(); ++node) {
      if (!grid->is_valid(node)) continue;
      const auto p = grid->point(node);
      if (!check(p)) return false;
    }
    return true;
  }
  // Lattice of 5 points per axis over the domain hint.
  const Box& box = model.domain_hint();
  const std::size_t n = model.dim();
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> x(n);
  while (true) {
    for (std::size_t a = 0; a < n; ++a) x[a] = box.lower[a] + box.width(a) * (0.1 + 0.2 * static_cast<double>(idx[a]));
    if (!model.is_singular(x) && !check(x)) return false;
    std::size_t a = 0;
    while (a < n && ++idx[a] == 5) idx[a++] = 0;
    if (a == n) break;
  }
  return true;
}

namespace {

// Position relative to the cut frame: the cut is the ray y' = 0, x' > 0.
std::array<double, 2> cut_frame(const Cut& cut, const std::array<double, 2>& p) {
  const double dx = p[0] - cut.anchor[0], dy = p[1] - cut.anchor[1];
  const double c = std::cos(cut.angle), s = std::sin(cut.angle);
  return {c * dx + s * dy, -s * dx + c * dy};
}

// +1 if going from a to b crosses the cut counterclockwise (below -> above),
// -1 for the reverse, 0 if the segment does not cross.
int crossing(const Cut& cut, const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const auto pa = cut_frame(cut, a), pb = cut_frame(cut, b);
  const bool above_a = pa[1] >= 0.0, above_b = pb[1] >= 0.0;
  if (above_a == above_b) return 0;
  const double t = pa[1] / (pa[1] - pb[1]);
  const double xi = pa[0] + t * (pb[0] - pa[0]);
  if (xi <= 0.0) return 0;
  return above_a ? -1 : 1;
}

// Row value of (L T)_u with T continued across the cut from row u's side,
// given T jumps by jump*Tbar when crossing counterclockwise.
double row_apply(const SparseOperator& B, const Cut& cut, const Eigen::VectorXd& T, double jump, Eigen::Index u,
                 bool& crossed) {
  const Grid2D& g = *B.grid;
  const auto pu = g.point(static_cast<std::size_t>(B.node_of[static_cast<std::size_t>(u)]));
  double s = 0.0;
  crossed = false;
  for (SparseMatrix::InnerIterator it(B.matrix, u); it; ++it) {
    const Eigen::Index v = it.col();
    double tv = T[v];
    if (v != u) {
      const auto pv = g.point(static_cast<std::size_t>(B.node_of[static_cast<std::size_t>(v)]));
      const int c = crossing(cut, pu, pv);
      if (c != 0) {
        // Seen from u, the neighbour's continued value undoes the jump.
        tv -= c * jump;
        crossed = true;
      }
    }
    s += it.value() * tv;
  }
  return s;
}

}  // namespace

MrtSolution mrt_solve(const SdeModel& model, GridPtr grid, const Cut& cut, const AssemblyOptions& opts) {
  if (!strongly_elliptic(model, grid.get()))
    throw underpowered_error("not_elliptic", "MRT phase requires a strongly elliptic backward operator; the diffusion tensor of model '" +
                                                 model.name() + "' is degenerate");
  return mrt_solve(model, assemble_backward(model, std::move(grid), opts), cut);
}

MrtSolution mrt_solve(const SdeModel& model, const SparseOperator& B, const Cut& cut) {
  if (!strongly_elliptic(model, B.grid.get()))
    throw underpowered_error("not_elliptic", "MRT phase requires a strongly elliptic backward operator; the diffusion tensor of model '" +
                                                 model.name() + "' is degenerate");
  const Grid2D& g = *B.grid;
  const Eigen::Index n = B.size();
  // Unknowns: T (n values) and Tbar (index n). T jumps by +Tbar going
  // counterclockwise across the cut; a negative Tbar flips the convention.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(B.matrix.nonZeros()) + 64);
  for (Eigen::Index u = 0; u < n; ++u) {
    const auto pu = g.point(static_cast<std::size_t>(B.node_of[static_cast<std::size_t>(u)]));
    double tbar_coeff = 0.0;
    for (SparseMatrix::InnerIterator it(B.matrix, u); it; ++it) {
      trip.emplace_back(u, it.col(), it.value());
      if (it.col() == u) continue;
      const auto pv = g.point(static_cast<std::size_t>(B.node_of[static_cast<std::size_t>(it.col())]));
      const int c = crossing(cut, pu, pv);
      if (c != 0) tbar_coeff -= c * it.value();
    }
    if (tbar_coeff != 0.0) trip.emplace_back(u, n, tbar_coeff);
  }
  MrtSolution sol;
  sol.grid = B.grid;
  sol.cut = cut;
  sol.gauge_node = g.nearest_valid_node(cut.anchor[0], cut.anchor[1]);
  const Eigen::Index gauge = B.unknown_of[sol.gauge_node];
  trip.emplace_back(n, gauge, 1.0);

  Eigen::SparseMatrix<double> M(n + 1, n + 1);
  M.setFromTriplets(trip.begin(), trip.end());
  M.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(M);
  if (lu.info() != Eigen::Success)
    throw numerical_error("bad_cut", "augmented MRT system is singular: the cut does not cross the circulation");
  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n + 1, -1.0);
  rhs[n] = 0.0;
  const Eigen::VectorXd x = lu.solve(rhs);
  double tbar = x[n];
  if (!std::isfinite(tbar) || !x.allFinite() || std::abs(tbar) > 1e12 || std::abs(tbar) < 1e-12)
    throw numerical_error("bad_cut", "augmented MRT system is singular: the cut does not cross the circulation");
  sol.jump_sign = tbar > 0 ? 1 : -1;
  sol.Tbar = std::abs(tbar);
  const Eigen::VectorXd T = x.head(n);
  sol.T = B.expand(T, kNaN);

  for (Eigen::Index u = 0; u < n; ++u) {
    bool crossed;
    const double r = std::abs(row_apply(B, cut, T, tbar, u, crossed) + 1.0);
    if (crossed) {
      sol.cut_residual = std::max(sol.cut_residual, r);
      ++sol.cut_rows;
    } else {
      sol.residual = std::max(sol.residual, r);
    }
  }
  if (sol.cut_rows == 0)
    throw numerical_error("bad_cut", "the cut does not intersect any stencil of the grid");
  return sol;
}

PhaseField mrt_phase(const MrtSolution& sol, const std::array<double, 2>& x_ref) {
  const Grid2D& g = *sol.grid;
  PhaseField f;
  f.grid = sol.grid;
  f.label = PhaseLabel::Mrt;
  f.x_ref = x_ref;
  f.ref_node = g.nearest_valid_node(x_ref[0], x_ref[1]);
  f.rate = kTwoPi / sol.Tbar;
  f.phase = RealField(sol.grid, kNaN);
  f.companion = ComplexField(sol.grid, cd(0.0));
  f.valid.assign(g.size(), 0);
  const double t0 = sol.T.values[f.ref_node];
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!g.is_valid(node)) continue;
    const double theta = f.rate * (t0 - sol.T.values[node]);
    f.phase.values[node] = wrap_phase(theta);
    f.companion.values[node] = std::polar(1.0, theta);
    f.valid[node] = 1;
  }
  f.phase.values[f.ref_node] = 0.0;
  return f;
}

double mrt_generator_residual(const SparseOperator& B, const MrtSolution& sol) {
  const Eigen::VectorXd T = B.restrict(sol.T);
  const double rate = kTwoPi / sol.Tbar;
  const Eigen::VectorXd theta = -rate * T;
  double worst = 0.0;
  for (Eigen::Index u = 0; u < B.size(); ++u) {
    bool crossed;
    const double r = row_apply(B, sol.cut, theta, -rate * sol.jump_sign * sol.Tbar, u, crossed);
    worst = std::max(worst, std::abs(r - rate));
  }
  return worst;
}

std::array<double, 2> reference_point(const RealField& P0, const std::array<double, 2>& core) {
  const Grid2D& g = *P0.grid;
  const std::size_t c = g.nearest_node(core[0], core[1]);
  const std::size_t j = c / g.nx;
  std::size_t best = g.size();
  for (std::size_t i = 0; i < g.nx; ++i) {
    const std::size_t node = g.index(i, j);
    if (g.x(i) <= core[0] || !g.is_valid(node)) continue;
    if (best == g.size() || P0.values[node] > P0.values[best]) best = node;
  }
  if (best == g.size()) throw numerical_error("bad_reference", "no valid node on the +x ray from the core");
  return g.point(best);
}

PhaseLookup::PhaseLookup(const PhaseField& field) : field_(&field), values_(field.grid->size(), cd(0.0)) {
  for (std::size_t node = 0; node < values_.size(); ++node)
    if (field.is_valid(node)) values_[node] = field.companion.values[node];
}

LookupResult PhaseLookup::operator()(double px, double py) const {
  const Grid2D& g = *field_->grid;
  if (!g.contains(px, py))
    throw numerical_error("out_of_domain", "phase lookup outside the grid at (" + std::to_string(px) + ", " +
                                               std::to_string(py) + ")");
  const double tx = (px - g.x_min) / g.hx(), ty = (py - g.y_min) / g.hy();
  const std::size_t i = std::min(static_cast<std::size_t>(tx), g.nx - 2);
  const std::size_t j = std::min(static_cast<std::size_t>(ty), g.ny - 2);
  const double fx = tx - static_cast<double>(i), fy = ty - static_cast<double>(j);
  const std::size_t n00 = g.index(i, j), n10 = n00 + 1, n01 = n00 + g.nx, n11 = n01 + 1;
  LookupResult r;
  const bool all = field_->valid[n00] && field_->valid[n10] && field_->valid[n01] && field_->valid[n11];
  if (!all) r.flagged = true;
  const cd z = (1 - fx) * (1 - fy) * values_[n00] + fx * (1 - fy) * values_[n10] + (1 - fx) * fy * values_[n01] +
               fx * fy * values_[n11];
  if (std::abs(z) > 0.0) {
    r.phase = wrap_phase(std::arg(z));
    return r;
  }
  // No usable corner: nearest node with a phase.
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_node = g.size();
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (!field_->valid[node]) continue;
    const auto p = g.point(node);
    const double d = std::hypot(p[0] - px, p[1] - py);
    if (d < best) {
      best = d;
      best_node = node;
    }
  }
  if (best_node == g.size()) throw numerical_error("empty_phase", "phase field has no valid node");
  r.phase = field_->phase.values[best_node];
  return r;
}

double phase_lookup(const PhaseField& field, double x, double y) { return PhaseLookup(field)(x, y).phase; }

bool vector_lookup(const VectorField2D& v, double px, double py, double& vx, double& vy) {
  const Grid2D& g = *v.grid;
  if (!g.contains(px, py)) return false;
  const double tx = (px - g.x_min) / g.hx(), ty = (py - g.y_min) / g.hy();
  const std::size_t i = std::min(static_cast<std::size_t>(tx), g.nx - 2);
  const std::size_t j = std::min(static_cast<std::size_t>(ty), g.ny - 2);
  const double fx = tx - static_cast<double>(i), fy = ty - static_cast<double>(j);
  const std::size_t nodes[4] = {g.index(i, j), g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)};
  const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (!v.valid[nodes[k]]) continue;
    sw += w[k];
    sx += w[k] * v.x[nodes[k]];
    sy += w[k] * v.y[nodes[k]];
  }
  if (!(sw > 0.0)) return false;
  vx = sx / sw;
  vy = sy / sw;
  return true;
}

double circular_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || a.size() != b.size()) throw config_error("samples", "need equal nonempty angle samples");
  cd s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::polar(1.0, a[k] - b[k]);
  return std::abs(s) / static_cast<double>(a.size());
}

}  // namespace stochphase

#include "stochphase/gedmd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "stochphase/errors.hpp"

namespace stochphase {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

double falling(int e, int a) {
  if (a == 0) return 1.0;
  if (a == 1) return e;
  return static_cast<double>(e) * (e - 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// Region

std::size_t Region::cell_of(std::span<const double> x) const {
  std::size_t idx = 0, stride = 1;
  for (std::size_t a = 0; a < dim(); ++a) {
    const double lo = box.lower[a], hi = box.upper[a];
    if (!(x[a] >= lo && x[a] <= hi)) return npos;
    const double w = hi - lo;
    std::size_t c = 0;
    if (w > 0.0) c = std::min(static_cast<std::size_t>((x[a] - lo) / w * static_cast<double>(lattice)), lattice - 1);
    idx += c * stride;
    stride *= lattice;
  }
  return idx;
}

bool Region::contains(std::span<const double> x) const {
  const std::size_t c = cell_of(x);
  return c != npos && mask[c] != 0;
}

std::vector<double> Region::cell_centre(std::size_t cell) const {
  std::vector<double> c(dim());
  for (std::size_t a = 0; a < dim(); ++a) {
    const std::size_t i = cell % lattice;
    cell /= lattice;
    c[a] = box.lower[a] + (static_cast<double>(i) + 0.5) * box.width(a) / static_cast<double>(lattice);
  }
  return c;
}

std::vector<double> Region::project(std::span<const double> x) const {
  if (contains(x)) return {x.begin(), x.end()};
  const std::size_t n = dim();
  std::size_t best = npos;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t cell : cells) {
    const auto c = cell_centre(cell);
    double d = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const double half = 0.5 * box.width(a) / static_cast<double>(lattice);
      const double w = box.width(a) > 0.0 ? box.width(a) : 1.0;
      const double gap = std::max(0.0, std::abs(x[a] - c[a]) - half) / w;
      d += gap * gap;
    }
    if (d < best_d) {
      best_d = d;
      best = cell;
    }
  }
  if (best == npos) throw numerical_error("empty_region", "region has no cells");
  const auto c = cell_centre(best);
  std::vector<double> y(n);
  for (std::size_t a = 0; a < n; ++a) {
    // Stay strictly inside the cell so the projected point maps back to it.
    const double half = 0.5 * box.width(a) / static_cast<double>(lattice) * (1.0 - 1e-9);
    y[a] = std::clamp(x[a], c[a] - half, c[a] + half);
  }
  return y;
}

std::vector<double> Region::mode() const {
  std::size_t best = cells.empty() ? 0 : cells.front();
  for (std::size_t c : cells)
    if (visits[c] > visits[best]) best = c;
  return cell_centre(best);
}

std::string Region::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t b : mask) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Region region_select(const Trajectory& traj, double pad, double threshold, std::size_t lattice) {
  if (traj.size() < 100000)
    throw underpowered_error("underpowered", "region selection needs at least 1e5 samples, got " +
                                                 std::to_string(traj.size()));
  if (traj.dim == 0 || traj.dim > 4) throw config_error("dimension", "region lattice supports 1 to 4 dimensions");
  if (lattice < 1) throw config_error("lattice", "lattice needs at least one cell per axis");
  if (pad < 0.0 || threshold < 0.0) throw config_error("region", "pad and threshold must be nonnegative");
  const std::size_t n = traj.dim;
  Box bb{std::vector<double>(n, std::numeric_limits<double>::infinity()),
         std::vector<double>(n, -std::numeric_limits<double>::infinity())};
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto x = traj.point(i);
    for (std::size_t a = 0; a < n; ++a) {
      bb.lower[a] = std::min(bb.lower[a], x[a]);
      bb.upper[a] = std::max(bb.upper[a], x[a]);
    }
  }
  Region r;
  r.box = bb.padded(pad);
  r.lattice = lattice;
  r.threshold = threshold;
  std::size_t total = 1;
  for (std::size_t a = 0; a < n; ++a) total *= lattice;
  r.visits.assign(total, 0);
  for (std::size_t i = 0; i < traj.size(); ++i) ++r.visits[r.cell_of(traj.point(i))];
  r.mask.assign(total, 0);
  const double need = threshold * static_cast<double>(traj.size());
  for (std::size_t c = 0; c < total; ++c) {
    if (static_cast<double>(r.visits[c]) >= need) {
      r.mask[c] = 1;
      r.cells.push_back(c);
    }
  }

  // Largest face-connected component.
  std::vector<std::uint8_t> seen(total, 0);
  std::size_t largest = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start : r.cells) {
    if (seen[start]) continue;
    std::size_t size = 0;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      ++size;
      std::size_t stride = 1, rest = c;
      for (std::size_t a = 0; a < n; ++a) {
        const std::size_t i = rest % lattice;
        rest /= lattice;
        if (i > 0 && r.mask[c - stride] && !seen[c - stride]) {
          seen[c - stride] = 1;
          stack.push_back(c - stride);
        }
        if (i + 1 < lattice && r.mask[c + stride] && !seen[c + stride]) {
          seen[c + stride] = 1;
          stack.push_back(c + stride);
        }
        stride *= lattice;
      }
    }
    largest = std::max(largest, size);
  }
  r.dominant_share = r.cells.empty() ? 0.0 : static_cast<double>(largest) / static_cast<double>(r.cells.size());
  r.fragmented = r.dominant_share < kRegionConnectedShare;
  return r;
}

// ---------------------------------------------------------------------------
// Basis

MonomialBasis::MonomialBasis(std::size_t dim, int degree, std::vector<double> center, std::vector<double> scale)
    : dim_(dim), degree_(degree), center_(std::move(center)), scale_(std::move(scale)) {
  if (dim == 0 || degree < 1) throw config_error("basis", "basis needs dim >= 1 and degree >= 1");
  if (center_.size() != dim || scale_.size() != dim) throw config_error("basis", "normalisation size mismatch");
  for (double s : scale_)
    if (!(s > 0.0) || !std::isfinite(s))
      throw numerical_error("degenerate_region", "basis normalisation needs a region of positive width on every axis");
  std::vector<int> e(dim, 0);
  for (int d = 0; d <= degree; ++d) {
    // Compositions of d into dim parts, first axis descending.
    std::function<void(std::size_t, int)> rec = [&](std::size_t axis, int left) {
      if (axis + 1 == dim) {
        e[axis] = left;
        exponents_.push_back(e);
        return;
      }
      for (int p = left; p >= 0; --p) {
        e[axis] = p;
        rec(axis + 1, left - p);
      }
    };
    rec(0, d);
  }
  if (exponents_.size() < dim + 2)
    throw config_error("basis", "basis needs at least dim + 2 functions; raise the degree");
}

MonomialBasis MonomialBasis::over(const Box& box, int degree) {
  std::vector<double> c(box.dim()), s(box.dim());
  for (std::size_t a = 0; a < box.dim(); ++a) {
    c[a] = 0.5 * (box.lower[a] + box.upper[a]);
    s[a] = 0.5 * box.width(a);
  }
  return MonomialBasis(box.dim(), degree, std::move(c), std::move(s));
}

void MonomialBasis::powers(std::span<const double> x, std::vector<double>& pw) const {
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  pw.resize(dim_ * stride);
  for (std::size_t a = 0; a < dim_; ++a) {
    const double z = (x[a] - center_[a]) / scale_[a];
    double p = 1.0;
    for (std::size_t q = 0; q < stride; ++q) {
      pw[a * stride + q] = p;
      p *= z;
    }
  }
}

void MonomialBasis::values(std::span<const double> x, Eigen::Ref<Eigen::VectorXd> out) const {
  std::vector<double> pw;
  powers(x, pw);
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  for (std::size_t j = 0; j < size(); ++j) {
    double v = 1.0;
    for (std::size_t a = 0; a < dim_; ++a) v *= pw[a * stride + static_cast<std::size_t>(exponents_[j][a])];
    out(static_cast<Eigen::Index>(j)) = v;
  }
}

namespace {

// d^{orders} z^e / dz^{orders}, product over axes, with 1/scale factors.
double derivative(const std::vector<int>& e, const std::vector<int>& order, const std::vector<double>& pw,
                  std::size_t stride, const std::vector<double>& scale) {
  double v = 1.0;
  for (std::size_t a = 0; a < e.size(); ++a) {
    const int q = e[a] - order[a];
    if (q < 0) return 0.0;
    v *= falling(e[a], order[a]) * pw[a * stride + static_cast<std::size_t>(q)];
    for (int k = 0; k < order[a]; ++k) v /= scale[a];
  }
  return v;
}

}  // namespace

void MonomialBasis::gradients(std::span<const double> x, Eigen::Ref<Eigen::MatrixXd> out) const {
  std::vector<double> pw;
  powers(x, pw);
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  std::vector<int> order(dim_, 0);
  for (std::size_t j = 0; j < size(); ++j) {
    for (std::size_t a = 0; a < dim_; ++a) {
      order[a] = 1;
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) =
          derivative(exponents_[j], order, pw, stride, scale_);
      order[a] = 0;
    }
  }
}

Eigen::MatrixXd MonomialBasis::hessian(std::size_t j, std::span<const double> x) const {
  std::vector<double> pw;
  powers(x, pw);
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd H(n, n);
  std::vector<int> order(dim_, 0);
  for (std::size_t a = 0; a < dim_; ++a) {
    for (std::size_t b = a; b < dim_; ++b) {
      ++order[a];
      ++order[b];
      const double v = derivative(exponents_[j], order, pw, stride, scale_);
      H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      H(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
      order[a] = order[b] = 0;
    }
  }
  return H;
}

void MonomialBasis::generator(std::span<const double> x, const Eigen::VectorXd& f, const Eigen::MatrixXd& G,
                              Eigen::Ref<Eigen::VectorXd> out) const {
  std::vector<double> pw;
  powers(x, pw);
  const std::size_t stride = static_cast<std::size_t>(degree_) + 1;
  std::vector<int> order(dim_, 0);
  for (std::size_t j = 0; j < size(); ++j) {
    double s = 0.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      const auto ia = static_cast<Eigen::Index>(a);
      order[a] = 1;
      s += f(ia) * derivative(exponents_[j], order, pw, stride, scale_);
      order[a] = 0;
      for (std::size_t b = 0; b < dim_; ++b) {
        const double gab = G(ia, static_cast<Eigen::Index>(b));
        if (gab == 0.0) continue;
        ++order[a];
        ++order[b];
        s += gab * derivative(exponents_[j], order, pw, stride, scale_);
        order[a] = order[b] = 0;
      }
    }
    out(static_cast<Eigen::Index>(j)) = s;
  }
}

Eigen::MatrixXd evaluate_basis(const MonomialBasis& basis, const Eigen::MatrixXd& samples) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(basis.size()), samples.cols());
  for (Eigen::Index l = 0; l < samples.cols(); ++l) {
    const Eigen::VectorXd x = samples.col(l);
    basis.values({x.data(), static_cast<std::size_t>(x.size())}, out.col(l));
  }
  return out;
}

Eigen::MatrixXd apply_generator(const SdeModel& model, const MonomialBasis& basis, const Eigen::MatrixXd& samples) {
  if (static_cast<std::size_t>(samples.rows()) != model.dim() || basis.dim() != model.dim())
    throw config_error("dimension", "samples, basis and model dimensions differ");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(basis.size()), samples.cols());
  for (Eigen::Index l = 0; l < samples.cols(); ++l) {
    const Eigen::VectorXd x = samples.col(l);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    if (model.is_singular(xs))
      throw numerical_error("singular_point", "generator evaluated at a singular point of " + model.name());
    const Eigen::VectorXd f = model.drift_at(xs);
    const Eigen::MatrixXd G = diffusion_tensor(model, xs);
    basis.generator(xs, f, G, out.col(l));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fit

GeneratorAccumulator::GeneratorAccumulator(std::size_t k)
    : A_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))),
      C_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))) {}

void GeneratorAccumulator::add(const Eigen::MatrixXd& FX, const Eigen::MatrixXd& dF) {
  if (FX.rows() != A_.rows() || dF.rows() != A_.rows() || FX.cols() != dF.cols())
    throw config_error("dimension", "value and generator blocks do not match the basis");
  A_.selfadjointView<Eigen::Lower>().rankUpdate(FX);
  C_.noalias() += dF * FX.transpose();
  dd_ += dF.squaredNorm();
  m_ += static_cast<std::size_t>(FX.cols());
}

GeneratorFit GeneratorAccumulator::fit(double ridge) const {
  const Eigen::Index k = A_.rows();
  if (m_ < 10 * static_cast<std::size_t>(k))
    throw underpowered_error("underpowered", "generator fit needs at least 10 samples per basis function (" +
                                                 std::to_string(10 * k) + "), got " + std::to_string(m_));
  const Eigen::MatrixXd A = A_.selfadjointView<Eigen::Lower>();
  GeneratorFit out;
  out.ridge = ridge * A.trace() / static_cast<double>(k);
  const Eigen::MatrixXd Areg = A + out.ridge * Eigen::MatrixXd::Identity(k, k);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Areg, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  out.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(out.condition <= kMaxCondition))
    throw numerical_error("ill_conditioned", "basis Gram matrix has condition " + std::to_string(out.condition) +
                                                 " after regularisation");
  // Ridge solve followed by iterated refinement toward the unregularised
  // least-squares solution; directions with Gram eigenvalues far below the
  // ridge stay damped.
  const auto ldlt = Areg.ldlt();
  out.L = ldlt.solve(C_.transpose()).transpose();
  for (int it = 0; it < kRefinementSteps; ++it)
    out.L += ldlt.solve((C_ - out.L * A).transpose()).transpose();
  const double r2 = (out.L * A * out.L.transpose()).trace() - 2.0 * (out.L * C_.transpose()).trace() + dd_;
  out.residual = std::sqrt(std::max(0.0, r2));
  return out;
}

GeneratorFit fit_generator(const Eigen::MatrixXd& FX, const Eigen::MatrixXd& dF, double ridge) {
  GeneratorAccumulator acc(static_cast<std::size_t>(FX.rows()));
  acc.add(FX, dF);
  GeneratorFit f = acc.fit(ridge);
  f.residual = (f.L * FX - dF).norm();
  return f;
}

GeneratorSpectrum generator_spectrum(const Eigen::MatrixXd& L) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(L.transpose());
  if (es.info() != Eigen::Success) throw numerical_error("eigensolver", "generator eigendecomposition failed");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(L.rows()));
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (ev(a).real() != ev(b).real()) return ev(a).real() > ev(b).real();
    return ev(a).imag() > ev(b).imag();
  });
  GeneratorSpectrum s;
  for (Eigen::Index i : order) {
    s.values.push_back(ev(i));
    s.vectors.push_back(es.eigenvectors().col(i));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Model

namespace {

cd expand(const GedmdModel& g, std::span<const double> x, Eigen::VectorXd& F) {
  F.resize(static_cast<Eigen::Index>(g.basis.size()));
  g.basis.values(x, F);
  return F.cast<cd>().dot(g.v);
}

}  // namespace

GedmdModel gedmd_fit(const SdeModel& model, const Eigen::MatrixXd& samples, const Region& region,
                     const GedmdOptions& opts, const std::vector<double>& x_ref) {
  if (static_cast<std::size_t>(samples.rows()) != model.dim() || region.dim() != model.dim())
    throw config_error("dimension", "samples, region and model dimensions differ");
  GedmdModel g;
  g.region = region;
  g.basis = MonomialBasis::over(region.box, opts.degree);
  const auto k = static_cast<Eigen::Index>(g.basis.size());

  std::vector<Eigen::Index> inside;
  for (Eigen::Index l = 0; l < samples.cols(); ++l) {
    const Eigen::VectorXd x = samples.col(l);
    if (region.contains({x.data(), static_cast<std::size_t>(x.size())})) inside.push_back(l);
  }
  GeneratorAccumulator acc(static_cast<std::size_t>(k));
  const std::size_t block = std::max<std::size_t>(opts.block, 1);
  for (std::size_t start = 0; start < inside.size(); start += block) {
    const std::size_t end = std::min(inside.size(), start + block);
    Eigen::MatrixXd X(samples.rows(), static_cast<Eigen::Index>(end - start));
    for (std::size_t i = start; i < end; ++i) X.col(static_cast<Eigen::Index>(i - start)) = samples.col(inside[i]);
    acc.add(evaluate_basis(g.basis, X), apply_generator(model, g.basis, X));
  }
  const GeneratorFit fit = acc.fit(opts.ridge);
  g.L = fit.L;
  g.residual = fit.residual;
  g.condition = fit.condition;
  g.samples = acc.samples();

  const GeneratorSpectrum spec = generator_spectrum(g.L);
  g.eigenvalues = spec.values;
  double scale = 0.0;
  for (const cd& z : spec.values) scale = std::max(scale, std::abs(z));
  std::size_t pick = spec.values.size();
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const cd z = spec.values[i];
    if (!(z.imag() > 1e-8 * scale) || !(z.real() < 0.0)) continue;
    if (opts.omega_hint > 0.0 && std::abs(z.imag() - opts.omega_hint) > 0.5 * opts.omega_hint) continue;
    pick = i;  // values are sorted by descending real part
    break;
  }
  if (pick == spec.values.size())
    throw numerical_error("no_oscillatory_mode", "fitted generator has no decaying oscillatory eigenvalue");
  g.lambda1 = spec.values[pick];
  g.v = spec.vectors[pick];

  // max |Q| over the fit samples is 1, Q(x_ref) real positive.
  Eigen::VectorXd F;
  double qmax = 0.0;
  for (Eigen::Index l : inside) {
    const Eigen::VectorXd x = samples.col(l);
    qmax = std::max(qmax, std::abs(expand(g, {x.data(), static_cast<std::size_t>(x.size())}, F)));
  }
  if (!(qmax > 0.0)) throw numerical_error("degenerate_mode", "eigenfunction vanishes on the samples");
  g.v /= qmax;
  g.x_ref = x_ref.empty() ? region.mode() : x_ref;
  if (g.x_ref.size() != model.dim()) throw config_error("x_ref", "reference point has the wrong dimension");
  const cd qref = expand(g, g.x_ref, F);
  if (std::abs(qref) < kAmplitudeFloor)
    throw numerical_error("reference_masked", "eigenfunction amplitude vanishes at the reference point");
  g.v *= std::conj(qref) / std::abs(qref);
  return g;
}

cd gedmd_eigenfunction(const GedmdModel& g, std::span<const double> x) {
  Eigen::VectorXd F;
  return expand(g, x, F);
}

GedmdPhase gedmd_phase(const GedmdModel& g, std::span<const double> x) {
  if (!g.region.contains(x)) throw numerical_error("out_of_region", "phase evaluated outside the fitted region");
  const cd q = gedmd_eigenfunction(g, x);
  GedmdPhase p;
  p.amplitude = std::abs(q);
  p.phase = wrap_phase(std::arg(q));
  p.masked = p.amplitude < kAmplitudeFloor;
  return p;
}

std::vector<double> gedmd_phase_gradient(const GedmdModel& g, std::span<const double> x) {
  if (!g.region.contains(x)) throw numerical_error("out_of_region", "gradient evaluated outside the fitted region");
  const cd q = gedmd_eigenfunction(g, x);
  if (std::abs(q) < kAmplitudeFloor) throw numerical_error("masked", "eigenfunction amplitude below the floor");
  Eigen::MatrixXd grad(static_cast<Eigen::Index>(g.basis.size()), static_cast<Eigen::Index>(g.basis.dim()));
  g.basis.gradients(x, grad);
  const Eigen::VectorXcd dq = grad.transpose().cast<cd>() * g.v;
  std::vector<double> out(g.basis.dim());
  for (std::size_t a = 0; a < out.size(); ++a) out[a] = (dq(static_cast<Eigen::Index>(a)) / q).imag();
  return out;
}

PhaseFn gedmd_phase_fn(const GedmdModel& g) {
  return [&g](std::span<const double> x) {
    const bool inside = g.region.contains(x);
    const GedmdPhase p = inside ? gedmd_phase(g, x) : gedmd_phase(g, g.region.project(x));
    return LookupResult{p.phase, !inside || p.masked};
  };
}

GradientFn gedmd_gradient_fn(const GedmdModel& g) {
  return [&g](std::span<const double> x, std::span<double> out) {
    if (!g.region.contains(x)) return false;
    if (std::abs(gedmd_eigenfunction(g, x)) < kAmplitudeFloor) return false;
    const auto v = gedmd_phase_gradient(g, x);
    std::copy(v.begin(), v.end(), out.begin());
    return true;
  };
}

Eigen::MatrixXd stationary_samples(const SdeModel& model, std::span<const double> x0, double dt, double t_burn,
                                   std::size_t stride, std::size_t m, std::size_t n_traj, std::uint64_t seed) {
  if (m == 0 || n_traj == 0 || stride == 0) throw config_error("samples", "sample count, trajectories and stride must be positive");
  const std::size_t per = (m + n_traj - 1) / n_traj;
  EnsembleSpec spec;
  spec.n_traj = n_traj;
  spec.dt = dt;
  spec.t_burn = t_burn;
  spec.t_end = t_burn + static_cast<double>(per * stride) * dt;
  spec.seed = seed;
  spec.init = InitKind::Fixed;
  spec.point.assign(x0.begin(), x0.end());
  spec.record_stride = stride;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(model.dim()), static_cast<Eigen::Index>(m));
  std::size_t filled = 0;
  ensemble(model, spec, [&](std::size_t, Trajectory&& t) {
    for (std::size_t i = 1; i < t.size() && filled < m; ++i) {
      const auto x = t.point(i);
      for (std::size_t a = 0; a < model.dim(); ++a) out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(filled)) = x[a];
      ++filled;
    }
  });
  if (filled < m) out.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(filled));
  return out;
}

}  // namespace stochphase

#include "stochphase/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "stochphase/errors.hpp"
#include "stochphase/simulate.hpp"

namespace stochphase {

using ComplexSparse = Eigen::SparseMatrix<cd, Eigen::ColMajor>;

struct ShiftInvert::Impl {
  Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>> lu;
};

ShiftInvert::ShiftInvert(const SparseMatrix& A, cd sigma) : impl_(new Impl), sigma_(sigma) {
  ComplexSparse M = A.cast<cd>();
  for (Eigen::Index k = 0; k < M.rows(); ++k) M.coeffRef(k, k) -= sigma;
  M.makeCompressed();
  impl_->lu.compute(M);
  if (impl_->lu.info() != Eigen::Success) {
    delete impl_;
    throw numerical_error("factorization", "sparse LU of the shifted operator failed");
  }
}

ShiftInvert::~ShiftInvert() { delete impl_; }

Eigen::VectorXcd ShiftInvert::solve(const Eigen::VectorXcd& b) const { return impl_->lu.solve(b); }

namespace {

constexpr Eigen::Index kMaxKrylov = 640;

double inf_norm(const SparseMatrix& A) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(A, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

Eigen::VectorXcd start_vector(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  boost::random::normal_distribution<double> nd;
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cd(nd(rng), nd(rng));
  return v.normalized();
}

double residual(const SparseMatrix& A, const Eigen::VectorXcd& x, cd lambda) {
  const Eigen::VectorXcd r = A.cast<cd>() * x - lambda * x;
  return r.norm() / x.norm();
}

EigenPairs dense_eigs(const SparseMatrix& A, cd sigma, std::size_t count) {
  const Eigen::MatrixXd M(A);
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, true);
  if (es.info() != Eigen::Success) throw numerical_error("no_convergence", "dense eigensolver failed");
  const auto vals = es.eigenvalues();
  const auto vecs = es.eigenvectors();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(vals.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(vals[a] - sigma) < std::abs(vals[b] - sigma); });
  EigenPairs out;
  for (std::size_t k = 0; k < std::min(count, idx.size()); ++k) {
    out.values.push_back(vals[idx[k]]);
    out.vectors.push_back(vecs.col(idx[k]).normalized());
  }
  return out;
}

}  // namespace

EigenPairs eigs_near(const SparseMatrix& A, cd sigma, std::size_t count, const EigenOptions& opts) {
  const Eigen::Index n = A.rows();
  if (count == 0) return {};
  if (static_cast<Eigen::Index>(count) > n) throw config_error("eigs", "more eigenvalues requested than unknowns");
  if (n <= static_cast<Eigen::Index>(opts.dense_threshold)) return dense_eigs(A, sigma, count);

  const ShiftInvert op(A, sigma);
  const double anorm = std::max(inf_norm(A), 1e-300);
  Eigen::Index m =
      std::min<Eigen::Index>(n - 1, static_cast<Eigen::Index>(opts.krylov_dim ? opts.krylov_dim
                                                                               : std::max<std::size_t>(3 * count + 20, 40)));
  Eigen::MatrixXcd V, H;
  Eigen::VectorXcd v0 = start_vector(n, 0x5eed0001ULL);
  std::size_t steps = 0;

  for (std::size_t restart = 0;; ++restart) {
    // Explicit restarts stall on strongly non-normal operators, so the basis
    // grows with every restart.
    if (restart > 0) m = std::min<Eigen::Index>({n - 1, 2 * m, kMaxKrylov});
    V.resize(n, m + 1);
    H = Eigen::MatrixXcd::Zero(m + 1, m);
    V.col(0) = v0.normalized();
    Eigen::Index built = m;
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::VectorXcd w = op.solve(V.col(j));
      ++steps;
      // Classical Gram-Schmidt, applied twice.
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXcd h = V.leftCols(j + 1).adjoint() * w;
        w -= V.leftCols(j + 1) * h;
        H.col(j).head(j + 1) += h;
      }
      const double beta = w.norm();
      H(j + 1, j) = beta;
      if (beta < 1e-14 * H.col(j).head(j + 1).norm()) {
        built = j + 1;
        break;
      }
      V.col(j + 1) = w / beta;
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(H.topLeftCorner(built, built), true);
    const auto theta = ces.eigenvalues();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(built));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(theta[a]) > std::abs(theta[b]); });

    const std::size_t want = std::min<std::size_t>(count, idx.size());
    EigenPairs out;
    out.iterations = steps;
    bool converged = want == count;
    Eigen::VectorXcd next = Eigen::VectorXcd::Zero(n);
    for (std::size_t k = 0; k < want; ++k) {
      const cd th = theta[idx[k]];
      if (std::abs(th) == 0.0) {
        converged = false;
        continue;
      }
      const cd lambda = sigma + 1.0 / th;
      Eigen::VectorXcd x = V.leftCols(built) * ces.eigenvectors().col(idx[k]);
      x.normalize();
      const double res = residual(A, x, lambda);
      if (res > opts.tol * anorm) converged = false;
      next += x;
      out.values.push_back(lambda);
      out.vectors.push_back(std::move(x));
    }
    if (converged) return out;
    if (steps >= opts.max_iterations) {
      throw numerical_error("no_convergence", "shift-invert Arnoldi did not converge within " +
                                                  std::to_string(opts.max_iterations) + " iterations");
    }
    // Explicit restart from the combined wanted Ritz vectors, lightly perturbed
    // so that a deficient start does not stall.
    v0 = next + 1e-3 * start_vector(n, 0x5eed0002ULL + restart) * next.norm();
  }
}

Eigen::VectorXcd inverse_iteration(const SparseMatrix& A, cd lambda, const EigenOptions& opts) {
  const Eigen::Index n = A.rows();
  const double anorm = std::max(inf_norm(A), 1e-300);
  // Shift slightly off the eigenvalue so the factorization stays regular.
  const cd sigma = lambda + cd(1e-7 * (1.0 + std::abs(lambda)), 1e-7 * (1.0 + std::abs(lambda)));
  const ShiftInvert op(A, sigma);
  Eigen::VectorXcd x = start_vector(n, 0x5eed0003ULL);
  for (int it = 0; it < 20; ++it) {
    x = op.solve(x);
    x.normalize();
    if (it >= 1 && residual(A, x, lambda) <= 10 * opts.tol * anorm) return x;
  }
  const double res = residual(A, x, lambda);
  if (res > 1e3 * opts.tol * anorm) {
    throw numerical_error("no_convergence", "inverse iteration residual " + std::to_string(res));
  }
  return x;
}

std::vector<cd> leading_spectrum(const SparseOperator& op, std::size_t count, double omega_est,
                                 const EigenOptions& opts) {
  if (count == 0 || count > 100) throw config_error("count", "leading_spectrum count must be in 1..100");
  std::vector<cd> found;
  const auto add = [&](cd z) {
    for (const cd& f : found)
      if (std::abs(f - z) < 1e-7 * (1.0 + std::abs(z))) return;
    found.push_back(z);
  };
  const Eigen::Index n = op.size();
  if (n <= static_cast<Eigen::Index>(opts.dense_threshold)) {
    for (const cd& z : eigs_near(op.matrix, 0.0, static_cast<std::size_t>(n), opts).values) add(z);
  } else {
    const double w = std::abs(omega_est) > 0 ? std::abs(omega_est) : 1.0;
    const std::size_t per_shift = std::max<std::size_t>(count, 8);
    const int rungs = std::max(2, static_cast<int>(std::ceil(static_cast<double>(count) / 6.0)));
    for (int k = 0; k < rungs; ++k) {
      const cd sigma(0.05 * std::min(w, 1.0), w * k);
      const auto pairs = eigs_near(op.matrix, sigma, std::min<std::size_t>(per_shift, static_cast<std::size_t>(n)), opts);
      for (const cd& z : pairs.values) {
        const cd zz = std::abs(z.imag()) < 1e-9 * (1.0 + std::abs(z)) ? cd(z.real(), 0.0) : z;
        add(zz);
        if (zz.imag() != 0.0) add(std::conj(zz));
      }
    }
  }
  std::stable_sort(found.begin(), found.end(), [](cd a, cd b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  if (found.size() > count) {
    // Keep conjugate pairs together.
    std::size_t keep = count;
    if (found[keep - 1].imag() > 0 && keep < found.size() && found[keep] == std::conj(found[keep - 1])) ++keep;
    found.resize(keep);
  }
  return found;
}

SpectralPair SpectralPair::conjugate() const {
  SpectralPair c;
  c.lambda = std::conj(lambda);
  c.ref_node = ref_node;
  c.P = P;
  c.Q = Q;
  for (auto& v : c.P.values) v = std::conj(v);
  for (auto& v : c.Q.values) v = std::conj(v);
  return c;
}

void anchor_pair(SpectralPair& pair, std::size_t node) {
  const cd q = pair.Q.values[node];
  if (std::abs(q) == 0.0) throw numerical_error("bad_reference", "eigenfunction vanishes at the reference node");
  const cd rot = std::conj(q) / std::abs(q);
  for (auto& v : pair.Q.values) v *= rot;
  for (auto& v : pair.P.values) v /= rot;
  pair.ref_node = node;
}

namespace {

SpectralPair build_pair(const SparseOperator& backward, const SparseOperator& forward, cd lambda,
                        Eigen::VectorXcd q, const std::array<double, 2>* ref, const EigenOptions& opts) {
  if (backward.kind != SparseOperator::Kind::Backward || forward.kind != SparseOperator::Kind::Forward)
    throw config_error("operator", "expected a backward and a forward operator");
  Eigen::VectorXcd p = inverse_iteration(forward.matrix, lambda, opts);
  const Eigen::VectorXcd w = backward.weights.cast<cd>();
  const cd inner = (q.array() * p.array() * w.array()).sum();
  if (std::abs(inner) < 1e-12 * q.norm() * p.norm() * backward.weights.maxCoeff())
    throw numerical_error("defective", "forward and backward eigenvectors are nearly orthogonal");
  p /= inner;

  SpectralPair pair;
  pair.lambda = lambda;
  pair.Q = backward.expand(q, cd(0.0));
  pair.P = backward.expand(p, cd(0.0));
  std::size_t node;
  if (ref) {
    node = backward.grid->nearest_valid_node((*ref)[0], (*ref)[1]);
  } else {
    Eigen::Index k;
    q.cwiseAbs().maxCoeff(&k);
    node = static_cast<std::size_t>(backward.node_of[static_cast<std::size_t>(k)]);
  }
  anchor_pair(pair, node);
  // max |Q| = 1; P takes the inverse factor so <Q|P> stays 1.
  const double qmax = q.cwiseAbs().maxCoeff();
  for (auto& v : pair.Q.values) v /= qmax;
  for (auto& v : pair.P.values) v *= qmax;
  return pair;
}

}  // namespace

SpectralPair slowest_mode(const SparseOperator& backward, const SparseOperator& forward, double omega_est,
                          const std::array<double, 2>* ref, const EigenOptions& opts) {
  const std::size_t count = std::min<std::size_t>(10, static_cast<std::size_t>(backward.size()));
  const EigenPairs pairs = eigs_near(backward.matrix, cd(0.0, std::abs(omega_est)), count, opts);
  const double scale = 1.0 + std::abs(omega_est);
  int best = -1;
  for (std::size_t k = 0; k < pairs.values.size(); ++k) {
    const cd z = pairs.values[k];
    if (z.imag() <= 1e-8 * scale) continue;
    if (best < 0 || z.real() > pairs.values[static_cast<std::size_t>(best)].real()) best = static_cast<int>(k);
  }
  if (best < 0) throw numerical_error("not_oscillatory", "no complex eigenvalue near the frequency estimate");
  const cd lambda = pairs.values[static_cast<std::size_t>(best)];
  for (std::size_t k = 0; k < pairs.values.size(); ++k) {
    if (static_cast<int>(k) == best) continue;
    if (std::abs(pairs.values[k] - lambda) < 1e-3)
      throw numerical_error("ambiguous_mode", "another eigenvalue lies within 1e-3 of lambda_1");
  }
  return build_pair(backward, forward, lambda, pairs.vectors[static_cast<std::size_t>(best)], ref, opts);
}

SpectralPair mode_near(const SparseOperator& backward, const SparseOperator& forward, cd target,
                       const std::array<double, 2>* ref, const EigenOptions& opts) {
  const EigenPairs pairs = eigs_near(backward.matrix, target, 1, opts);
  return build_pair(backward, forward, pairs.values[0], pairs.vectors[0], ref, opts);
}

SpectralPair stationary_pair(const SparseOperator& backward, const RealField& P0) {
  SpectralPair pair;
  pair.lambda = 0.0;
  pair.Q = ComplexField(backward.grid, cd(0.0));
  pair.P = ComplexField(backward.grid, cd(0.0));
  const double mass = integrate(P0);
  for (int node : backward.node_of) {
    pair.Q.values[static_cast<std::size_t>(node)] = 1.0;
    pair.P.values[static_cast<std::size_t>(node)] = P0.values[static_cast<std::size_t>(node)] / mass;
  }
  pair.ref_node = static_cast<std::size_t>(backward.node_of.front());
  return pair;
}

RobustnessReport robustly_oscillatory_check(const std::vector<cd>& spectrum, double q_min) {
  RobustnessReport r;
  if (spectrum.empty()) {
    r.failing = "empty spectrum";
    return r;
  }
  // The stationary value is the one closest to zero.
  std::size_t zero = 0;
  for (std::size_t k = 1; k < spectrum.size(); ++k)
    if (std::abs(spectrum[k]) < std::abs(spectrum[zero])) zero = k;
  std::vector<cd> rest;
  for (std::size_t k = 0; k < spectrum.size(); ++k)
    if (k != zero) rest.push_back(spectrum[k]);
  if (rest.size() < 3) {
    r.failing = "fewer than 3 nontrivial eigenvalues";
    return r;
  }
  const auto slowest =
      std::max_element(rest.begin(), rest.end(), [](cd a, cd b) { return a.real() < b.real(); });
  const double tiny = 1e-9 * (1.0 + std::abs(*slowest));
  if (std::abs(slowest->imag()) <= tiny) {
    r.failing = "slowest nontrivial eigenvalue is real";
    return r;
  }
  const cd l1(slowest->real(), std::abs(slowest->imag()));
  r.lambda1 = l1;
  r.q_factor = l1.real() != 0.0 ? std::abs(l1.imag() / l1.real()) : std::numeric_limits<double>::infinity();
  r.gap_ratio = std::numeric_limits<double>::infinity();
  bool unique = true;
  for (const cd& z : rest) {
    const bool is_l1 = std::abs(z - l1) <= tiny || std::abs(z - std::conj(l1)) <= tiny;
    if (is_l1) continue;
    if (z.real() >= l1.real()) unique = false;
    if (l1.real() != 0.0) r.gap_ratio = std::min(r.gap_ratio, std::abs(z.real()) / std::abs(l1.real()));
  }
  if (!unique) {
    r.failing = "lambda_1 is not the unique slowest mode";
  } else if (!(r.q_factor > q_min)) {
    r.failing = "quality factor |omega_1/mu_1| below q_min";
  } else if (!(r.gap_ratio >= 2.0)) {
    r.failing = "spectral gap condition |Re lambda'| >= 2|Re lambda_1| violated";
  }
  r.verdict = r.failing.empty();
  return r;
}

double biorthogonality_check(const std::vector<SpectralPair>& pairs) {
  double worst = 0.0;
  for (std::size_t a = 0; a < pairs.size(); ++a) {
    const Grid2D& g = *pairs[a].Q.grid;
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      cd s = 0.0;
      for (std::size_t node = 0; node < g.size(); ++node) {
        if (!g.is_valid(node)) continue;
        s += g.cell_weight(node) * pairs[a].Q.values[node] * pairs[b].P.values[node];
      }
      worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace stochphase

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochphase/operator.hpp"

namespace stochphase {

struct EigenOptions {
  std::size_t max_iterations = 10000;  // cap on Arnoldi steps summed over restarts
  double tol = 1e-9;                   // residual |Ax - lambda x| relative to |A|_inf
  std::size_t krylov_dim = 0;          // 0 picks max(3*count + 20, 40)
  std::size_t dense_threshold = 1600;  // dense QR algorithm at or below this size
};

struct EigenPairs {
  std::vector<cd> values;               // sorted by distance to the shift
  std::vector<Eigen::VectorXcd> vectors;  // unit 2-norm
  std::size_t iterations = 0;
};

/// `count` eigenpairs of A closest to sigma, by shift-invert Arnoldi with
/// explicit restarts (dense solver for small A).
EigenPairs eigs_near(const SparseMatrix& A, cd sigma, std::size_t count, const EigenOptions& opts = {});

/// Sparse LU of (A - sigma I) over the complex numbers.
class ShiftInvert {
 public:
  ShiftInvert(const SparseMatrix& A, cd sigma);
  ~ShiftInvert();
  ShiftInvert(const ShiftInvert&) = delete;
  ShiftInvert& operator=(const ShiftInvert&) = delete;

  Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;
  cd shift() const { return sigma_; }

 private:
  struct Impl;
  Impl* impl_;
  cd sigma_;
};

/// Eigenvector for an eigenvalue known to good accuracy, by inverse iteration.
Eigen::VectorXcd inverse_iteration(const SparseMatrix& A, cd lambda, const EigenOptions& opts = {});

/// Eigenvalues with the largest real parts. Shifts are placed along the
/// imaginary axis at multiples of the frequency estimate; conjugates are added
/// so nonreal values come in pairs. Sorted by descending real part.
std::vector<cd> leading_spectrum(const SparseOperator& op, std::size_t count, double omega_est,
                                 const EigenOptions& opts = {});

struct SpectralPair {
  cd lambda;
  ComplexField P;  // forward eigenfunction
  ComplexField Q;  // backward eigenfunction
  std::size_t ref_node = 0;

  SpectralPair conjugate() const;
};

/// Slowest decaying oscillatory mode (omega_1 > 0 branch). Normalised so that
/// max |Q| = 1, Q(ref) is real positive and sum_i w_i Q_i P_i = 1.
/// `ref` picks the gauge node; when absent the node of largest |Q| is used.
SpectralPair slowest_mode(const SparseOperator& backward, const SparseOperator& forward, double omega_est,
                          const std::array<double, 2>* ref = nullptr, const EigenOptions& opts = {});

/// Pair for the eigenvalue closest to `target`, normalised as above.
SpectralPair mode_near(const SparseOperator& backward, const SparseOperator& forward, cd target,
                       const std::array<double, 2>* ref = nullptr, const EigenOptions& opts = {});

/// The stationary pair: lambda = 0, Q = 1, P = P0.
SpectralPair stationary_pair(const SparseOperator& backward, const RealField& P0);

/// Re-fixes the global phase so that Q(node) is real positive.
void anchor_pair(SpectralPair& pair, std::size_t node);

struct RobustnessReport {
  double q_factor = 0.0;   // |omega_1 / mu_1|
  double gap_ratio = 0.0;  // min |Re lambda'| / |Re lambda_1| over the other nontrivial values
  bool verdict = false;
  std::string failing;     // first failing condition, empty if verdict is true
  cd lambda1 = 0.0;
};

inline constexpr double kDefaultQMin = 10.0;

RobustnessReport robustly_oscillatory_check(const std::vector<cd>& spectrum, double q_min = kDefaultQMin);

/// max |<Q_a|P_b> - delta_ab| with <Q|P> = sum_i w_i Q_i P_i (no conjugation).
double biorthogonality_check(const std::vector<SpectralPair>& pairs);

}  // namespace stochphase

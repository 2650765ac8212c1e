#pragma once

#include <vector>

#include <Eigen/Sparse>

#include "stochphase/grid.hpp"
#include "stochphase/models.hpp"

namespace stochphase {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class DifferenceScheme {
  Central,       // second-order central differences everywhere
  PecletUpwind,  // first-order upwind drift where the cell Peclet number exceeds a threshold
};

struct AssemblyOptions {
  DifferenceScheme scheme = DifferenceScheme::Central;
  double peclet_threshold = 2.0;
  /// PecletUpwind only: fraction of nodes above threshold that raises a resolution error.
  double max_peclet_fraction = 0.4;
};

/// Kolmogorov operator restricted to the valid nodes of a grid.
struct SparseOperator {
  enum class Kind { Backward, Forward };

  Kind kind = Kind::Backward;
  GridPtr grid;
  SparseMatrix matrix;
  std::vector<int> node_of;     // unknown -> grid node
  std::vector<int> unknown_of;  // grid node -> unknown, -1 if masked
  Eigen::VectorXd weights;      // cell volume per unknown
  double peclet_fraction = 0.0; // share of nodes with cell Peclet number above threshold
  std::size_t upwind_nodes = 0;

  Eigen::Index size() const { return matrix.rows(); }

  Eigen::VectorXd restrict(const RealField& f) const;
  Eigen::VectorXcd restrict(const ComplexField& f) const;
  /// Expands an unknown vector into a field; masked nodes get `fill`.
  RealField expand(const Eigen::VectorXd& v, double fill = 0.0) const;
  ComplexField expand(const Eigen::VectorXcd& v, cd fill = 0.0) const;
};

/// Backward operator f.grad F + G : grad^2 F with zero-flux (G grad F).n = 0
/// rows obtained by mirror ghost nodes. Masked neighbours are mirrored the same way.
SparseOperator assemble_backward(const SdeModel& model, GridPtr grid,
                                 const AssemblyOptions& opts = {});

/// Discrete adjoint W^{-1} B^T W of a backward operator B (W = cell volumes).
SparseOperator assemble_forward(const SparseOperator& backward);
SparseOperator assemble_forward(const SdeModel& model, GridPtr grid, const AssemblyOptions& opts = {});

/// sum_i w_i u_i v_i
double weighted_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Eigen::VectorXd& w);

struct StationaryReport {
  double clipped_mass = 0.0;      // negative mass removed before renormalising
  double second_eigenvalue_abs = 0.0;
};

/// Normalised null vector of the forward operator: P0 >= 0, cell integral 1.
RealField stationary_density(const SparseOperator& forward, StationaryReport* report = nullptr);

/// Stationary probability current built from the operator's edge fluxes.
struct CurrentField {
  VectorField2D J;                 // node-averaged current vector
  std::vector<double> flux_x;      // net flux from node (i,j) to (i+1,j); index j*(nx-1)+i
  std::vector<double> flux_y;      // net flux from node (i,j) to (i,j+1); index j*nx+i
  RealField divergence;            // net outflow per unit cell volume
};

/// J = f P - div(G P). Each edge carries m_a B_ab - m_b B_ba (m = W P, B the
/// backward matrix), so the discrete divergence is -(forward P) exactly.
CurrentField stationary_current(const SparseOperator& backward, const RealField& P0);
CurrentField stationary_current(const SdeModel& model, const RealField& P0,
                                const AssemblyOptions& opts = {});

/// Circulation of the stationary current, read off the discrete stream function
/// S (cumulative x-flux up each column). The core is the centroid of the cells
/// where |S| is within 0.1% of its maximum; max |S| is the probability flux
/// through any ray from the core to the boundary.
struct Circulation {
  std::array<double, 2> core{0.0, 0.0};
  double flux = 0.0;     // 1 / mean period
  int orientation = 0;   // +1 counterclockwise, -1 clockwise
  double rate() const;   // 2 pi * flux
};
Circulation circulation(const CurrentField& current);

}  // namespace stochphase

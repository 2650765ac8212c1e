#pragma once

#include <array>
#include <string>

#include "stochphase/operator.hpp"
#include "stochphase/spectrum.hpp"

namespace stochphase {

enum class PhaseLabel { Asymptotic, Mrt };

std::string to_string(PhaseLabel label);

/// Amplitude floor relative to max |Q|; nodes below it carry no phase.
inline constexpr double kAmplitudeFloor = 1e-3;

/// Circular-valued map on a grid. `companion` is Q for the asymptotic phase and
/// exp(i Theta) for the MRT phase; lookups interpolate it, never the angle.
struct PhaseField {
  GridPtr grid;
  PhaseLabel label = PhaseLabel::Asymptotic;
  RealField phase;                  // wrapped to [0, 2pi); NaN where undefined
  ComplexField companion;
  std::vector<std::uint8_t> valid;  // phase defined at the node
  std::array<double, 2> x_ref{0.0, 0.0};
  std::size_t ref_node = 0;
  double rate = 0.0;                // omega_1 for Psi, 2pi/Tbar for Theta

  bool is_valid(std::size_t node) const { return valid[node] != 0; }
};

struct AsymptoticPhase {
  PhaseField psi;
  RealField u;  // |Q|
};

/// Psi = arg Q, u = |Q|, rotated so that Psi(x_ref) = 0.
AsymptoticPhase asymptotic_phase(const SpectralPair& pair, const std::array<double, 2>& x_ref);

/// grad Q / Q per node by central differences on the complex field; one-sided
/// next to boundaries and masked nodes. Real part is grad ln u, imaginary part
/// grad Psi.
struct LogGradient {
  ComplexField gx, gy;
  std::vector<std::uint8_t> valid;
};
LogGradient log_gradient(const ComplexField& z, double floor_fraction = kAmplitudeFloor);

/// grad Phi from the companion field: (Re z grad Im z - Im z grad Re z) / |z|^2.
VectorField2D phase_gradient(const PhaseField& field);
VectorField2D phase_gradient(const SpectralPair& pair);

/// Omega = 2 grad(ln u)^T G grad Psi; NaN where u is below the floor.
RealField omega_field(const SdeModel& model, const SpectralPair& pair);

/// A = P0 (omega_1 - Omega); NaN where Omega is undefined.
RealField drift_diagnostic_field(const SdeModel& model, const RealField& P0, const SpectralPair& pair);

/// Ray from `anchor` at angle `angle` (radians from the +x axis).
struct Cut {
  std::array<double, 2> anchor{0.0, 0.0};
  double angle = 0.0;
};

struct MrtSolution {
  GridPtr grid;
  RealField T;                 // branch cut along `cut`; NaN at masked nodes
  double Tbar = 0.0;           // mean period
  Cut cut;
  int jump_sign = 1;           // T jumps by jump_sign * Tbar going counterclockwise across the cut
  std::size_t gauge_node = 0;
  double residual = 0.0;       // max |L T + 1| over rows without cut couplings
  double cut_residual = 0.0;   // same over rows whose stencil crosses the cut (jump condition)
  std::size_t cut_rows = 0;
};

/// True if the diffusion tensor is nondegenerate at sampled points of the
/// model's domain (grid nodes when a grid is given).
bool strongly_elliptic(const SdeModel& model, const Grid2D* grid = nullptr);

/// Solves L T = -1 with a jump of Tbar across the cut, as one sparse system in
/// (T, Tbar). Refuses models whose diffusion tensor is degenerate.
MrtSolution mrt_solve(const SdeModel& model, GridPtr grid, const Cut& cut, const AssemblyOptions& opts = {});
MrtSolution mrt_solve(const SdeModel& model, const SparseOperator& backward, const Cut& cut);

/// Theta = (2pi/Tbar)(T0 - T) with T0 = T(x_ref).
PhaseField mrt_phase(const MrtSolution& sol, const std::array<double, 2>& x_ref);

/// max |L Theta - 2pi/Tbar| over valid rows, with Theta continued across the cut.
double mrt_generator_residual(const SparseOperator& backward, const MrtSolution& sol);

/// Node with the largest P0 on the ray from `core` along +x.
std::array<double, 2> reference_point(const RealField& P0, const std::array<double, 2>& core);

struct LookupResult {
  double phase = 0.0;
  bool flagged = false;  // fell back to the nearest valid node
};

/// Bilinear interpolation of the companion followed by arg. Corners without a
/// phase are dropped; if none remain the nearest valid node is used and the
/// result flagged. Throws outside the grid.
class PhaseLookup {
 public:
  explicit PhaseLookup(const PhaseField& field);
  LookupResult operator()(double x, double y) const;
  const PhaseField& field() const { return *field_; }

 private:
  const PhaseField* field_;
  std::vector<cd> values_;  // companion, zero where the phase is undefined
};

double phase_lookup(const PhaseField& field, double x, double y);

/// Bilinear lookup of a vector field using only valid corners. Returns false
/// if no corner is valid.
bool vector_lookup(const VectorField2D& v, double x, double y, double& vx, double& vy);

/// Resultant length |mean exp(i(a - b))| of paired angles: 1 exactly when the
/// two samples differ by a constant rotation. Used as the circular correlation.
double circular_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace stochphase

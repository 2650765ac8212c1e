#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stochphase/models.hpp"
#include "stochphase/response.hpp"
#include "stochphase/simulate.hpp"

namespace stochphase {

inline constexpr std::size_t kRegionLattice = 32;
/// Minimum share of samples for a lattice cell to join the region.
inline constexpr double kRegionThreshold = 1e-5;
/// Dominant connected component share below which a region is fragmented.
inline constexpr double kRegionConnectedShare = 0.9;

/// Box plus an occupancy mask over a coarse lattice of cells.
struct Region {
  Box box;
  std::size_t lattice = kRegionLattice;
  std::vector<std::uint8_t> mask;       // lattice^dim cells, first axis fastest
  std::vector<std::uint64_t> visits;
  std::vector<std::size_t> cells;       // indices of region cells
  double threshold = kRegionThreshold;
  double dominant_share = 1.0;          // largest face-connected component / region cells
  bool fragmented = false;

  std::size_t dim() const { return box.dim(); }
  /// Cell index of x, or npos outside the box.
  std::size_t cell_of(std::span<const double> x) const;
  bool contains(std::span<const double> x) const;
  /// x itself inside the region, else x clamped into the nearest region cell.
  std::vector<double> project(std::span<const double> x) const;
  std::vector<double> cell_centre(std::size_t cell) const;
  /// Centre of the most visited cell.
  std::vector<double> mode() const;
  /// FNV-1a digest of the mask, as hex.
  std::string digest() const;
};

/// Region from the occupancy of a stationary trajectory. The box is the
/// sample bounding box padded by `pad` of its width on each side.
Region region_select(const Trajectory& traj, double pad = 0.05, double threshold = kRegionThreshold,
                     std::size_t lattice = kRegionLattice);

/// Monomials of total degree <= degree in z = (x - center) / scale, graded.
class MonomialBasis {
 public:
  MonomialBasis(std::size_t dim, int degree, std::vector<double> center, std::vector<double> scale);
  /// Inputs mapped affinely onto [-1, 1] over the box.
  static MonomialBasis over(const Box& box, int degree);

  std::size_t size() const { return exponents_.size(); }
  std::size_t dim() const { return dim_; }
  int degree() const { return degree_; }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }
  const std::vector<double>& center() const { return center_; }
  const std::vector<double>& scale() const { return scale_; }

  void values(std::span<const double> x, Eigen::Ref<Eigen::VectorXd> out) const;
  /// k x dim gradient with respect to x.
  void gradients(std::span<const double> x, Eigen::Ref<Eigen::MatrixXd> out) const;
  /// Hessian of basis function j with respect to x.
  Eigen::MatrixXd hessian(std::size_t j, std::span<const double> x) const;
  /// f . grad F_j + G : hess F_j for every j, given drift f and G = g g^T / 2.
  void generator(std::span<const double> x, const Eigen::VectorXd& f, const Eigen::MatrixXd& G,
                 Eigen::Ref<Eigen::VectorXd> out) const;

 private:
  void powers(std::span<const double> x, std::vector<double>& pw) const;

  std::size_t dim_;
  int degree_;
  std::vector<double> center_, scale_;
  std::vector<std::vector<int>> exponents_;
};

/// Basis values at the columns of `samples` (dim x m): k x m.
Eigen::MatrixXd evaluate_basis(const MonomialBasis& basis, const Eigen::MatrixXd& samples);

/// Generator applied to the basis at the columns of `samples`: k x m.
Eigen::MatrixXd apply_generator(const SdeModel& model, const MonomialBasis& basis, const Eigen::MatrixXd& samples);

struct GeneratorFit {
  Eigen::MatrixXd L;      // L F_X ~ dF
  double residual = 0.0;  // |L F_X - dF|_F
  double condition = 0.0; // of the regularised Gram matrix
  double ridge = 0.0;
};

/// Relative ridge on the Gram matrix, times trace / k.
inline constexpr double kRidge = 1e-8;
inline constexpr double kMaxCondition = 1e12;
/// Iterated-ridge refinement steps after the first solve.
inline constexpr int kRefinementSteps = 2;

/// Normal-equation accumulator, so samples can be streamed in blocks.
class GeneratorAccumulator {
 public:
  explicit GeneratorAccumulator(std::size_t k);
  void add(const Eigen::MatrixXd& FX, const Eigen::MatrixXd& dF);
  GeneratorFit fit(double ridge = kRidge) const;
  std::size_t samples() const { return m_; }

 private:
  Eigen::MatrixXd A_, C_;
  double dd_ = 0.0;
  std::size_t m_ = 0;
};

GeneratorFit fit_generator(const Eigen::MatrixXd& FX, const Eigen::MatrixXd& dF, double ridge = kRidge);

/// Eigenvalues of the fitted generator; eigvecs are coefficient vectors v with
/// L^T v = lambda v, so that sum_i v_i F_i is an eigenfunction.
struct GeneratorSpectrum {
  std::vector<cd> values;  // sorted by descending real part
  std::vector<Eigen::VectorXcd> vectors;
};
GeneratorSpectrum generator_spectrum(const Eigen::MatrixXd& L);

struct GedmdOptions {
  int degree = 10;
  std::size_t block = 2048;
  double ridge = kRidge;
  double omega_hint = 0.0;  // > 0 restricts lambda_1 to imaginary parts within half of it
};

struct GedmdModel {
  MonomialBasis basis{1, 2, {0.0}, {1.0}};
  Region region;
  Eigen::MatrixXd L;
  std::vector<cd> eigenvalues;
  cd lambda1;
  Eigen::VectorXcd v;          // Q(x) = sum_i v_i F_i(x), max |Q| over the samples = 1
  std::vector<double> x_ref;   // phase origin
  double residual = 0.0;
  double condition = 0.0;
  std::size_t samples = 0;
};

/// Fit on the columns of `samples` (dim x m, m >= 10 k) restricted to `region`.
GedmdModel gedmd_fit(const SdeModel& model, const Eigen::MatrixXd& samples, const Region& region,
                     const GedmdOptions& opts = {}, const std::vector<double>& x_ref = {});

struct GedmdPhase {
  double phase = 0.0;      // wrapped, 0 at x_ref
  double amplitude = 0.0;  // |Q|
  bool masked = false;     // amplitude below the floor
};

cd gedmd_eigenfunction(const GedmdModel& g, std::span<const double> x);
/// Throws out_of_region outside the region.
GedmdPhase gedmd_phase(const GedmdModel& g, std::span<const double> x);
/// (Re Q grad Im Q - Im Q grad Re Q) / |Q|^2; throws masked below the floor.
std::vector<double> gedmd_phase_gradient(const GedmdModel& g, std::span<const double> x);

/// Lookups for series and response estimators. Points outside the region are
/// projected onto it and flagged; masked points are flagged.
PhaseFn gedmd_phase_fn(const GedmdModel& g);
GradientFn gedmd_gradient_fn(const GedmdModel& g);

/// Stationary samples: columns taken every `stride` steps from an ensemble of
/// trajectories started at `x0` after burn-in.
Eigen::MatrixXd stationary_samples(const SdeModel& model, std::span<const double> x0, double dt, double t_burn,
                                   std::size_t stride, std::size_t m, std::size_t n_traj, std::uint64_t seed);

}  // namespace stochphase

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stochphase/models.hpp"

namespace stochphase {

using cd = std::complex<double>;

/// Rectangular node grid with a validity mask. Node (i, j) sits at
/// (x_min + i hx, y_min + j hy) and has flat index j * nx + i.
struct Grid2D {
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  std::size_t nx = 0, ny = 0;
  std::vector<std::uint8_t> valid;  // 0 where the node is masked

  /// Grid over `box`; nodes where `model` reports a singular point are masked.
  static std::shared_ptr<const Grid2D> create(const Box& box, std::size_t nx, std::size_t ny,
                                              const SdeModel* model = nullptr);

  double hx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
  double hy() const { return (y_max - y_min) / static_cast<double>(ny - 1); }
  double x(std::size_t i) const { return x_min + static_cast<double>(i) * hx(); }
  double y(std::size_t j) const { return y_min + static_cast<double>(j) * hy(); }
  std::array<double, 2> point(std::size_t node) const { return {x(node % nx), y(node / nx)}; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
  std::size_t size() const { return nx * ny; }
  bool is_valid(std::size_t node) const { return valid[node] != 0; }
  bool contains(double px, double py) const {
    return px >= x_min && px <= x_max && py >= y_min && py <= y_max;
  }
  /// Trapezoid cell volume: hx*hy in the interior, halved per boundary axis.
  double cell_weight(std::size_t node) const;
  std::size_t nearest_node(double px, double py) const;
  /// Nearest valid node (searching outward); throws if the grid has none.
  std::size_t nearest_valid_node(double px, double py) const;
  /// FNV-1a digest of the mask, as hex.
  std::string mask_digest() const;
};

using GridPtr = std::shared_ptr<const Grid2D>;

template <class T>
struct GridField {
  GridPtr grid;
  std::vector<T> values;

  GridField() = default;
  GridField(GridPtr g, T fill) : grid(std::move(g)), values(grid->size(), fill) {}
  GridField(GridPtr g, std::vector<T> v) : grid(std::move(g)), values(std::move(v)) {}

  T& operator[](std::size_t node) { return values[node]; }
  const T& operator[](std::size_t node) const { return values[node]; }
};

using RealField = GridField<double>;
using ComplexField = GridField<cd>;

/// Two-component field with its own validity flags.
struct VectorField2D {
  GridPtr grid;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::uint8_t> valid;

  explicit VectorField2D(GridPtr g = nullptr)
      : grid(std::move(g)),
        x(grid ? grid->size() : 0, 0.0),
        y(grid ? grid->size() : 0, 0.0),
        valid(grid ? grid->size() : 0, 0) {}
};

/// Cell-quadrature integral over valid nodes.
double integrate(const RealField& f);

/// Bilinear interpolation; NaN if the point is outside the grid.
double interpolate(const RealField& f, double px, double py);

}  // namespace stochphase

#include "stochphase/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "stochphase/errors.hpp"

namespace stochphase {

std::shared_ptr<const Grid2D> Grid2D::create(const Box& box, std::size_t nx, std::size_t ny,
                                             const SdeModel* model) {
  if (box.dim() != 2) throw config_error("grid", "grid box must be two-dimensional");
  if (nx < 16 || ny < 16) throw config_error("grid", "grid needs at least 16 nodes per axis");
  auto g = std::make_shared<Grid2D>();
  g->x_min = box.lower[0];
  g->x_max = box.upper[0];
  g->y_min = box.lower[1];
  g->y_max = box.upper[1];
  g->nx = nx;
  g->ny = ny;
  if (!(g->hx() > 0) || !(g->hy() > 0)) throw config_error("grid", "degenerate grid bounds");
  g->valid.assign(nx * ny, 1);
  if (model) {
    for (std::size_t node = 0; node < g->size(); ++node) {
      const auto p = g->point(node);
      if (model->is_singular(p)) g->valid[node] = 0;
    }
  }
  return g;
}

double Grid2D::cell_weight(std::size_t node) const {
  const std::size_t i = node % nx, j = node / nx;
  double w = hx() * hy();
  if (i == 0 || i + 1 == nx) w *= 0.5;
  if (j == 0 || j + 1 == ny) w *= 0.5;
  return w;
}

std::size_t Grid2D::nearest_node(double px, double py) const {
  const auto clamp_index = [](double t, std::size_t n) {
    const double r = std::round(t);
    if (r < 0) return std::size_t{0};
    if (r > static_cast<double>(n - 1)) return n - 1;
    return static_cast<std::size_t>(r);
  };
  return index(clamp_index((px - x_min) / hx(), nx), clamp_index((py - y_min) / hy(), ny));
}

std::size_t Grid2D::nearest_valid_node(double px, double py) const {
  const std::size_t start = nearest_node(px, py);
  if (is_valid(start)) return start;
  const long i0 = static_cast<long>(start % nx), j0 = static_cast<long>(start / nx);
  const long maxr = static_cast<long>(std::max(nx, ny));
  for (long r = 1; r < maxr; ++r) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_node = size();
    for (long dj = -r; dj <= r; ++dj) {
      for (long di = -r; di <= r; ++di) {
        if (std::max(std::labs(di), std::labs(dj)) != r) continue;
        const long i = i0 + di, j = j0 + dj;
        if (i < 0 || j < 0 || i >= static_cast<long>(nx) || j >= static_cast<long>(ny)) continue;
        const std::size_t node = index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        if (!is_valid(node)) continue;
        const auto p = point(node);
        const double d = std::hypot(p[0] - px, p[1] - py);
        if (d < best) {
          best = d;
          best_node = node;
        }
      }
    }
    if (best_node < size()) return best_node;
  }
  throw numerical_error("empty_grid", "grid has no valid node");
}

std::string Grid2D::mask_digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto v : valid) {
    h ^= v;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double integrate(const RealField& f) {
  double s = 0.0;
  const Grid2D& g = *f.grid;
  for (std::size_t node = 0; node < g.size(); ++node) {
    if (g.is_valid(node) && std::isfinite(f.values[node])) s += g.cell_weight(node) * f.values[node];
  }
  return s;
}

double interpolate(const RealField& f, double px, double py) {
  const Grid2D& g = *f.grid;
  if (!g.contains(px, py)) return std::numeric_limits<double>::quiet_NaN();
  const double tx = (px - g.x_min) / g.hx(), ty = (py - g.y_min) / g.hy();
  std::size_t i = std::min(static_cast<std::size_t>(tx), g.nx - 2);
  std::size_t j = std::min(static_cast<std::size_t>(ty), g.ny - 2);
  const double fx = tx - static_cast<double>(i), fy = ty - static_cast<double>(j);
  const auto v = [&](std::size_t a, std::size_t b) { return f.values[g.index(a, b)]; };
  return (1 - fx) * (1 - fy) * v(i, j) + fx * (1 - fy) * v(i + 1, j) + (1 - fx) * fy * v(i, j + 1) +
         fx * fy * v(i + 1, j + 1);
}

}  // namespace stochphase

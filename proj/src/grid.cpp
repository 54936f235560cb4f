#include "frisam/types.hpp"

#include <algorithm>

namespace frisam {

double GridSpec::q_abs_max() const {
  double qm = 0.0;
  for (std::size_t m = 0; m < n_x; ++m) qm = std::max(qm, std::abs(q_at(m)));
  return qm;
}

void validate_grid(const GridSpec& g) {
  if (g.n_x < 2) throw config_error("grid: n_x must be >= 2");
  if (g.n_z < 4) throw config_error("grid: n_z must be >= 4");
  if (g.n_z % 2 != 0)
    throw config_error("grid: n_z must be even (zero delay sits at n_z/2)");
  if (!(g.lateral_pitch > 0.0) || !std::isfinite(g.lateral_pitch))
    throw config_error("grid: lateral_pitch must be positive and finite");
  if (g.focal_z_index >= g.n_z)
    throw config_error("grid: focal_z_index out of range");
  if (g.k_grid.size() != g.n_z)
    throw config_error("grid: k_grid length does not equal n_z");
  for (double k : g.k_grid)
    if (!std::isfinite(k)) throw config_error("grid: non-finite wavenumber");

  // strictly increasing, uniform to 1e-9 relative
  double mean_step = (g.k_grid.back() - g.k_grid.front()) / double(g.n_z - 1);
  if (!(mean_step > 0.0))
    throw config_error("grid: k_grid must be strictly increasing");
  for (std::size_t i = 0; i + 1 < g.n_z; ++i) {
    double step = g.k_grid[i + 1] - g.k_grid[i];
    if (!(step > 0.0))
      throw config_error("grid: k_grid must be strictly increasing");
    if (std::abs(step - mean_step) > 1e-9 * mean_step)
      throw config_error("grid: k_grid is not uniform");
  }
}

GridSpec make_grid(std::size_t n_x, std::size_t n_z, double k_min,
                   double k_max, double lateral_pitch,
                   std::size_t focal_z_index) {
  if (n_x == 0 || n_z == 0) throw config_error("make_grid: counts must be positive");
  if (!(k_min < k_max))
    throw config_error("make_grid: reversed or empty wavenumber range");
  if (!std::isfinite(k_min) || !std::isfinite(k_max))
    throw config_error("make_grid: non-finite wavenumber bounds");

  GridSpec g;
  g.n_x = n_x;
  g.n_z = n_z;
  g.lateral_pitch = lateral_pitch;
  g.focal_z_index = focal_z_index;
  g.k_grid.resize(n_z);
  const double step = (k_max - k_min) / double(n_z - 1);
  for (std::size_t i = 0; i < n_z; ++i)
    g.k_grid[i] = k_min + step * double(i);
  g.k_grid.back() = k_max;  // exact endpoint
  validate_grid(g);
  return g;
}

double l2_norm(const RealArray& a) {
  double s = 0.0;
  for (double v : a.flat()) s += v * v;
  return std::sqrt(s);
}

double l2_norm(const ComplexArray& a) {
  double s = 0.0;
  for (const cplx& v : a.flat()) s += std::norm(v);
  return std::sqrt(s);
}

cplx dot(const ComplexArray& a, const ComplexArray& b) {
  cplx s = 0.0;
  const auto& av = a.flat();
  const auto& bv = b.flat();
  for (std::size_t i = 0; i < av.size(); ++i) s += std::conj(av[i]) * bv[i];
  return s;
}

}  // namespace frisam

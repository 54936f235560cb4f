#include "frisam/dispersion.hpp"

#include <algorithm>
#include <array>

#include "frisam/fft.hpp"

namespace frisam {

namespace {

std::vector<double> eval_phase(const GridSpec& grid, double k_0,
                               const std::vector<double>& coeffs) {
  std::vector<double> phase(grid.n_z, 0.0);
  for (std::size_t i = 0; i < grid.n_z; ++i) {
    const double dkk = grid.k_grid[i] - k_0;
    double p = 0.0;
    double dk_pow = dkk * dkk;  // starts at power 2
    for (double c : coeffs) {
      p += c * dk_pow;
      dk_pow *= dkk;
    }
    phase[i] = p;
  }
  return phase;
}

}  // namespace

DispersionModel dispersion_phase(const GridSpec& grid, double k_0,
                                 const std::vector<double>& coeffs) {
  if (!std::isfinite(k_0))
    throw config_error("dispersion: non-finite center wavenumber");
  if (coeffs.size() > 4)
    throw config_error("dispersion: polynomial order above 5 not supported");
  for (double c : coeffs)
    if (!std::isfinite(c))
      throw config_error("dispersion: non-finite coefficient");
  DispersionModel d;
  d.k_0 = k_0;
  d.coeffs = coeffs;
  d.phase = eval_phase(grid, k_0, coeffs);
  return d;
}

void validate_dispersion(const DispersionModel& d, const GridSpec& grid) {
  if (d.phase.size() != grid.n_z)
    throw config_error("dispersion: phase length does not match grid");
  const auto ref = eval_phase(grid, d.k_0, d.coeffs);
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (std::abs(ref[i] - d.phase[i]) > 1e-12 * std::max(1.0, std::abs(ref[i])))
      throw config_error("dispersion: cached phase disagrees with coefficients");
}

ComplexSpectra apply_phase(const ComplexSpectra& sc, const DispersionModel& d,
                           int sign) {
  if (sign != 1 && sign != -1)
    throw config_error("apply_phase: sign must be +1 or -1");
  check_shape(sc.data.n_x(), sc.data.n_z(), sc.grid, "apply_phase");
  if (d.phase.size() != sc.grid.n_z)
    throw config_error("apply_phase: dispersion grid mismatch");

  ComplexSpectra out{ComplexArray(sc.grid.n_x, sc.grid.n_z), sc.space, sc.grid};
  std::vector<cplx> rot(sc.grid.n_z);
  for (std::size_t i = 0; i < sc.grid.n_z; ++i)
    rot[i] = std::polar(1.0, double(sign) * d.phase[i]);
  for (std::size_t x = 0; x < sc.grid.n_x; ++x) {
    const cplx* in = sc.data.row(x);
    cplx* o = out.data.row(x);
    for (std::size_t i = 0; i < sc.grid.n_z; ++i) o[i] = in[i] * rot[i];
  }
  return out;
}

RealSpectra encode_real(const ComplexSpectra& sc, const DispersionModel& d) {
  check_shape(sc.data.n_x(), sc.data.n_z(), sc.grid, "encode_real");
  if (d.phase.size() != sc.grid.n_z)
    throw config_error("encode_real: dispersion grid mismatch");

  RealSpectra out{RealArray(sc.grid.n_x, sc.grid.n_z), sc.grid};
  std::vector<cplx> rot(sc.grid.n_z);
  for (std::size_t i = 0; i < sc.grid.n_z; ++i)
    rot[i] = std::polar(1.0, d.phase[i]);
  for (std::size_t x = 0; x < sc.grid.n_x; ++x) {
    const cplx* in = sc.data.row(x);
    double* o = out.data.row(x);
    for (std::size_t i = 0; i < sc.grid.n_z; ++i)
      o[i] = (in[i] * rot[i]).real();
  }
  return out;
}

double autofocus_entropy(const RealSpectra& s_d, double k_0, double a2,
                         double a3) {
  const GridSpec& g = s_d.grid;
  const auto d = dispersion_phase(g, k_0, {a2, a3});
  AxialTransform axial(g);

  std::vector<cplx> rot(g.n_z);
  for (std::size_t i = 0; i < g.n_z; ++i)
    rot[i] = std::polar(1.0, -d.phase[i]);

  // accumulate |IFFT(s_d e^{-i phi})|^2 per pixel, then entropy over all
  std::vector<double> intensity(g.n_x * g.n_z);
  std::vector<cplx> line(g.n_z), img(g.n_z);
  double total = 0.0;
  for (std::size_t x = 0; x < g.n_x; ++x) {
    const double* in = s_d.data.row(x);
    for (std::size_t i = 0; i < g.n_z; ++i) line[i] = in[i] * rot[i];
    axial.inverse(line.data(), img.data());
    for (std::size_t j = 0; j < g.n_z; ++j) {
      const double p = std::norm(img[j]);
      intensity[x * g.n_z + j] = p;
      total += p;
    }
  }
  if (total <= 0.0) return 0.0;
  double entropy = 0.0;
  for (double p : intensity) {
    if (p > 0.0) {
      const double q = p / total;
      entropy -= q * std::log(q);
    }
  }
  return entropy;
}

namespace {

struct Vertex {
  double a2, a3, cost;
};

}  // namespace

AutofocusResult autofocus(const RealSpectra& s_d, double k_0,
                          const AutofocusOptions& opt) {
  if (!all_finite(s_d.data))
    throw config_error("autofocus: non-finite measurement");
  for (double v : {opt.a2_min, opt.a2_max, opt.a3_min, opt.a3_max})
    if (!std::isfinite(v)) throw config_error("autofocus: non-finite range");
  if (opt.a2_max < opt.a2_min || opt.a3_max < opt.a3_min)
    throw config_error("autofocus: reversed search range");
  if (opt.grid_points < 2) throw config_error("autofocus: grid_points < 2");

  AutofocusResult res;
  std::size_t evals = 0;
  auto cost = [&](double a2, double a3) {
    ++evals;
    return autofocus_entropy(s_d, k_0, a2, a3);
  };

  // coarse grid; evaluations are independent and run in parallel
  const std::size_t gp = opt.grid_points;
  std::vector<double> costs(gp * gp);
  const double da2 = (opt.a2_max - opt.a2_min) / double(gp - 1);
  const double da3 = (opt.a3_max - opt.a3_min) / double(gp - 1);
  parallel_for(gp * gp, [&](std::size_t idx) {
    const double a2 = opt.a2_min + da2 * double(idx / gp);
    const double a3 = opt.a3_min + da3 * double(idx % gp);
    costs[idx] = autofocus_entropy(s_d, k_0, a2, a3);
  });
  evals += gp * gp;
  const std::size_t best =
      std::size_t(std::min_element(costs.begin(), costs.end()) - costs.begin());
  double a2 = opt.a2_min + da2 * double(best / gp);
  double a3 = opt.a3_min + da3 * double(best % gp);
  res.coarse_best_cost = costs[best];

  // Nelder-Mead refinement seeded at the best grid cell
  const double s2 = (da2 > 0.0) ? 0.5 * da2 : std::max(1e-3, 1e-3 * std::abs(a2));
  const double s3 = (da3 > 0.0) ? 0.5 * da3 : std::max(1e-3, 1e-3 * std::abs(a3));
  std::array<Vertex, 3> v{Vertex{a2, a3, res.coarse_best_cost},
                          Vertex{a2 + s2, a3, cost(a2 + s2, a3)},
                          Vertex{a2, a3 + s3, cost(a2, a3 + s3)}};

  bool converged = false;
  for (std::size_t it = 0; it < opt.refine_iters; ++it) {
    std::sort(v.begin(), v.end(),
              [](const Vertex& l, const Vertex& r) { return l.cost < r.cost; });
    const double spread =
        (v[2].cost - v[0].cost) / (std::abs(v[0].cost) + 1e-30);
    if (spread < 1e-6) {
      converged = true;
      break;
    }
    const double cx = 0.5 * (v[0].a2 + v[1].a2);
    const double cy = 0.5 * (v[0].a3 + v[1].a3);
    const double rx = cx + (cx - v[2].a2);
    const double ry = cy + (cy - v[2].a3);
    const double fr = cost(rx, ry);
    if (fr < v[0].cost) {
      const double ex = cx + 2.0 * (cx - v[2].a2);
      const double ey = cy + 2.0 * (cy - v[2].a3);
      const double fe = cost(ex, ey);
      v[2] = (fe < fr) ? Vertex{ex, ey, fe} : Vertex{rx, ry, fr};
    } else if (fr < v[1].cost) {
      v[2] = Vertex{rx, ry, fr};
    } else {
      const double kx = cx + 0.5 * (v[2].a2 - cx);
      const double ky = cy + 0.5 * (v[2].a3 - cy);
      const double fk = cost(kx, ky);
      if (fk < v[2].cost) {
        v[2] = Vertex{kx, ky, fk};
      } else {  // shrink toward the best vertex
        for (int i = 1; i < 3; ++i) {
          v[i].a2 = v[0].a2 + 0.5 * (v[i].a2 - v[0].a2);
          v[i].a3 = v[0].a3 + 0.5 * (v[i].a3 - v[0].a3);
          v[i].cost = cost(v[i].a2, v[i].a3);
        }
      }
    }
  }
  std::sort(v.begin(), v.end(),
            [](const Vertex& l, const Vertex& r) { return l.cost < r.cost; });

  res.model = dispersion_phase(s_d.grid, k_0, {v[0].a2, v[0].a3});
  res.converged = converged;
  res.cost = v[0].cost;
  res.cost_evaluations = evals;
  return res;
}

}  // namespace frisam

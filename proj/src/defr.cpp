#include "frisam/defr.hpp"

#include <algorithm>

#include "frisam/fft.hpp"

namespace frisam {

namespace {

// Per-solve precomputation shared by all A-scans.
//
// The compensated residual image c = F^H(r e^{-i phi}) changes by two terms
// when a component alpha at pixel p is removed from the residual:
//   c <- c - alpha delta_p - conj(alpha) mirror_kernel(l + p)
// where mirror_kernel(Z) = (1/n) sum_i e^{-2 i phi_i} e^{-i 2 k_i Z dz} is
// the image of the doubly-dispersed conjugate atom; it depends on the pixel
// pair only through l + p.
struct DefrTables {
  std::vector<cplx> mirror;   // indexed by l + p in [0, 2n-2]
  std::vector<cplx> carrier;  // e^{i 2 k_i z_p} column factors, per pixel p
  std::vector<cplx> rot;      // e^{i phi_i}
};

DefrTables build_tables(const GridSpec& g, const DispersionModel& d) {
  const std::size_t n = g.n_z;
  DefrTables t;
  t.rot.resize(n);
  for (std::size_t i = 0; i < n; ++i) t.rot[i] = std::polar(1.0, d.phase[i]);

  t.mirror.assign(2 * n - 1, cplx(0.0));
  const double dz = g.dz();
  for (std::size_t m = 0; m < 2 * n - 1; ++m) {
    const double Z = (double(m) - double(n)) * dz;
    cplx acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += std::polar(1.0, -2.0 * d.phase[i] - 2.0 * g.k_grid[i] * Z);
    t.mirror[m] = acc / double(n);
  }
  return t;
}

}  // namespace

DefrResult defr_solve(const RealSpectra& s_d, const DispersionModel& d,
                      int max_iters, double energy_floor) {
  const GridSpec& g = s_d.grid;
  check_shape(s_d.data.n_x(), s_d.data.n_z(), g, "defr_solve");
  if (d.phase.size() != g.n_z)
    throw config_error("defr_solve: dispersion grid mismatch");
  if (max_iters < 1) throw config_error("defr_solve: max_iters must be >= 1");
  if (!all_finite(s_d.data))
    throw config_error("defr_solve: non-finite measurement");

  const std::size_t n = g.n_z;
  DefrResult res;
  res.grid = g;
  res.z = ComplexArray(g.n_x, n);
  res.residual_spectrum = RealSpectra{s_d.data, g};
  res.iterations_used.assign(g.n_x, 0);

  const DefrTables tables = build_tables(g, d);
  AxialTransform axial(g);
  const double inv_sqrt_n = 1.0 / std::sqrt(double(n));

  parallel_for(g.n_x, [&](std::size_t x) {
    double* r = res.residual_spectrum.data.row(x);
    cplx* z = res.z.row(x);

    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) energy += r[i] * r[i];
    const double floor_energy = energy_floor * energy;
    if (energy == 0.0) return;

    // compensated residual image, updated incrementally afterwards
    std::vector<cplx> line(n), c(n);
    for (std::size_t i = 0; i < n; ++i)
      line[i] = r[i] * std::conj(tables.rot[i]);
    axial.inverse(line.data(), c.data());

    int it = 0;
    while (it < max_iters) {
      // max-magnitude pixel, lowest index on ties
      std::size_t p = 0;
      double best = std::norm(c[0]);
      for (std::size_t j = 1; j < n; ++j) {
        const double mag = std::norm(c[j]);
        if (mag > best) {
          best = mag;
          p = j;
        }
      }
      // the compensated image holds half the component's physical
      // amplitude (conjugate split), which is exactly the increment the
      // 2 Re(F(z) e^{i phi}) model needs
      const cplx alpha = c[p];
      if (alpha == cplx(0.0)) break;

      // remove the component's full real spectral contribution
      // 2 Re(alpha f_p e^{i phi}),   f_p(k_i) = e^{i 2 k_i z_p}/sqrt(n)
      const double z_p = g.z_at(p);
      double new_energy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const cplx atom =
            std::polar(inv_sqrt_n, 2.0 * g.k_grid[i] * z_p) * tables.rot[i];
        r[i] -= 2.0 * (alpha * atom).real();
        new_energy += r[i] * r[i];
      }
      z[p] += alpha;

      // incremental image update: delta at p plus the mirrored blur
      c[p] -= alpha;
      const cplx ac = std::conj(alpha);
      const cplx* mk = tables.mirror.data() + p;  // index l + p - 0
      for (std::size_t l = 0; l < n; ++l) c[l] -= ac * mk[l];

      ++it;
      energy = new_energy;
      if (energy <= floor_energy) break;
    }
    res.iterations_used[x] = it;
  });

  return res;
}

SusceptibilityImage defr_image(const DefrResult& result,
                               const DispersionModel& d,
                               bool include_residual) {
  const GridSpec& g = result.grid;
  SusceptibilityImage out{result.z, g};
  if (include_residual) {
    SusceptibilityImage rimg = ifft_reconstruct(result.residual_spectrum, d);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data.flat()[i] += rimg.data.flat()[i];
  }
  return out;
}

SusceptibilityImage defr_isam(const RealSpectra& s_d, const DispersionModel& d,
                              const NufftPlan& plan, int max_iters,
                              double energy_floor) {
  const DefrResult r = defr_solve(s_d, d, max_iters, energy_floor);
  const GridSpec& g = r.grid;

  // K^H( F_axial(z) + residual .* e^{-i phi} )
  ComplexSpectra spec{ComplexArray(g.n_x, g.n_z), SpaceTag::XK, g};
  AxialTransform axial(g);
  std::vector<cplx> rot(g.n_z);
  for (std::size_t i = 0; i < g.n_z; ++i)
    rot[i] = std::polar(1.0, -d.phase[i]);
  parallel_for(g.n_x, [&](std::size_t x) {
    axial.forward(r.z.row(x), spec.data.row(x));
    const double* rr = r.residual_spectrum.data.row(x);
    cplx* s = spec.data.row(x);
    for (std::size_t i = 0; i < g.n_z; ++i) s[i] += rr[i] * rot[i];
  });
  return k_adjoint(spec, plan);
}

}  // namespace frisam

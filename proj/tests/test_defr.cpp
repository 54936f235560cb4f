#include <doctest.h>

#include "frisam/defr.hpp"
#include "frisam/metrics.hpp"
#include "frisam/synthesis.hpp"
#include "support/oracles.hpp"

using namespace frisam;

namespace {

const GridSpec kGrid = make_grid(4, 256, 7.3, 8.4, 2.0, 128);
const double kK0 = 7.854;

// measurement of explicit per-A-scan components through the greedy model
RealSpectra encode_components(
    const GridSpec& g, const DispersionModel& d,
    const std::vector<std::vector<std::pair<std::size_t, cplx>>>& comps) {
  AxialTransform ax(g);
  ComplexArray z(g.n_x, g.n_z);
  for (std::size_t x = 0; x < comps.size(); ++x)
    for (const auto& [j, a] : comps[x]) z(x, j) = a;
  ComplexSpectra sc{ComplexArray(g.n_x, g.n_z), SpaceTag::XK, g};
  ax.forward(z, sc.data);
  RealSpectra out{RealArray(g.n_x, g.n_z), g};
  for (std::size_t x = 0; x < g.n_x; ++x)
    for (std::size_t i = 0; i < g.n_z; ++i) {
      const cplx rot = std::polar(1.0, d.phase[i]);
      out.data(x, i) = 2.0 * (sc.data(x, i) * rot).real();
    }
  return out;
}

double max_defr_identity_error(const DefrResult& r, const RealSpectra& s_d,
                               const DispersionModel& d) {
  AxialTransform ax(r.grid);
  ComplexArray spec(r.grid.n_x, r.grid.n_z);
  ax.forward(r.z, spec);
  double worst = 0.0;
  for (std::size_t x = 0; x < r.grid.n_x; ++x)
    for (std::size_t i = 0; i < r.grid.n_z; ++i) {
      const cplx rot = std::polar(1.0, d.phase[i]);
      const double model = 2.0 * (spec(x, i) * rot).real();
      worst = std::max(worst, std::abs(model + r.residual_spectrum.data(x, i) -
                                       s_d.data(x, i)));
    }
  return worst;
}

double energy(const RealArray& a, std::size_t x) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.n_z(); ++i) e += a(x, i) * a(x, i);
  return e;
}

}  // namespace

TEST_CASE("defr recovers a single dispersed scatterer in one iteration") {
  const DispersionModel d = dispersion_phase(kGrid, kK0, {70.0});
  std::vector<std::vector<std::pair<std::size_t, cplx>>> comps(kGrid.n_x);
  for (std::size_t x = 0; x < kGrid.n_x; ++x)
    comps[x] = {{190 + 2 * x, cplx(1.0, 0.4)}};
  const RealSpectra sd = encode_components(kGrid, d, comps);

  const DefrResult one = defr_solve(sd, d, 1, 0.0);
  for (std::size_t x = 0; x < kGrid.n_x; ++x) {
    std::size_t peak = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < kGrid.n_z; ++j)
      if (std::abs(one.z(x, j)) > best) {
        best = std::abs(one.z(x, j));
        peak = j;
      }
    CHECK(peak == 190 + 2 * x);
  }

  const DefrResult r = defr_solve(sd, d, 3, 0.0);
  for (std::size_t x = 0; x < kGrid.n_x; ++x) {
    CHECK(energy(r.residual_spectrum.data, x) <
          1e-6 * energy(sd.data, x));
    CHECK(r.iterations_used[x] <= 3);
  }
}

TEST_CASE("defr on a zero measurement does nothing") {
  const DispersionModel d = dispersion_phase(kGrid, kK0, {70.0});
  RealSpectra sd{RealArray(kGrid.n_x, kGrid.n_z), kGrid};
  const DefrResult r = defr_solve(sd, d, 50, 1e-4);
  CHECK(l2_norm(r.z) == 0.0);
  CHECK(l2_norm(r.residual_spectrum.data) == 0.0);
  for (int it : r.iterations_used) CHECK(it == 0);
}

TEST_CASE("defr separates mirror-overlapping scatterers") {
  const DispersionModel d = dispersion_phase(kGrid, kK0, {80.0, 10.0});
  // scatterer 2 sits 3 px from the mirror position of scatterer 1
  const std::size_t j1 = 200;
  const std::size_t j2 = kGrid.n_z - j1 + 3;
  std::vector<std::vector<std::pair<std::size_t, cplx>>> comps(kGrid.n_x);
  for (std::size_t x = 0; x < kGrid.n_x; ++x)
    comps[x] = {{j1, cplx(1.0, 0.0)}, {j2, cplx(0.0, 0.8)}};
  const RealSpectra sd = encode_components(kGrid, d, comps);

  const DefrResult r = defr_solve(sd, d, 400, 1e-10);
  const SusceptibilityImage img = defr_image(r, d, false);
  for (std::size_t x = 0; x < kGrid.n_x; ++x) {
    // both recovered within one pixel
    double a1 = 0.0, a2 = 0.0, spurious = 0.0;
    for (std::size_t j = 0; j < kGrid.n_z; ++j) {
      const double m = std::abs(img.data(x, j));
      const double d1 = std::abs(double(j) - double(j1));
      const double d2 = std::abs(double(j) - double(j2));
      if (d1 <= 1.0)
        a1 = std::max(a1, m);
      else if (d2 <= 1.0)
        a2 = std::max(a2, m);
      else
        spurious = std::max(spurious, m);
    }
    CHECK(a1 > 0.4);
    CHECK(a2 > 0.3);
    // conjugate-region peak suppressed by > 30 dB relative to true peaks
    CHECK(20.0 * std::log10(std::min(a1, a2) / std::max(spurious, 1e-300)) >
          30.0);
  }
}

TEST_CASE("defr decomposition identity holds after every iteration") {
  const DispersionModel d = dispersion_phase(kGrid, kK0, {65.0, -8.0});
  PhantomSpec spec;
  spec.grid = kGrid;
  ProceduralPhantom p;
  p.count = 10;
  p.amp_min = 0.2;
  p.amp_max = 1.0;
  p.min_separation_px = 3.0;
  p.seed = 99;
  p.z_lo = 40;
  p.z_hi = kGrid.n_z - 10;
  spec.procedural = p;
  const SusceptibilityImage eta = phantom_image(spec);
  AxialTransform ax(kGrid);
  ComplexSpectra sc{ComplexArray(kGrid.n_x, kGrid.n_z), SpaceTag::XK, kGrid};
  ax.forward(eta.data, sc.data);
  const RealSpectra sd = encode_real(sc, d);

  double prev_energy = -1.0;
  for (int iters = 1; iters <= 8; ++iters) {
    const DefrResult r = defr_solve(sd, d, iters, 0.0);
    CHECK(max_defr_identity_error(r, sd, d) < 1e-9);
    const double e = l2_norm(r.residual_spectrum.data);
    if (prev_energy >= 0.0) CHECK(e <= prev_energy + 1e-12);
    prev_energy = e;
  }
}

TEST_CASE("defr output is invariant to A-scan permutation") {
  const DispersionModel d = dispersion_phase(kGrid, kK0, {70.0});
  RealSpectra sd{testsup::random_real(kGrid.n_x, kGrid.n_z, 31), kGrid};
  const DefrResult r = defr_solve(sd, d, 20, 1e-8);

  RealSpectra swapped{RealArray(kGrid.n_x, kGrid.n_z), kGrid};
  std::vector<std::size_t> perm{2, 0, 3, 1};
  for (std::size_t x = 0; x < kGrid.n_x; ++x)
    for (std::size_t i = 0; i < kGrid.n_z; ++i)
      swapped.data(x, i) = sd.data(perm[x], i);
  const DefrResult rs = defr_solve(swapped, d, 20, 1e-8);
  for (std::size_t x = 0; x < kGrid.n_x; ++x)
    for (std::size_t j = 0; j < kGrid.n_z; ++j)
      CHECK(rs.z(x, j) == r.z(perm[x], j));
}

TEST_CASE("defr_image residual handling") {
  const DispersionModel d = dispersion_phase(kGrid, kK0, {70.0});

  SUBCASE("converged solve: image equals z without the residual") {
    std::vector<std::vector<std::pair<std::size_t, cplx>>> comps(kGrid.n_x);
    for (std::size_t x = 0; x < kGrid.n_x; ++x)
      comps[x] = {{200, cplx(1.0, 0.0)}};
    const RealSpectra sd = encode_components(kGrid, d, comps);
    const DefrResult r = defr_solve(sd, d, 50, 1e-12);
    const SusceptibilityImage img = defr_image(r, d, false);
    for (std::size_t i = 0; i < img.data.size(); ++i)
      CHECK(img.data.flat()[i] == r.z.flat()[i]);

    // near-zero residual: the flag hardly matters
    const SusceptibilityImage with = defr_image(r, d, true);
    double diff = 0.0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
      diff = std::max(diff,
                      std::abs(with.data.flat()[i] - img.data.flat()[i]));
    CHECK(diff < 1e-6);
  }

  SUBCASE("with noise, re-adding the residual lowers the error") {
    // data-derived ground truth (the quantitative protocol) shares the
    // measurement's noise, so the residual term carries informative signal
    const GridSpec g = make_grid(24, 128, 7.3, 8.4, 2.0, 96);
    const NufftPlan plan = plan_nufft(g, 6, 2.0, 10);
    const DispersionModel d_known = dispersion_phase(g, 7.854, {12.0});
    const DispersionModel d_enc = dispersion_phase(g, 7.854, {60.0});

    PhantomSpec spec;
    spec.grid = g;
    ProceduralPhantom p;
    p.count = 10;
    p.amp_min = 0.3;
    p.amp_max = 1.0;
    p.min_separation_px = 3.0;
    p.seed = 5;
    p.z_lo = 92;
    p.z_hi = g.n_z - 10;
    spec.procedural = p;
    const RealSpectra half =
        simulate_measurement(phantom_image(spec), plan, d_known, 0.01, 7);
    const auto syn = synthesize_fullrange(half, d_known, d_enc, 28, plan);
    const DispersionModel d_out =
        dispersion_phase(syn.out_grid, d_enc.k_0, d_enc.coeffs);

    // at convergence the residual holds only noise-floor junk whose mirror
    // image has the same norm it restores, so inclusion is a no-cost tie
    const DefrResult r = defr_solve(syn.s_d, d_out, 500, 1e-4);
    const double with = rmse(defr_image(r, d_out, true), syn.ground_truth);
    const double without = rmse(defr_image(r, d_out, false), syn.ground_truth);
    CHECK(with <= without * (1.0 + 1e-3));
  }
}

TEST_CASE("defr_isam refocuses the greedy solution") {
  const GridSpec g = make_grid(48, 96, 7.3, 8.4, 2.0, 72);
  const DispersionModel d = dispersion_phase(g, kK0, {50.0});
  const NufftPlan plan = plan_nufft(g, 6, 2.0, 10);

  SUBCASE("zero in, zero out") {
    RealSpectra sd{RealArray(g.n_x, g.n_z), g};
    CHECK(l2_norm(defr_isam(sd, d, plan, 10).data) == 0.0);
  }

  SUBCASE("in-focus phantom: peak positions match defr_image") {
    PhantomSpec spec;
    spec.grid = g;
    spec.scatterers = {{24 * g.lateral_pitch, g.z_at(72), 1.0}};
    const SusceptibilityImage eta = phantom_image(spec);
    const RealSpectra sd = simulate_measurement(eta, plan, d, 0.0, 0);

    auto argmax = [](const ComplexArray& a) {
      std::size_t bx = 0, bz = 0;
      double best = -1.0;
      for (std::size_t x = 0; x < a.n_x(); ++x)
        for (std::size_t j = 0; j < a.n_z(); ++j)
          if (std::abs(a(x, j)) > best) {
            best = std::abs(a(x, j));
            bx = x;
            bz = j;
          }
      return std::pair<std::size_t, std::size_t>(bx, bz);
    };
    const auto [ix, iz] =
        argmax(defr_isam(sd, d, plan, 200).data);
    const auto [dx, dz] =
        argmax(defr_image(defr_solve(sd, d, 200), d, true).data);
    CHECK(std::abs(double(ix) - double(dx)) <= 1.0);
    CHECK(std::abs(double(iz) - double(dz)) <= 1.0);
  }

  SUBCASE("out-of-focus phantom: strictly narrower laterally") {
    PhantomSpec spec;
    spec.grid = g;
    const std::size_t jd = 28;
    spec.scatterers = {{24 * g.lateral_pitch, g.z_at(jd), 1.0}};
    const SusceptibilityImage eta = phantom_image(spec);
    const RealSpectra sd = simulate_measurement(eta, plan, d, 0.0, 0);
    const double w_isam =
        testsup::lateral_fwhm(defr_isam(sd, d, plan, 300).data, jd);
    const double w_image = testsup::lateral_fwhm(
        defr_image(defr_solve(sd, d, 300), d, true).data, jd);
    CHECK(w_isam < w_image);
  }
}

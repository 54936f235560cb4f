#include <doctest.h>

#include "frisam/mbir.hpp"
#include "frisam/metrics.hpp"
#include "frisam/synthesis.hpp"
#include "support/oracles.hpp"

using namespace frisam;

TEST_CASE("phantom_image") {
  const GridSpec g = make_grid(16, 64, 7.3, 8.4, 2.0, 32);

  SUBCASE("empty list gives a zero image") {
    PhantomSpec spec;
    spec.grid = g;
    CHECK(l2_norm(phantom_image(spec).data) == 0.0);
  }

  SUBCASE("single scatterer at the grid center") {
    PhantomSpec spec;
    spec.grid = g;
    spec.scatterers = {{8 * g.lateral_pitch, 0.0, cplx(0.5, 0.5)}};
    const SusceptibilityImage img = phantom_image(spec);
    std::size_t nonzero = 0;
    for (const cplx& v : img.data.flat())
      if (v != cplx(0.0)) ++nonzero;
    CHECK(nonzero == 1);
    CHECK(img.data(8, 32) == cplx(0.5, 0.5));
  }

  SUBCASE("out-of-bounds scatterer rejected") {
    PhantomSpec spec;
    spec.grid = g;
    spec.scatterers = {{100 * g.lateral_pitch, 0.0, 1.0}};
    CHECK_THROWS_AS(phantom_image(spec), config_error);
  }

  SUBCASE("procedural mode is deterministic under a fixed seed") {
    PhantomSpec spec;
    spec.grid = g;
    ProceduralPhantom p;
    p.count = 12;
    p.amp_min = 0.2;
    p.amp_max = 1.0;
    p.min_separation_px = 3.0;
    p.seed = 7;
    spec.procedural = p;
    const SusceptibilityImage a = phantom_image(spec);
    const SusceptibilityImage b = phantom_image(spec);
    for (std::size_t i = 0; i < a.data.size(); ++i)
      CHECK(a.data.flat()[i] == b.data.flat()[i]);

    // pairwise separation honored
    std::vector<std::pair<std::size_t, std::size_t>> pts;
    for (std::size_t x = 0; x < g.n_x; ++x)
      for (std::size_t j = 0; j < g.n_z; ++j)
        if (a.data(x, j) != cplx(0.0)) pts.emplace_back(x, j);
    CHECK(pts.size() == 12);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t k = i + 1; k < pts.size(); ++k) {
        const double dx = double(pts[i].first) - double(pts[k].first);
        const double dz = double(pts[i].second) - double(pts[k].second);
        CHECK(dx * dx + dz * dz >= 9.0);
      }
  }

  SUBCASE("unsatisfiable separation rejected") {
    PhantomSpec spec;
    spec.grid = g;
    ProceduralPhantom p;
    p.count = 200;
    p.min_separation_px = 8.0;
    p.seed = 1;
    spec.procedural = p;
    CHECK_THROWS_AS(phantom_image(spec), config_error);
  }
}

TEST_CASE("simulate_measurement") {
  const GridSpec g = make_grid(24, 64, 7.3, 8.4, 2.0, 40);
  const NufftPlan plan = plan_nufft(g, 6, 2.0, 10);
  const DispersionModel d = dispersion_phase(g, 7.854, {40.0});

  SUBCASE("sigma = 0 is exactly encode_real of k_forward") {
    PhantomSpec spec;
    spec.grid = g;
    spec.scatterers = {{12 * g.lateral_pitch, g.z_at(40), 1.0}};
    const SusceptibilityImage eta = phantom_image(spec);
    const RealSpectra a = simulate_measurement(eta, plan, d, 0.0, 99);
    const RealSpectra b = encode_real(k_forward(eta, plan), d);
    for (std::size_t i = 0; i < a.data.size(); ++i)
      CHECK(a.data.flat()[i] == b.data.flat()[i]);
  }

  SUBCASE("zero object, zero noise gives zero spectra") {
    SusceptibilityImage eta{ComplexArray(g.n_x, g.n_z), g};
    CHECK(l2_norm(simulate_measurement(eta, plan, d, 0.0, 0).data) == 0.0);
  }

  SUBCASE("noise is deterministic under the seed") {
    SusceptibilityImage eta{testsup::random_complex(g.n_x, g.n_z, 3), g};
    const RealSpectra a = simulate_measurement(eta, plan, d, 0.05, 11);
    const RealSpectra b = simulate_measurement(eta, plan, d, 0.05, 11);
    for (std::size_t i = 0; i < a.data.size(); ++i)
      CHECK(a.data.flat()[i] == b.data.flat()[i]);
  }

  SUBCASE("zero-phase measurement is conjugate symmetric about zero delay") {
    const DispersionModel none = dispersion_phase(g, 7.854, {});
    PhantomSpec spec;
    spec.grid = g;
    ProceduralPhantom p;
    p.count = 6;
    p.amp_min = 0.5;
    p.amp_max = 1.0;
    p.min_separation_px = 3.0;
    p.seed = 21;
    p.z_lo = 40;
    p.z_hi = 60;
    spec.procedural = p;
    const SusceptibilityImage eta = phantom_image(spec);
    const RealSpectra sd = simulate_measurement(eta, plan, none, 0.0, 0);
    const SusceptibilityImage img = ifft_reconstruct(sd, none);
    for (std::size_t x = 0; x < g.n_x; ++x)
      for (std::size_t j = 1; j < g.n_z; ++j) {
        const cplx a = img.data(x, j);
        const cplx b = std::conj(img.data(x, g.n_z - j));
        CHECK(std::abs(a - b) < 1e-10);
      }
  }
}

TEST_CASE("hilbert_positive_delay") {
  const GridSpec g = make_grid(4, 128, 7.3, 8.4, 2.0, 64);

  SUBCASE("real cosine keeps one delay peak") {
    RealSpectra s{RealArray(g.n_x, g.n_z), g};
    const double z0 = g.z_at(96);
    for (std::size_t x = 0; x < g.n_x; ++x)
      for (std::size_t i = 0; i < g.n_z; ++i)
        s.data(x, i) = std::cos(2.0 * g.k_grid[i] * z0);
    const ComplexSpectra h = hilbert_positive_delay(s);
    AxialTransform ax(g);
    ComplexArray img(g.n_x, g.n_z);
    ax.inverse(h.data, img);
    double neg = 0.0, total = 0.0;
    for (std::size_t x = 0; x < g.n_x; ++x)
      for (std::size_t j = 0; j < g.n_z; ++j) {
        const double e = std::norm(img(x, j));
        total += e;
        if (j < g.n_z / 2 && j > 0) neg += e;
      }
    CHECK(neg < 1e-12 * total);
  }

  SUBCASE("real part of the output reproduces the input") {
    RealSpectra s{testsup::random_real(g.n_x, g.n_z, 17), g};
    const ComplexSpectra h = hilbert_positive_delay(s);
    for (std::size_t i = 0; i < s.data.size(); ++i)
      CHECK(std::abs(h.data.flat()[i].real() - s.data.flat()[i]) < 1e-10);
  }

  SUBCASE("idempotent on its own real part") {
    RealSpectra s{testsup::random_real(g.n_x, g.n_z, 19), g};
    const ComplexSpectra h = hilbert_positive_delay(s);
    RealSpectra re{RealArray(g.n_x, g.n_z), g};
    for (std::size_t i = 0; i < s.data.size(); ++i)
      re.data.flat()[i] = h.data.flat()[i].real();
    const ComplexSpectra h2 = hilbert_positive_delay(re);
    for (std::size_t i = 0; i < s.data.size(); ++i)
      CHECK(std::abs(h2.data.flat()[i] - h.data.flat()[i]) < 1e-10);
  }

  SUBCASE("zero in, zero out") {
    RealSpectra s{RealArray(g.n_x, g.n_z), g};
    CHECK(l2_norm(hilbert_positive_delay(s).data) == 0.0);
  }

  SUBCASE("analytic image survives an encode/compensate round trip") {
    // mirror-region energy of the compensated image of Re(h e^{i phi}) is
    // dominated by the conjugate copy; the analytic signal itself has none
    RealSpectra s{testsup::random_real(g.n_x, g.n_z, 23), g};
    const ComplexSpectra h = hilbert_positive_delay(s);
    const DispersionModel d = dispersion_phase(g, 7.854, {30.0});
    const ComplexSpectra disp = apply_phase(h, d, +1);
    const ComplexSpectra comp = apply_phase(disp, d, -1);
    AxialTransform ax(g);
    ComplexArray img(g.n_x, g.n_z);
    ax.inverse(comp.data, img);
    double neg = 0.0, total = 0.0;
    for (std::size_t x = 0; x < g.n_x; ++x)
      for (std::size_t j = 0; j < g.n_z; ++j) {
        const double e = std::norm(img(x, j));
        total += e;
        if (j < g.n_z / 2 && j > 0) neg += e;
      }
    CHECK(neg < 1e-10 * total);
  }
}

namespace {

RealSpectra half_range_phantom_measurement(const GridSpec& g,
                                           const NufftPlan& plan,
                                           const DispersionModel& d_known,
                                           std::uint64_t seed,
                                           std::size_t count = 10) {
  PhantomSpec spec;
  spec.grid = g;
  ProceduralPhantom p;
  p.count = count;
  p.amp_min = 0.4;
  p.amp_max = 1.0;
  p.min_separation_px = 3.0;
  p.seed = seed;
  p.z_lo = g.n_z / 2 + 25;       // positive delay, clear of zero delay
  p.z_hi = g.n_z - 12;
  spec.procedural = p;
  return simulate_measurement(phantom_image(spec), plan, d_known, 0.0, seed);
}

}  // namespace

TEST_CASE("synthesize_fullrange") {
  const GridSpec g = make_grid(32, 128, 7.3, 8.4, 2.0, 96);
  const NufftPlan plan = plan_nufft(g, 6, 2.0, 10);
  const DispersionModel d_known = dispersion_phase(g, 7.854, {18.0});
  const DispersionModel d_enc = dispersion_phase(g, 7.854, {70.0, -9.0});

  SUBCASE("zero shift keeps mirror and signal disjoint") {
    const RealSpectra half = half_range_phantom_measurement(g, plan, d_known, 3);
    // identity encoding keeps the mirror sharp, so the two halves separate
    const DispersionModel none = dispersion_phase(g, 7.854, {});
    const auto syn = synthesize_fullrange(half, d_known, none, 0, plan);

    double gt_neg = 0.0, gt_total = 0.0;
    for (std::size_t x = 0; x < g.n_x; ++x)
      for (std::size_t j = 0; j < g.n_z; ++j) {
        const double e = std::norm(syn.ground_truth.data(x, j));
        gt_total += e;
        if (j < g.n_z / 2 && j > 0) gt_neg += e;
      }
    // slow dispersion-kernel tails clipped by the analytic-signal step leave
    // a small floor in the empty half
    CHECK(gt_neg < 5e-3 * gt_total);

    const SusceptibilityImage direct = ifft_reconstruct(syn.s_d, none);
    double pos = 0.0, neg = 0.0;
    for (std::size_t x = 0; x < g.n_x; ++x)
      for (std::size_t j = 1; j < g.n_z; ++j) {
        const double e = std::norm(direct.data(x, j));
        if (j > g.n_z / 2)
          pos += e;
        else if (j < g.n_z / 2)
          neg += e;
      }
    // conjugate pair halves carry equal energy and do not collide
    CHECK(pos == doctest::Approx(neg).epsilon(1e-6));
  }

  SUBCASE("single scatterer: ground truth peak is half the unscaled one") {
    PhantomSpec spec;
    spec.grid = g;
    spec.scatterers = {{16 * g.lateral_pitch, g.z_at(90), 1.0}};
    const RealSpectra half =
        simulate_measurement(phantom_image(spec), plan, d_known, 0.0, 0);
    const auto syn = synthesize_fullrange(half, d_known, d_enc, 20, plan);
    double gt_peak = 0.0;
    for (const cplx& v : syn.ground_truth.data.flat())
      gt_peak = std::max(gt_peak, std::abs(v));
    // near-unitary operator: the halved back-projection lands near 0.5
    CHECK(gt_peak > 0.40);
    CHECK(gt_peak < 0.60);
    CHECK(syn.out_grid.focal_z_index == g.focal_z_index - 20);
  }

  SUBCASE("overlapping shift: conjugate artifacts hit direct, not the model") {
    const RealSpectra half = half_range_phantom_measurement(g, plan, d_known, 9);
    const auto syn = synthesize_fullrange(half, d_known, d_enc, 32, plan);
    const GridSpec& og = syn.out_grid;
    const NufftPlan plan_out = plan_nufft(og, 6, 2.0, 10);
    const DispersionModel d_out =
        dispersion_phase(og, d_enc.k_0, d_enc.coeffs);

    const SusceptibilityImage direct = ifft_reconstruct(syn.s_d, d_out);
    MbirConfig cfg;
    cfg.norm_iters = 12;
    cfg.max_iters = 200;
    cfg.weights = depth_weights(og, 0.5, 1.0);
    const MbirResult mb = mbir_solve(syn.s_d, plan_out, d_out, cfg);

    const double e_direct = rmse(direct, syn.ground_truth);
    const double e_mbir = rmse(mb.image, syn.ground_truth);
    CHECK(e_mbir < e_direct);
  }

  SUBCASE("shift that wraps content is rejected") {
    const RealSpectra half = half_range_phantom_measurement(g, plan, d_known, 4);
    CHECK_THROWS_AS(synthesize_fullrange(half, d_known, d_enc, -3, plan),
                    config_error);
    CHECK_THROWS_AS(
        synthesize_fullrange(half, d_known, d_enc, long(g.n_z), plan),
        config_error);
  }
}

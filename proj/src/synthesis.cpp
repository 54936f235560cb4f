#include "frisam/synthesis.hpp"

#include <algorithm>
#include <random>

#include "frisam/fft.hpp"

namespace frisam {

SusceptibilityImage phantom_image(const PhantomSpec& spec) {
  const GridSpec& g = spec.grid;
  validate_grid(g);
  SusceptibilityImage img{ComplexArray(g.n_x, g.n_z), g};

  if (spec.procedural) {
    const ProceduralPhantom& p = *spec.procedural;
    const std::size_t x_lo = p.x_lo.value_or(0);
    const std::size_t x_hi = p.x_hi.value_or(g.n_x - 1);
    const std::size_t z_lo = p.z_lo.value_or(0);
    const std::size_t z_hi = p.z_hi.value_or(g.n_z - 1);
    if (x_hi >= g.n_x || z_hi >= g.n_z || x_lo > x_hi || z_lo > z_hi)
      throw config_error("phantom_image: procedural bounds outside grid");
    if (!(p.amp_min > 0.0) || p.amp_max < p.amp_min)
      throw config_error("phantom_image: bad amplitude range");

    std::mt19937_64 rng(p.seed);
    std::uniform_int_distribution<std::size_t> ux(x_lo, x_hi), uz(z_lo, z_hi);
    std::uniform_real_distribution<double> uamp(p.amp_min, p.amp_max);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * M_PI);

    std::vector<std::pair<std::size_t, std::size_t>> placed;
    const double min_sep2 = p.min_separation_px * p.min_separation_px;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 1000 * std::max<std::size_t>(p.count, 1);
    while (placed.size() < p.count) {
      if (++attempts > max_attempts)
        throw config_error(
            "phantom_image: cannot satisfy min separation; lower count or "
            "separation");
      const std::size_t x = ux(rng), z = uz(rng);
      bool ok = true;
      for (const auto& [px, pz] : placed) {
        const double dx = double(x) - double(px);
        const double dzp = double(z) - double(pz);
        if (dx * dx + dzp * dzp < min_sep2) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      placed.emplace_back(x, z);
      img.data(x, z) = std::polar(uamp(rng), uphase(rng));
    }
    return img;
  }

  for (const Scatterer& s : spec.scatterers) {
    const double xf = s.x_um / g.lateral_pitch;
    const double zf = s.z_um / g.dz() + double(g.zero_delay_index());
    const long xi = std::lround(xf), zi = std::lround(zf);
    if (xi < 0 || std::size_t(xi) >= g.n_x || zi < 0 ||
        std::size_t(zi) >= g.n_z)
      throw config_error("phantom_image: scatterer outside grid bounds");
    img.data(std::size_t(xi), std::size_t(zi)) += s.amplitude;
  }
  return img;
}

RealSpectra simulate_measurement(const SusceptibilityImage& eta,
                                 const NufftPlan& plan,
                                 const DispersionModel& d, double noise_sigma,
                                 std::uint64_t seed) {
  if (noise_sigma < 0.0)
    throw config_error("simulate_measurement: negative noise level");
  RealSpectra s = encode_real(k_forward(eta, plan), d);
  if (noise_sigma > 0.0) {
    double peak = 0.0;
    for (double v : s.data.flat()) peak = std::max(peak, std::abs(v));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, noise_sigma * peak);
    for (double& v : s.data.flat()) v += nd(rng);
  }
  return s;
}

ComplexSpectra hilbert_positive_delay(const RealSpectra& s) {
  const GridSpec& g = s.grid;
  check_shape(s.data.n_x(), s.data.n_z(), g, "hilbert_positive_delay");

  // delay-domain multiplier: keep DC (j = n/2) and the Nyquist fold (j = 0)
  // as is, double strictly positive delays, zero strictly negative ones
  const std::size_t j0 = g.zero_delay_index();
  std::vector<double> m(g.n_z, 0.0);
  m[j0] = 1.0;
  m[0] = 1.0;
  for (std::size_t j = j0 + 1; j < g.n_z; ++j) m[j] = 2.0;

  ComplexSpectra out{ComplexArray(g.n_x, g.n_z), SpaceTag::XK, g};
  AxialTransform axial(g);
  parallel_for(g.n_x, [&](std::size_t x) {
    std::vector<cplx> line(g.n_z), img(g.n_z);
    const double* in = s.data.row(x);
    for (std::size_t i = 0; i < g.n_z; ++i) line[i] = cplx(in[i], 0.0);
    axial.inverse(line.data(), img.data());
    for (std::size_t j = 0; j < g.n_z; ++j) img[j] *= m[j];
    axial.forward(img.data(), out.data.row(x));
  });
  return out;
}

namespace {

// circular shift down by `shift` pixels: out[j] = in[j + shift]
void shift_axial(const ComplexArray& in, long shift, ComplexArray& out) {
  const std::size_t n_z = in.n_z();
  for (std::size_t x = 0; x < in.n_x(); ++x) {
    const cplx* src = in.row(x);
    cplx* dst = out.row(x);
    for (std::size_t j = 0; j < n_z; ++j) {
      long from = long(j) + shift;
      from %= long(n_z);
      if (from < 0) from += long(n_z);
      dst[j] = src[std::size_t(from)];
    }
  }
}

}  // namespace

FullRangeSynthesis synthesize_fullrange(const RealSpectra& half_range,
                                        const DispersionModel& d_known,
                                        const DispersionModel& d_encode,
                                        long delay_shift,
                                        const NufftPlan& plan) {
  const GridSpec& g = half_range.grid;
  check_shape(half_range.data.n_x(), half_range.data.n_z(), g,
              "synthesize_fullrange");
  if (plan.grid() != g)
    throw config_error("synthesize_fullrange: plan grid mismatch");
  if (delay_shift < 0 || std::size_t(delay_shift) > g.n_z / 2)
    throw config_error(
        "synthesize_fullrange: delay shift must lie in [0, n_z/2]");
  if (std::size_t(delay_shift) > g.focal_z_index)
    throw config_error(
        "synthesize_fullrange: shift moves the focal plane outside the grid");

  // 1. analytic spectrum, then compensate the acquisition dispersion
  ComplexSpectra sc = apply_phase(hilbert_positive_delay(half_range),
                                  d_known, -1);

  AxialTransform axial(g);
  ComplexArray img(g.n_x, g.n_z);
  axial.inverse(sc.data, img);

  // the band that circularly wraps under the shift must hold no content;
  // peak magnitude rather than energy so a broadband noise floor passes
  if (delay_shift > 0) {
    double wrap_peak = 0.0, peak = 0.0;
    for (std::size_t x = 0; x < g.n_x; ++x)
      for (std::size_t j = 0; j < g.n_z; ++j) {
        const double m = std::abs(img(x, j));
        peak = std::max(peak, m);
        if (j < std::size_t(delay_shift)) wrap_peak = std::max(wrap_peak, m);
      }
    if (peak > 0.0 && wrap_peak > 0.1 * peak)
      throw config_error(
          "synthesize_fullrange: shift pushes content out of bounds");
  }

  // 2. ground truth: back-projected compensated spectrum, halved to match
  // the amplitude split of taking the real part in step 4
  SusceptibilityImage gt = k_adjoint(sc, plan);
  for (auto& c : gt.data.flat()) c *= 0.5;

  // 3. shift the IFFT image and the ground truth by the same amount; the
  // focal index moves with the content so the output grid keeps the
  // acquisition's defocus geometry
  GridSpec out_grid = g;
  out_grid.focal_z_index = g.focal_z_index - std::size_t(delay_shift);
  validate_grid(out_grid);

  ComplexArray img_shifted(g.n_x, g.n_z), gt_shifted(g.n_x, g.n_z);
  shift_axial(img, delay_shift, img_shifted);
  shift_axial(gt.data, delay_shift, gt_shifted);

  // 4. re-encode: axial FFT, apply the encoding dispersion, take Re
  ComplexSpectra spec{ComplexArray(g.n_x, g.n_z), SpaceTag::XK, out_grid};
  axial.forward(img_shifted, spec.data);

  FullRangeSynthesis out;
  out.out_grid = out_grid;
  out.ground_truth = SusceptibilityImage{std::move(gt_shifted), out_grid};
  out.s_d = encode_real(spec, d_encode);
  out.s_d.grid = out_grid;
  return out;
}

}  // namespace frisam

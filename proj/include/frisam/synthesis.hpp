#ifndef FRISAM_SYNTHESIS_HPP
#define FRISAM_SYNTHESIS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "frisam/dispersion.hpp"
#include "frisam/operator.hpp"
#include "frisam/types.hpp"

namespace frisam {

struct Scatterer {
  double x_um = 0.0;  ///< lateral position, um from the first A-scan
  double z_um = 0.0;  ///< delay, um (zero delay = 0; positive = deeper)
  cplx amplitude = 1.0;
};

/// Procedural phantom: `count` unit-pixel scatterers with magnitudes drawn
/// uniformly from [amp_min, amp_max], uniform random phase, pairwise pixel
/// distance >= min_separation_px, positions uniform over the index box
/// [x_lo, x_hi] x [z_lo, z_hi] (defaults to the full grid).
struct ProceduralPhantom {
  std::size_t count = 0;
  double amp_min = 1.0;
  double amp_max = 1.0;
  double min_separation_px = 2.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> x_lo, x_hi, z_lo, z_hi;  // inclusive bounds
};

struct PhantomSpec {
  GridSpec grid;
  std::vector<Scatterer> scatterers;          // used when procedural is empty
  std::optional<ProceduralPhantom> procedural;
};

/// Sparse image with unit-pixel scatterers; deterministic under a fixed
/// seed. Rejects out-of-bounds positions and unsatisfiable separation.
SusceptibilityImage phantom_image(const PhantomSpec& spec);

/// s_d = Re(Khat eta) + n, with n iid zero-mean Gaussian of standard
/// deviation noise_sigma * max|Re(Khat eta)|. noise_sigma = 0 is exactly
/// encode_real(k_forward(eta), d).
RealSpectra simulate_measurement(const SusceptibilityImage& eta,
                                 const NufftPlan& plan,
                                 const DispersionModel& d, double noise_sigma,
                                 std::uint64_t seed);

/// Analytic-style spectrum per A-scan: axial IFFT, zero strictly negative
/// delays, double strictly positive delays (delay-DC and Nyquist bins
/// unscaled), FFT back. Re(output) reproduces the input.
ComplexSpectra hilbert_positive_delay(const RealSpectra& s);

struct FullRangeSynthesis {
  SusceptibilityImage ground_truth;  ///< on the output grid
  RealSpectra s_d;                   ///< pseudo-full-range real measurement
  GridSpec out_grid;                 ///< focal index shifted with the content
};

/// Pseudo-full-range protocol from a half-range acquisition:
///  1. hilbert_positive_delay, then compensate d_known;
///  2. ground truth = 0.5 * k_adjoint(compensated spectrum);
///  3. shift both images down by delay_shift pixels so the virtual zero
///     delay bisects the content;
///  4. s_d = Re(F_axial(shifted IFFT image) .* e^{i phi_encode}).
///
/// The returned grid moves focal_z_index down by delay_shift so that
/// reconstruction operators see the defocus geometry the data carries.
FullRangeSynthesis synthesize_fullrange(const RealSpectra& half_range,
                                        const DispersionModel& d_known,
                                        const DispersionModel& d_encode,
                                        long delay_shift,
                                        const NufftPlan& plan);

}  // namespace frisam

#endif

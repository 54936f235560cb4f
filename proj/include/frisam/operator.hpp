#ifndef FRISAM_OPERATOR_HPP
#define FRISAM_OPERATOR_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "frisam/dispersion.hpp"
#include "frisam/fft.hpp"
#include "frisam/types.hpp"

namespace frisam {

/// Stolt frequency mapping beta = -sqrt(4 k^2 - q_x^2), rad/um.
/// Rejects evanescent input (4 k^2 < q_x^2).
double stolt_beta(double q_x, double k);

/// Precomputed machinery for the linear scattering operator K and its
/// adjoint: Stolt targets, Kaiser-Bessel gridding weights, roll-off
/// correction, focal-plane phase and FFT plans. Immutable after planning;
/// shareable across threads.
class NufftPlan {
public:
  const GridSpec& grid() const { return grid_; }
  int kernel_width() const { return width_; }
  double oversampling() const { return oversampling_; }
  std::size_t oversampled_size() const { return n_os_; }
  double kernel_beta() const { return kb_beta_; }
  /// Stolt ordinates beta(q_x[m], k[i]), rad/um.
  const RealArray& beta_targets() const { return beta_; }
  /// Power-iteration estimate of ||K||_2.
  double operator_norm() const { return op_norm_; }

  // internals shared with the operator implementations
  struct Impl;
  const Impl& impl() const { return *impl_; }

  NufftPlan(NufftPlan&&) noexcept;
  NufftPlan& operator=(NufftPlan&&) noexcept;
  ~NufftPlan();

private:
  NufftPlan();
  friend NufftPlan plan_nufft(const GridSpec&, int, double, int);

  GridSpec grid_;
  int width_ = 6;
  double oversampling_ = 2.0;
  std::size_t n_os_ = 0;
  double kb_beta_ = 0.0;
  double op_norm_ = 0.0;
  RealArray beta_;
  std::unique_ptr<Impl> impl_;
};

/// Builds a plan. Throws config_error when the evanescent cutoff
/// 4 k_min^2 > max(q_x^2) fails (reporting the offending q_x), when
/// oversampling is below the 1.25 floor, or when the kernel width is
/// outside [2, 16]. norm_iters sets the power-iteration count for the
/// operator norm estimate.
NufftPlan plan_nufft(const GridSpec& grid, int kernel_width = 6,
                     double oversampling = 2.0, int norm_iters = 50);

/// s_c = K eta: transverse FFT, per-line type-2 NUFFT onto the Stolt
/// ordinates with focal-plane phasing, inverse transverse FFT. Unitary FFT
/// normalization throughout.
ComplexSpectra k_forward(const SusceptibilityImage& eta, const NufftPlan& plan);

/// eta_bp = K^H s: the exact conjugate transpose of k_forward.
SusceptibilityImage k_adjoint(const ComplexSpectra& s, const NufftPlan& plan);

/// Dispersion-corrected operator Khat = diag(e^{i phi}) K and its adjoint.
ComplexSpectra khat_forward(const SusceptibilityImage& eta,
                            const NufftPlan& plan, const DispersionModel& d);
SusceptibilityImage khat_adjoint(const ComplexSpectra& s, const NufftPlan& plan,
                                 const DispersionModel& d);

/// Classical full-range ISAM: Khat^H applied to the measurement treated as
/// a complex spectrum with zero imaginary part.
SusceptibilityImage isam_reconstruct(const RealSpectra& s_d,
                                     const NufftPlan& plan,
                                     const DispersionModel& d);

/// Direct baseline: per-A-scan axial inverse FFT of s_d .* e^{-i phi}.
SusceptibilityImage ifft_reconstruct(const RealSpectra& s_d,
                                     const DispersionModel& d);

/// Measurement array reinterpreted as a complex x-k spectrum.
ComplexSpectra complexify(const RealSpectra& s);

}  // namespace frisam

#endif

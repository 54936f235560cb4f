#ifndef FRISAM_METRICS_HPP
#define FRISAM_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "frisam/types.hpp"

namespace frisam {

using Image16 = Array2D<std::uint16_t>;

/// Root mean squared error over the complex pixel values.
double rmse(const SusceptibilityImage& a, const SusceptibilityImage& b);

/// 16-bit log display scaling: 20 log10(|eta| / ref) clipped to
/// [floor_db, ceil_db], mapped affinely onto [0, 65535], rounded half to
/// even. ref defaults to the image's own max magnitude; pass a shared
/// reference to compare several images on one scale. Rejects an all-zero
/// reference.
Image16 log_scale_16bit(const SusceptibilityImage& img, double floor_db = -60.0,
                        double ceil_db = 0.0,
                        std::optional<double> ref_max = std::nullopt);

/// 10 log10(65535^2 / MSE), capped at 120 dB for identical images.
double psnr(const Image16& a, const Image16& b);

/// Mean structural similarity: 11x11 Gaussian window, sigma 1.5,
/// C1=(0.01*65535)^2, C2=(0.03*65535)^2, averaged over all fully interior
/// window positions.
double ssim(const Image16& a, const Image16& b);

struct EvalReport {
  std::string method;
  double rmse = 0.0;
  double psnr_db = 0.0;
  double ssim_val = 0.0;
  double floor_db = -60.0;
  double ceil_db = 0.0;
  double scale_ref = 0.0;  ///< magnitude mapped to 0 dB
};

/// RMSE on raw complex data plus PSNR/SSIM on the 16-bit log-scaled images,
/// both scaled against the reference image's maximum.
EvalReport evaluate(const std::string& method, const SusceptibilityImage& test,
                    const SusceptibilityImage& reference,
                    double floor_db = -60.0, double ceil_db = 0.0);

}  // namespace frisam

#endif

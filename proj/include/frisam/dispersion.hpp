#ifndef FRISAM_DISPERSION_HPP
#define FRISAM_DISPERSION_HPP

#include <vector>

#include "frisam/types.hpp"

namespace frisam {

/// Polynomial arm-mismatch phase phi(k) = sum_{i>=2} a_i (k - k_0)^i.
///
/// a_0 and a_1 are fixed to zero: constant and linear phase are a global
/// phase and an axial shift, not blur. Order is capped at 5.
struct DispersionModel {
  double k_0 = 0.0;             ///< center wavenumber, rad/um
  std::vector<double> coeffs;   ///< a_2 .. a_Np
  std::vector<double> phase;    ///< cached phi over the grid's k axis

  int order() const { return int(coeffs.size()) + 1; }
  double a(std::size_t power) const {  // a_2 -> coeffs[0]
    return (power >= 2 && power - 2 < coeffs.size()) ? coeffs[power - 2] : 0.0;
  }
  bool is_zero() const {
    for (double c : coeffs)
      if (c != 0.0) return false;
    return true;
  }
};

/// Materializes the phase vector for a grid. Rejects non-finite
/// coefficients and orders above 5.
DispersionModel dispersion_phase(const GridSpec& grid, double k_0,
                                 const std::vector<double>& coeffs);

/// Recomputes phi from the stored coefficients and checks the cached vector
/// to 1e-12; throws config_error on mismatch or size disagreement with grid.
void validate_dispersion(const DispersionModel& d, const GridSpec& grid);

/// Elementwise multiply every A-scan by exp(sign * i * phi).
ComplexSpectra apply_phase(const ComplexSpectra& sc, const DispersionModel& d,
                           int sign);

/// Dispersion-encoded real measurement s_d = Re(sc .* exp(i phi)).
RealSpectra encode_real(const ComplexSpectra& sc, const DispersionModel& d);

struct AutofocusOptions {
  double a2_min = 0.0, a2_max = 0.0;
  double a3_min = 0.0, a3_max = 0.0;
  std::size_t grid_points = 21;   ///< coarse grid per axis
  std::size_t refine_iters = 200; ///< simplex iteration cap
};

struct AutofocusResult {
  DispersionModel model;
  bool converged = false;
  double cost = 0.0;            ///< entropy at the returned coefficients
  double coarse_best_cost = 0.0;
  std::size_t cost_evaluations = 0;
};

/// Image sharpness cost: Shannon entropy of the normalized intensity of the
/// per-A-scan compensated axial IFFT of s_d. Lower is sharper.
double autofocus_entropy(const RealSpectra& s_d, double k_0, double a2,
                         double a3);

/// Estimates (a_2, a_3) minimizing autofocus_entropy by a coarse grid search
/// followed by Nelder-Mead refinement. The result is flagged unconverged if
/// the simplex hits refine_iters before its relative spread drops below 1e-6.
AutofocusResult autofocus(const RealSpectra& s_d, double k_0,
                          const AutofocusOptions& opt);

}  // namespace frisam

#endif

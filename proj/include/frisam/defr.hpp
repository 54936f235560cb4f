#ifndef FRISAM_DEFR_HPP
#define FRISAM_DEFR_HPP

#include <vector>

#include "frisam/dispersion.hpp"
#include "frisam/operator.hpp"
#include "frisam/types.hpp"

namespace frisam {

/// Output of the greedy dispersion-encoded full-range solve. The
/// decomposition identity
///   s_d = 2 Re(F_axial(z) .* e^{i phi}) + residual_spectrum
/// holds to 1e-9 elementwise after every iteration.
struct DefrResult {
  ComplexArray z;              ///< selected components, image domain
  RealSpectra residual_spectrum;
  std::vector<int> iterations_used;  ///< per A-scan
  GridSpec grid;
};

/// Greedy per-A-scan recovery: repeatedly compensate the residual, pick the
/// max-magnitude pixel, attribute half its value (the conjugate split) to z
/// and subtract that component's full real spectral contribution. Each
/// A-scan stops at max_iters or when its residual energy falls below
/// energy_floor times its initial energy. Ties break to the lowest axial
/// index.
DefrResult defr_solve(const RealSpectra& s_d, const DispersionModel& d,
                      int max_iters = 500, double energy_floor = 1e-4);

/// z plus, optionally, the dispersion-compensated image of the residual.
SusceptibilityImage defr_image(const DefrResult& result,
                               const DispersionModel& d,
                               bool include_residual = true);

/// DEFR followed by ISAM back-projection of the recovered spectrum plus
/// compensated residual: K^H(F_axial(z) + r .* e^{-i phi}).
SusceptibilityImage defr_isam(const RealSpectra& s_d, const DispersionModel& d,
                              const NufftPlan& plan, int max_iters = 500,
                              double energy_floor = 1e-4);

}  // namespace frisam

#endif

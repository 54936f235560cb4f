#ifndef FRISAM_MBIR_HPP
#define FRISAM_MBIR_HPP

#include <vector>

#include "frisam/dispersion.hpp"
#include "frisam/operator.hpp"
#include "frisam/types.hpp"

namespace frisam {

/// Complex soft-thresholding, the proximal map of t|.|: shrinks the
/// magnitude by t, preserves the phase, returns 0 at or below t.
cplx soft_threshold(cplx u, double t);

/// Depth weights rising linearly with |z - z_zero_delay| from w_min at zero
/// delay to w_max at the farthest depth, symmetric in the two half-spaces.
WeightVector depth_weights(const GridSpec& grid, double w_min = 0.5,
                           double w_max = 1.0);

/// Uniform unit weights (plain MBIR).
WeightVector uniform_weights(const GridSpec& grid);

/// Relative-residual stopping value
///   r_r = ||z - eta|| / (max{||g||, ||z - eta + g||} + eps).
double relative_residual(const ComplexArray& z, const ComplexArray& eta,
                         const ComplexArray& g, double epsilon);

struct MbirConfig {
  double lambda = 0.5;          ///< regularization constant, >= 0
  WeightVector weights;         ///< per-depth; empty means uniform
  double tol = 1e-3;            ///< relative-residual stop threshold
  int max_iters = 500;
  bool add_residual = true;     ///< back-project the final data residual
  double step_scale = 1.0;      ///< in (0, 1]; multiplies the 1/L^2 base step
  double epsilon = 1e-12;       ///< denominator guard in the stopping rule
  int norm_iters = 50;          ///< power-iteration steps for the model norm
  /// When true the final residual uses the momentum iterate eta^k instead of
  /// the returned proximal iterate z^k.
  bool residual_on_momentum_iterate = false;
};

/// Per-iteration diagnostics. Values are reported for the internally
/// normalized problem (measurement scaled to unit-ish max by a power of
/// two); rel_residual is scale invariant.
struct MbirTraceEntry {
  int iteration = 0;
  double objective = 0.0;   ///< 0.5||model(z)-s||^2 + lambda sum w|z|
  double fidelity = 0.0;    ///< 0.5||model(z)-s||^2
  double l1 = 0.0;          ///< sum w|z|
  double rel_residual = 0.0;
  double seconds = 0.0;     ///< wall time since solve start
};

struct MbirResult {
  SusceptibilityImage image;            ///< final image (residual added if configured)
  std::vector<MbirTraceEntry> trace;
  bool converged = false;
  int iterations = 0;
  double model_norm = 0.0;              ///< estimate of ||2 Re Khat||
  double step = 0.0;
  double scale = 1.0;                   ///< measurement normalization constant
  /// ||model(z^k) - s_d|| before residual re-addition, unnormalized units.
  double final_data_residual_norm = 0.0;
  SusceptibilityImage sparse_image;     ///< z^k before residual re-addition
};

/// Measurement-domain forward model used by the solver and objective:
/// model(eta) = 2 Re(Khat eta). The factor two accounts for the conjugate
/// split of the real measurement, so reconstructions share the
/// half-amplitude scale of the direct, ISAM and greedy methods.
RealArray mbir_model(const SusceptibilityImage& eta, const NufftPlan& plan,
                     const DispersionModel& d);

/// F(eta) = 0.5 ||model(eta) - s_d||^2 + lambda sum_i w_i |eta_i|.
double objective(const SusceptibilityImage& eta, const RealSpectra& s_d,
                 const NufftPlan& plan, const DispersionModel& d,
                 double lambda, const WeightVector& w);

/// FISTA solve of
///   min_eta 0.5||2 Re(Khat eta) - s_d||^2 + lambda w^T|eta|
/// with step = step_scale / L^2 (L from power iteration on the full real
/// model), weighted soft-thresholding, the relative-residual stopping rule
/// and optional residual re-addition. Throws nonfinite_error naming the
/// iteration if an iterate goes non-finite.
MbirResult mbir_solve(const RealSpectra& s_d, const NufftPlan& plan,
                      const DispersionModel& d, const MbirConfig& cfg);

}  // namespace frisam

#endif

#include "frisam/operator.hpp"

#include <algorithm>
#include <random>

namespace frisam {

namespace {

// Kaiser-Bessel interpolation kernel, width taps on the oversampled grid.
// Kept unnormalized; the same convention is used in its Fourier transform,
// so the overall operator scale is exact.
double kb_eval(double xi, double half_width, double beta) {
  const double r = xi / half_width;
  const double arg = 1.0 - r * r;
  if (arg <= 0.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(arg));
}

// Continuous Fourier transform of kb_eval at frequency nu (cycles/sample).
double kb_ft(double nu, double width, double beta) {
  const double t = M_PI * width * nu;
  const double d2 = beta * beta - t * t;
  if (d2 > 0.0) {
    const double d = std::sqrt(d2);
    return width * std::sinh(d) / d;
  }
  const double d = std::sqrt(-d2);
  if (d == 0.0) return width;
  return width * std::sin(d) / d;
}

std::size_t wrap(long idx, std::size_t n) {
  long r = idx % long(n);
  if (r < 0) r += long(n);
  return std::size_t(r);
}

}  // namespace

double stolt_beta(double q_x, double k) {
  const double disc = 4.0 * k * k - q_x * q_x;
  if (disc < 0.0)
    throw config_error("stolt_beta: evanescent input, 4k^2 < q_x^2 (q_x=" +
                       std::to_string(q_x) + ", k=" + std::to_string(k) + ")");
  return -std::sqrt(disc);
}

struct NufftPlan::Impl {
  std::vector<double> rolloff;       // psi_hat((j - n_z/2)/N_os), per image j
  std::vector<std::int32_t> first_tap;  // base oversampled index per (m, i)
  std::vector<double> weights;       // width taps per (m, i)
  ComplexArray focal_phase;          // e^{i (2k + beta) z_f}
  double axial_scale = 0.0;          // 1/sqrt(n_z)
  double lateral_scale = 0.0;        // 1/sqrt(n_x)
  Fft1D os_fwd, os_bwd;              // length N_os
  Fft1D x_fwd, x_bwd;                // length n_x

  Impl(std::size_t n_os, std::size_t n_x)
      : os_fwd(n_os, Fft1D::Forward),
        os_bwd(n_os, Fft1D::Backward),
        x_fwd(n_x, Fft1D::Forward),
        x_bwd(n_x, Fft1D::Backward) {}
};

NufftPlan::NufftPlan() = default;
NufftPlan::NufftPlan(NufftPlan&&) noexcept = default;
NufftPlan& NufftPlan::operator=(NufftPlan&&) noexcept = default;
NufftPlan::~NufftPlan() = default;

namespace {

// Transverse unitary FFT over the A-scan axis, one z (or k) column at a
// time; the direction is picked by the plan handed in (x_fwd: x -> q_x,
// x_bwd: q_x -> x).
void transverse(const ComplexArray& in, ComplexArray& out, const Fft1D& fft,
                double scale) {
  const std::size_t n_x = in.n_x(), n_z = in.n_z();
  parallel_for(n_z, [&](std::size_t z) {
    std::vector<cplx> buf(n_x), res(n_x);
    for (std::size_t x = 0; x < n_x; ++x) buf[x] = in(x, z);
    fft.execute(buf.data(), res.data());
    for (std::size_t m = 0; m < n_x; ++m) out(m, z) = res[m] * scale;
  });
}

void forward_core(const ComplexArray& eta, const NufftPlan& plan,
                  ComplexArray& out) {
  const GridSpec& g = plan.grid();
  const auto& im = plan.impl();
  const std::size_t n_x = g.n_x, n_z = g.n_z, n_os = plan.oversampled_size();
  const int w = plan.kernel_width();

  ComplexArray qspace(n_x, n_z), sspec(n_x, n_z);
  transverse(eta, qspace, im.x_fwd, im.lateral_scale);

  parallel_for(n_x, [&](std::size_t m) {
    std::vector<cplx> osbuf(n_os, cplx(0.0)), osspec(n_os);
    const cplx* line = qspace.row(m);
    for (std::size_t j = 0; j < n_z; ++j) {
      const long signed_j = long(j) - long(n_z / 2);
      osbuf[wrap(signed_j, n_os)] = line[j] / im.rolloff[j];
    }
    im.os_fwd.execute(osbuf.data(), osspec.data());
    const std::int32_t* taps = &im.first_tap[m * n_z];
    const double* wts = &im.weights[m * n_z * std::size_t(w)];
    cplx* srow = sspec.row(m);
    for (std::size_t i = 0; i < n_z; ++i) {
      cplx acc = 0.0;
      const double* wt = wts + i * std::size_t(w);
      for (int t = 0; t < w; ++t)
        acc += osspec[wrap(taps[i] + t, n_os)] * wt[t];
      srow[i] = acc * im.axial_scale * im.focal_phase(m, i);
    }
  });

  transverse(sspec, out, im.x_bwd, im.lateral_scale);
}

void adjoint_core(const ComplexArray& s, const NufftPlan& plan,
                  ComplexArray& out) {
  const GridSpec& g = plan.grid();
  const auto& im = plan.impl();
  const std::size_t n_x = g.n_x, n_z = g.n_z, n_os = plan.oversampled_size();
  const int w = plan.kernel_width();

  ComplexArray qspec(n_x, n_z), qimage(n_x, n_z);
  transverse(s, qspec, im.x_fwd, im.lateral_scale);

  parallel_for(n_x, [&](std::size_t m) {
    std::vector<cplx> osbuf(n_os, cplx(0.0)), osimg(n_os);
    const cplx* srow = qspec.row(m);
    const std::int32_t* taps = &im.first_tap[m * n_z];
    const double* wts = &im.weights[m * n_z * std::size_t(w)];
    for (std::size_t i = 0; i < n_z; ++i) {
      const cplx v =
          srow[i] * std::conj(im.focal_phase(m, i)) * im.axial_scale;
      const double* wt = wts + i * std::size_t(w);
      for (int t = 0; t < w; ++t)
        osbuf[wrap(taps[i] + t, n_os)] += v * wt[t];
    }
    im.os_bwd.execute(osbuf.data(), osimg.data());
    cplx* line = qimage.row(m);
    for (std::size_t j = 0; j < n_z; ++j) {
      const long signed_j = long(j) - long(n_z / 2);
      line[j] = osimg[wrap(signed_j, n_os)] / im.rolloff[j];
    }
  });

  transverse(qimage, out, im.x_bwd, im.lateral_scale);
}

double estimate_norm(const NufftPlan& plan, int iters) {
  const GridSpec& g = plan.grid();
  std::mt19937_64 rng(0x5eedf00dULL);
  std::normal_distribution<double> nd(0.0, 1.0);
  ComplexArray v(g.n_x, g.n_z);
  for (auto& c : v.flat()) c = cplx(nd(rng), nd(rng));
  double nv = l2_norm(v);
  for (auto& c : v.flat()) c /= nv;

  double lambda = 1.0;
  ComplexArray u(g.n_x, g.n_z), w(g.n_x, g.n_z);
  for (int it = 0; it < iters; ++it) {
    forward_core(v, plan, u);
    adjoint_core(u, plan, w);
    lambda = l2_norm(w);  // = ||K^H K v|| -> lambda_max(K^H K)
    if (lambda == 0.0) return 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) w.flat()[i] /= lambda;
    std::swap(v, w);
  }
  return std::sqrt(lambda);
}

}  // namespace

NufftPlan plan_nufft(const GridSpec& grid, int kernel_width,
                     double oversampling, int norm_iters) {
  validate_grid(grid);
  if (kernel_width < 2 || kernel_width > 16)
    throw config_error("plan_nufft: kernel width must be in [2, 16]");
  if (oversampling < 1.25)
    throw config_error("plan_nufft: oversampling below the 1.25 floor");

  NufftPlan plan;
  plan.grid_ = grid;
  plan.width_ = kernel_width;
  plan.oversampling_ = oversampling;

  const std::size_t n_x = grid.n_x, n_z = grid.n_z;
  std::size_t n_os = std::size_t(std::ceil(oversampling * double(n_z)));
  if (n_os % 2) ++n_os;
  plan.n_os_ = n_os;

  // evanescent cutoff: every Stolt target must be real
  const double k_min = grid.k_min();
  for (std::size_t m = 0; m < n_x; ++m) {
    const double q = grid.q_at(m);
    if (4.0 * k_min * k_min <= q * q)
      throw config_error(
          "plan_nufft: evanescent cutoff violated at q_x=" + std::to_string(q) +
          " (need 4 k_min^2 > q_x^2); increase lateral pitch or k_min");
  }

  // Kaiser-Bessel shape parameter for this width/oversampling pair
  const double sigma = double(n_os) / double(n_z);
  const double w = double(kernel_width);
  const double arg = (w / sigma) * (w / sigma) * (sigma - 0.5) * (sigma - 0.5) - 0.8;
  if (!(arg > 0.0))
    throw config_error("plan_nufft: unsupported kernel width/oversampling pair");
  plan.kb_beta_ = M_PI * std::sqrt(arg);

  plan.impl_ = std::make_unique<NufftPlan::Impl>(n_os, n_x);
  auto& im = *plan.impl_;
  im.axial_scale = 1.0 / std::sqrt(double(n_z));
  im.lateral_scale = 1.0 / std::sqrt(double(n_x));

  im.rolloff.resize(n_z);
  for (std::size_t j = 0; j < n_z; ++j) {
    const double nu = (double(j) - double(n_z / 2)) / double(n_os);
    const double r = kb_ft(nu, w, plan.kb_beta_);
    if (!(r > 0.0))
      throw config_error(
          "plan_nufft: roll-off vanishes in the baseband; increase "
          "oversampling or kernel width");
    im.rolloff[j] = r;
  }

  plan.beta_ = RealArray(n_x, n_z);
  im.first_tap.resize(n_x * n_z);
  im.weights.resize(n_x * n_z * std::size_t(kernel_width));
  im.focal_phase = ComplexArray(n_x, n_z);

  const double dz = grid.dz();
  const double z_f = grid.focal_z();
  const double half_width = 0.5 * w;
  for (std::size_t m = 0; m < n_x; ++m) {
    const double q = grid.q_at(m);
    for (std::size_t i = 0; i < n_z; ++i) {
      const double k = grid.k_grid[i];
      const double beta = stolt_beta(q, k);
      plan.beta_(m, i) = beta;
      // normalized oversampled-grid coordinate of this target
      double theta = std::fmod(beta * dz * double(n_os) / (2.0 * M_PI),
                               double(n_os));
      if (theta < 0.0) theta += double(n_os);
      const std::int32_t u0 = std::int32_t(std::ceil(theta - half_width));
      im.first_tap[m * n_z + i] = u0;
      double* wt = &im.weights[(m * n_z + i) * std::size_t(kernel_width)];
      for (int t = 0; t < kernel_width; ++t)
        wt[t] = kb_eval(theta - double(u0 + t), half_width, plan.kb_beta_);
      im.focal_phase(m, i) = std::polar(1.0, (2.0 * k + beta) * z_f);
    }
  }

  plan.op_norm_ = estimate_norm(plan, norm_iters);
  return plan;
}

ComplexSpectra k_forward(const SusceptibilityImage& eta, const NufftPlan& plan) {
  check_shape(eta.data.n_x(), eta.data.n_z(), plan.grid(), "k_forward");
  ComplexSpectra out{ComplexArray(plan.grid().n_x, plan.grid().n_z),
                     SpaceTag::XK, plan.grid()};
  forward_core(eta.data, plan, out.data);
  return out;
}

SusceptibilityImage k_adjoint(const ComplexSpectra& s, const NufftPlan& plan) {
  check_shape(s.data.n_x(), s.data.n_z(), plan.grid(), "k_adjoint");
  SusceptibilityImage out{ComplexArray(plan.grid().n_x, plan.grid().n_z),
                          plan.grid()};
  adjoint_core(s.data, plan, out.data);
  return out;
}

ComplexSpectra khat_forward(const SusceptibilityImage& eta,
                            const NufftPlan& plan, const DispersionModel& d) {
  return apply_phase(k_forward(eta, plan), d, +1);
}

SusceptibilityImage khat_adjoint(const ComplexSpectra& s, const NufftPlan& plan,
                                 const DispersionModel& d) {
  return k_adjoint(apply_phase(s, d, -1), plan);
}

ComplexSpectra complexify(const RealSpectra& s) {
  ComplexSpectra out{ComplexArray(s.data.n_x(), s.data.n_z()), SpaceTag::XK,
                     s.grid};
  for (std::size_t i = 0; i < s.data.size(); ++i)
    out.data.flat()[i] = cplx(s.data.flat()[i], 0.0);
  return out;
}

SusceptibilityImage isam_reconstruct(const RealSpectra& s_d,
                                     const NufftPlan& plan,
                                     const DispersionModel& d) {
  return khat_adjoint(complexify(s_d), plan, d);
}

SusceptibilityImage ifft_reconstruct(const RealSpectra& s_d,
                                     const DispersionModel& d) {
  const GridSpec& g = s_d.grid;
  check_shape(s_d.data.n_x(), s_d.data.n_z(), g, "ifft_reconstruct");
  if (d.phase.size() != g.n_z)
    throw config_error("ifft_reconstruct: dispersion grid mismatch");

  SusceptibilityImage out{ComplexArray(g.n_x, g.n_z), g};
  AxialTransform axial(g);
  std::vector<cplx> rot(g.n_z);
  for (std::size_t i = 0; i < g.n_z; ++i)
    rot[i] = std::polar(1.0, -d.phase[i]);
  parallel_for(g.n_x, [&](std::size_t x) {
    std::vector<cplx> line(g.n_z);
    const double* in = s_d.data.row(x);
    for (std::size_t i = 0; i < g.n_z; ++i) line[i] = in[i] * rot[i];
    axial.inverse(line.data(), out.data.row(x));
  });
  return out;
}

}  // namespace frisam

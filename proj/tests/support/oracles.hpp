#ifndef FRISAM_TESTS_ORACLES_HPP
#define FRISAM_TESTS_ORACLES_HPP

// Independent reference implementations used as test oracles. Everything
// here is computed by direct summation from first principles and must stay
// decoupled from the library's fast paths.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "frisam/metrics.hpp"
#include "frisam/types.hpp"

namespace testsup {

using frisam::cplx;
using frisam::ComplexArray;
using frisam::GridSpec;
using frisam::RealArray;

inline double oracle_dz(const GridSpec& g) {
  const double dk = (g.k_grid.back() - g.k_grid.front()) / double(g.n_z - 1);
  return M_PI / (double(g.n_z) * dk);
}

inline double oracle_q(const GridSpec& g, std::size_t m) {
  const double bin = (m < (g.n_x + 1) / 2) ? double(m) : double(m) - double(g.n_x);
  return 2.0 * M_PI * bin / (double(g.n_x) * g.lateral_pitch);
}

/// Dense direct-sum evaluation of the forward scattering operator:
/// transverse DFT, exact nonuniform exponential sums onto the Stolt
/// ordinates with the focal phase, inverse transverse DFT.
inline ComplexArray oracle_forward(const ComplexArray& eta, const GridSpec& g) {
  const std::size_t n_x = g.n_x, n_z = g.n_z;
  const double dz = oracle_dz(g);
  const double z_f = (double(g.focal_z_index) - double(n_z / 2)) * dz;

  ComplexArray etaq(n_x, n_z), spec(n_x, n_z), out(n_x, n_z);
  const double sx = 1.0 / std::sqrt(double(n_x));
  const double sz = 1.0 / std::sqrt(double(n_z));

  for (std::size_t m = 0; m < n_x; ++m)
    for (std::size_t j = 0; j < n_z; ++j) {
      cplx acc = 0.0;
      for (std::size_t x = 0; x < n_x; ++x)
        acc += eta(x, j) *
               std::polar(1.0, -2.0 * M_PI * double(m) * double(x) / double(n_x));
      etaq(m, j) = acc * sx;
    }

  for (std::size_t m = 0; m < n_x; ++m) {
    const double q = oracle_q(g, m);
    for (std::size_t i = 0; i < n_z; ++i) {
      const double k = g.k_grid[i];
      const double beta = -std::sqrt(4.0 * k * k - q * q);
      cplx acc = 0.0;
      for (std::size_t j = 0; j < n_z; ++j) {
        const double z = (double(j) - double(n_z / 2)) * dz;
        acc += etaq(m, j) * std::polar(1.0, -beta * z);
      }
      spec(m, i) = acc * sz * std::polar(1.0, (2.0 * k + beta) * z_f);
    }
  }

  for (std::size_t x = 0; x < n_x; ++x)
    for (std::size_t i = 0; i < n_z; ++i) {
      cplx acc = 0.0;
      for (std::size_t m = 0; m < n_x; ++m)
        acc += spec(m, i) *
               std::polar(1.0, 2.0 * M_PI * double(m) * double(x) / double(n_x));
      out(x, i) = acc * sx;
    }
  return out;
}

/// Sliding-window SSIM via raw weighted moments (independent algebraic
/// route from the library's centered-difference implementation).
inline double oracle_ssim(const frisam::Image16& a, const frisam::Image16& b) {
  const int win = 11;
  const double sigma = 1.5;
  std::vector<double> w(win * win);
  double wsum = 0.0;
  for (int r = 0; r < win; ++r)
    for (int c = 0; c < win; ++c) {
      const double dr = r - 5.0, dc = c - 5.0;
      w[r * win + c] = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      wsum += w[r * win + c];
    }
  for (double& v : w) v /= wsum;

  const double c1 = std::pow(0.01 * 65535.0, 2);
  const double c2 = std::pow(0.03 * 65535.0, 2);
  double acc = 0.0;
  std::size_t cnt = 0;
  for (std::size_t r0 = 0; r0 + win <= a.n_x(); ++r0)
    for (std::size_t c0 = 0; c0 + win <= a.n_z(); ++c0) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int r = 0; r < win; ++r)
        for (int c = 0; c < win; ++c) {
          const double wv = w[r * win + c];
          const double xv = a(r0 + r, c0 + c), yv = b(r0 + r, c0 + c);
          sx += wv * xv;
          sy += wv * yv;
          sxx += wv * xv * xv;
          syy += wv * yv * yv;
          sxy += wv * xv * yv;
        }
      const double vx = sxx - sx * sx, vy = syy - sy * sy, cov = sxy - sx * sy;
      acc += ((2 * sx * sy + c1) * (2 * cov + c2)) /
             ((sx * sx + sy * sy + c1) * (vx + vy + c2));
      ++cnt;
    }
  return acc / double(cnt);
}

inline double oracle_psnr(const frisam::Image16& a, const frisam::Image16& b) {
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a.flat()[i]) - double(b.flat()[i]);
    mse += d * d;
  }
  mse /= double(a.size());
  if (mse == 0.0) return 120.0;
  return std::min(120.0, 10.0 * std::log10(65535.0 * 65535.0 / mse));
}

/// Lateral full width at half maximum of |row| at a fixed depth, measured on
/// the trigonometric interpolation of the complex row (8x refinement),
/// in units of lateral pixels.
inline double lateral_fwhm(const frisam::ComplexArray& img, std::size_t depth) {
  const std::size_t n = img.n_x();
  std::vector<cplx> coef(n);
  for (std::size_t m = 0; m < n; ++m) {
    cplx acc = 0.0;
    for (std::size_t x = 0; x < n; ++x)
      acc += img(x, depth) *
             std::polar(1.0, -2.0 * M_PI * double(m) * double(x) / double(n));
    coef[m] = acc;
  }
  const std::size_t fine = 8 * n;
  std::vector<double> mag(fine);
  for (std::size_t t = 0; t < fine; ++t) {
    const double x = double(t) / 8.0;
    cplx acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      double bin = (m < (n + 1) / 2) ? double(m) : double(m) - double(n);
      double wgt = 1.0;
      if (n % 2 == 0 && m == n / 2) wgt = 0.5;  // split Nyquist
      acc += wgt * coef[m] * std::polar(1.0, 2.0 * M_PI * bin * x / double(n));
      if (n % 2 == 0 && m == n / 2)
        acc += wgt * coef[m] * std::polar(1.0, -2.0 * M_PI * bin * x / double(n));
    }
    mag[t] = std::abs(acc) / double(n);
  }
  std::size_t peak = 0;
  for (std::size_t t = 1; t < fine; ++t)
    if (mag[t] > mag[peak]) peak = t;
  const double half = 0.5 * mag[peak];

  auto cross = [&](long dir) {
    long t = long(peak);
    for (std::size_t step = 0; step < fine; ++step) {
      long nx = t + dir;
      nx = ((nx % long(fine)) + long(fine)) % long(fine);
      if (mag[std::size_t(nx)] <= half) {
        // linear interpolation between t and nx
        const double f = (mag[std::size_t(t)] - half) /
                         (mag[std::size_t(t)] - mag[std::size_t(nx)]);
        return double(step) + f;
      }
      t = nx;
    }
    return double(fine);
  };
  return (cross(+1) + cross(-1)) / 8.0;
}

inline ComplexArray random_complex(std::size_t n_x, std::size_t n_z,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  ComplexArray a(n_x, n_z);
  for (auto& v : a.flat()) v = cplx(nd(rng), nd(rng));
  return a;
}

inline RealArray random_real(std::size_t n_x, std::size_t n_z,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  RealArray a(n_x, n_z);
  for (auto& v : a.flat()) v = nd(rng);
  return a;
}

}  // namespace testsup

#endif

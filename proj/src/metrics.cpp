#include "frisam/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace frisam {

double rmse(const SusceptibilityImage& a, const SusceptibilityImage& b) {
  if (!a.data.same_shape(b.data)) throw config_error("rmse: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    acc += std::norm(a.data.flat()[i] - b.data.flat()[i]);
  return std::sqrt(acc / double(a.data.size()));
}

Image16 log_scale_16bit(const SusceptibilityImage& img, double floor_db,
                        double ceil_db, std::optional<double> ref_max) {
  if (!(floor_db < ceil_db))
    throw config_error("log_scale_16bit: floor_db must be below ceil_db");
  double ref;
  if (ref_max) {
    ref = *ref_max;
  } else {
    ref = 0.0;
    for (const cplx& v : img.data.flat()) ref = std::max(ref, std::abs(v));
  }
  if (!(ref > 0.0))
    throw config_error("log_scale_16bit: all-zero image has no scale");

  Image16 out(img.data.n_x(), img.data.n_z());
  const double span = ceil_db - floor_db;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double mag = std::abs(img.data.flat()[i]);
    double db = (mag > 0.0) ? 20.0 * std::log10(mag / ref)
                            : -std::numeric_limits<double>::infinity();
    db = std::clamp(db, floor_db, ceil_db);
    const double mapped = (db - floor_db) / span * 65535.0;
    out.flat()[i] = std::uint16_t(std::nearbyint(mapped));  // half to even
  }
  return out;
}

double psnr(const Image16& a, const Image16& b) {
  if (!a.same_shape(b)) throw config_error("psnr: shape mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a.flat()[i]) - double(b.flat()[i]);
    mse += d * d;
  }
  mse /= double(a.size());
  if (mse == 0.0) return 120.0;
  return std::min(120.0, 10.0 * std::log10(65535.0 * 65535.0 / mse));
}

namespace {

// 11x11 Gaussian window, sigma 1.5, normalized to unit sum
constexpr int kWin = 11;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWin * kWin);
  const double sigma = 1.5;
  double sum = 0.0;
  for (int r = 0; r < kWin; ++r)
    for (int c = 0; c < kWin; ++c) {
      const double dr = r - (kWin - 1) / 2.0;
      const double dc = c - (kWin - 1) / 2.0;
      w[r * kWin + c] = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
      sum += w[r * kWin + c];
    }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double ssim(const Image16& a, const Image16& b) {
  if (!a.same_shape(b)) throw config_error("ssim: shape mismatch");
  const long rows = long(a.n_x()), cols = long(a.n_z());
  if (rows < kWin || cols < kWin)
    throw config_error("ssim: image smaller than the 11x11 window");

  static const std::vector<double> win = gaussian_window();
  const double c1 = (0.01 * 65535.0) * (0.01 * 65535.0);
  const double c2 = (0.03 * 65535.0) * (0.03 * 65535.0);

  double acc = 0.0;
  std::size_t count = 0;
  for (long r0 = 0; r0 + kWin <= rows; ++r0) {
    for (long c0 = 0; c0 + kWin <= cols; ++c0) {
      double mx = 0.0, my = 0.0;
      for (int r = 0; r < kWin; ++r)
        for (int c = 0; c < kWin; ++c) {
          const double w = win[r * kWin + c];
          mx += w * double(a(r0 + r, c0 + c));
          my += w * double(b(r0 + r, c0 + c));
        }
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (int r = 0; r < kWin; ++r)
        for (int c = 0; c < kWin; ++c) {
          const double w = win[r * kWin + c];
          const double dx = double(a(r0 + r, c0 + c)) - mx;
          const double dy = double(b(r0 + r, c0 + c)) - my;
          vx += w * dx * dx;
          vy += w * dy * dy;
          cov += w * dx * dy;
        }
      const double num = (2.0 * mx * my + c1) * (2.0 * cov + c2);
      const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
      acc += num / den;
      ++count;
    }
  }
  return acc / double(count);
}

EvalReport evaluate(const std::string& method, const SusceptibilityImage& test,
                    const SusceptibilityImage& reference, double floor_db,
                    double ceil_db) {
  double ref_max = 0.0;
  for (const cplx& v : reference.data.flat())
    ref_max = std::max(ref_max, std::abs(v));

  EvalReport rep;
  rep.method = method;
  rep.rmse = rmse(test, reference);
  rep.floor_db = floor_db;
  rep.ceil_db = ceil_db;
  rep.scale_ref = ref_max;
  const Image16 t16 = log_scale_16bit(test, floor_db, ceil_db, ref_max);
  const Image16 r16 = log_scale_16bit(reference, floor_db, ceil_db, ref_max);
  rep.psnr_db = psnr(t16, r16);
  rep.ssim_val = ssim(t16, r16);
  return rep;
}

}  // namespace frisam

#include "frisam/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <thread>

namespace frisam {

Fft1D::Fft1D(std::size_t n, Direction dir) : n_(n) {
  std::vector<cplx> tmp(n);
  // FFTW_UNALIGNED lets execute() run on any heap buffer.
  plan_ = fftw_plan_dft_1d(int(n), reinterpret_cast<fftw_complex*>(tmp.data()),
                           reinterpret_cast<fftw_complex*>(tmp.data()),
                           dir == Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan_) throw std::runtime_error("fftw plan creation failed");
}

Fft1D::~Fft1D() {
  if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

Fft1D::Fft1D(Fft1D&& o) noexcept : n_(o.n_), plan_(o.plan_) {
  o.plan_ = nullptr;
}

Fft1D& Fft1D::operator=(Fft1D&& o) noexcept {
  if (this != &o) {
    if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    n_ = o.n_;
    plan_ = o.plan_;
    o.plan_ = nullptr;
  }
  return *this;
}

void Fft1D::execute(const cplx* in, cplx* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(plan_),
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

AxialTransform::AxialTransform(const GridSpec& grid)
    : n_(grid.n_z),
      scale_(1.0 / std::sqrt(double(grid.n_z))),
      fwd_(grid.n_z, Fft1D::Forward),
      bwd_(grid.n_z, Fft1D::Backward) {
  carrier_.resize(n_);
  const double two_kmin = 2.0 * grid.k_min();
  for (std::size_t j = 0; j < n_; ++j)
    carrier_[j] = std::polar(1.0, two_kmin * grid.z_at(j));
}

// exp(+i 2 k_i z_j) = carrier_j * exp(+2 pi i * i * j / n) * (-1)^i
void AxialTransform::forward(const cplx* image, cplx* spectrum) const {
  std::vector<cplx> t(n_);
  for (std::size_t j = 0; j < n_; ++j) t[j] = image[j] * carrier_[j];
  bwd_.execute(t.data(), spectrum);
  for (std::size_t i = 0; i < n_; ++i) {
    spectrum[i] *= scale_;
    if (i & 1) spectrum[i] = -spectrum[i];
  }
}

void AxialTransform::inverse(const cplx* spectrum, cplx* image) const {
  std::vector<cplx> t(n_);
  for (std::size_t i = 0; i < n_; ++i)
    t[i] = (i & 1) ? -spectrum[i] : spectrum[i];
  fwd_.execute(t.data(), image);
  for (std::size_t j = 0; j < n_; ++j)
    image[j] *= scale_ * std::conj(carrier_[j]);
}

void AxialTransform::forward(const ComplexArray& img, ComplexArray& spec) const {
  parallel_for(img.n_x(),
               [&](std::size_t x) { forward(img.row(x), spec.row(x)); });
}

void AxialTransform::inverse(const ComplexArray& spec, ComplexArray& img) const {
  parallel_for(spec.n_x(),
               [&](std::size_t x) { inverse(spec.row(x), img.row(x)); });
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  static const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min(hw, n);
  if (workers <= 1 || n < 4) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace frisam

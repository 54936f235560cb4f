#ifndef FRISAM_FFT_HPP
#define FRISAM_FFT_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "frisam/types.hpp"

namespace frisam {

/// Unnormalized 1D complex DFT of fixed length, one plan per direction.
///
/// Plan construction is not thread safe and must happen during setup;
/// execute() is safe to call concurrently on distinct buffers.
class Fft1D {
public:
  enum Direction { Forward, Backward };  // Forward: e^{-2*pi*i*u*j/n}

  Fft1D(std::size_t n, Direction dir);
  ~Fft1D();
  Fft1D(const Fft1D&) = delete;
  Fft1D& operator=(const Fft1D&) = delete;
  Fft1D(Fft1D&&) noexcept;
  Fft1D& operator=(Fft1D&&) noexcept;

  std::size_t size() const { return n_; }
  /// out may alias in.
  void execute(const cplx* in, cplx* out) const;

private:
  std::size_t n_ = 0;
  void* plan_ = nullptr;
};

/// Exact unitary discrete pair between the axial delay axis and the
/// wavenumber axis:
///
///   forward:  s_i = n^{-1/2} sum_j eta_j exp(+i 2 k_i z_j)
///   inverse:  eta_j = n^{-1/2} sum_i s_i exp(-i 2 k_i z_j)
///
/// With z_j = (j - n/2) dz and 2 dk dz = 2 pi / n the pair is an exact
/// inverse/adjoint; the carrier exp(i 2 k_min z_j) keeps discrete delays
/// aligned with physical ones.
class AxialTransform {
public:
  explicit AxialTransform(const GridSpec& grid);

  std::size_t n() const { return n_; }
  /// image line (length n) -> spectrum line (length n)
  void forward(const cplx* image, cplx* spectrum) const;
  /// spectrum line -> image line
  void inverse(const cplx* spectrum, cplx* image) const;

  void forward(const ComplexArray& img, ComplexArray& spec) const;
  void inverse(const ComplexArray& spec, ComplexArray& img) const;

private:
  std::size_t n_;
  double scale_;
  std::vector<cplx> carrier_;  // exp(+i 2 k_min z_j)
  Fft1D fwd_, bwd_;
};

/// Runs fn(i) for i in [0, n). Deterministic: output must depend only on i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace frisam

#endif

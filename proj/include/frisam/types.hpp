#ifndef FRISAM_TYPES_HPP
#define FRISAM_TYPES_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace frisam {

using cplx = std::complex<double>;

/// Thrown for invalid construction parameters or malformed configuration.
class config_error : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an input file is missing, unreadable or fails to parse.
class io_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when an iterative solver produces a non-finite iterate.
class nonfinite_error : public std::runtime_error {
public:
  nonfinite_error(const std::string& what, int iteration)
      : std::runtime_error(what), iteration(iteration) {}
  int iteration;
};

/// Acquisition geometry shared by every operator and solver.
///
/// The axial image axis holds n_z delay samples with zero delay at index
/// n_z/2; positive delay occupies the upper half. The wavenumber axis is a
/// uniform inclusive grid of n_z samples on [k_min, k_max] in rad/um.
struct GridSpec {
  std::size_t n_x = 0;          ///< number of A-scans
  std::size_t n_z = 0;          ///< spectral samples per A-scan (= depth samples)
  std::vector<double> k_grid;   ///< rad/um, strictly increasing, uniform
  double lateral_pitch = 0.0;   ///< um between adjacent A-scans
  std::size_t focal_z_index = 0;///< axial pixel index of the focal plane

  double k_min() const { return k_grid.front(); }
  double k_max() const { return k_grid.back(); }
  /// Wavenumber spacing (inclusive-endpoint grid).
  double dk() const { return (k_max() - k_min()) / double(n_z - 1); }
  /// Axial pixel size; chosen so the discrete axial transform pair is exact:
  /// 2*dk*dz = 2*pi/n_z.
  double dz() const { return M_PI / (double(n_z) * dk()); }
  std::size_t zero_delay_index() const { return n_z / 2; }
  /// Delay coordinate of axial pixel j, um.
  double z_at(std::size_t j) const {
    return (double(j) - double(n_z / 2)) * dz();
  }
  double focal_z() const { return z_at(focal_z_index); }
  /// Signed transverse frequency of FFT bin m, rad/um.
  double q_at(std::size_t m) const {
    const double signed_bin =
        (m < (n_x + 1) / 2) ? double(m) : double(m) - double(n_x);
    return 2.0 * M_PI * signed_bin / (double(n_x) * lateral_pitch);
  }
  /// Largest |q| on the transverse grid.
  double q_abs_max() const;

  bool operator==(const GridSpec&) const = default;
};

/// Builds a GridSpec and validates every invariant.
/// k_grid becomes n_z uniform samples on [k_min, k_max] inclusive.
GridSpec make_grid(std::size_t n_x, std::size_t n_z, double k_min,
                   double k_max, double lateral_pitch,
                   std::size_t focal_z_index);

/// Validates invariants of an already-populated grid (used after
/// deserialization). Throws config_error on violation.
void validate_grid(const GridSpec& g);

/// Dense row-major 2D array; A-scan index varies slowest, so each A-scan
/// (fixed x) is contiguous along z.
template <class T>
class Array2D {
public:
  Array2D() = default;
  Array2D(std::size_t n_x, std::size_t n_z, T fill = T{})
      : nx_(n_x), nz_(n_z), v_(n_x * n_z, fill) {}

  std::size_t n_x() const { return nx_; }
  std::size_t n_z() const { return nz_; }
  std::size_t size() const { return v_.size(); }

  T& operator()(std::size_t x, std::size_t z) { return v_[x * nz_ + z]; }
  const T& operator()(std::size_t x, std::size_t z) const {
    return v_[x * nz_ + z];
  }
  T* row(std::size_t x) { return v_.data() + x * nz_; }
  const T* row(std::size_t x) const { return v_.data() + x * nz_; }
  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  std::vector<T>& flat() { return v_; }
  const std::vector<T>& flat() const { return v_; }

  bool same_shape(const Array2D& o) const {
    return nx_ == o.nx_ && nz_ == o.nz_;
  }

private:
  std::size_t nx_ = 0, nz_ = 0;
  std::vector<T> v_;
};

using RealArray = Array2D<double>;
using ComplexArray = Array2D<cplx>;

/// Which transverse coordinate a complex spectrum is expressed in.
enum class SpaceTag { XK, QxK };

/// Measured real interferogram s_d, one spectrum per A-scan.
struct RealSpectra {
  RealArray data;
  GridSpec grid;
};

/// Complex interferometric signal or intermediate complex spectrum.
struct ComplexSpectra {
  ComplexArray data;
  SpaceTag space = SpaceTag::XK;
  GridSpec grid;
};

/// Complex object susceptibility on the (x, z) grid, full depth range.
struct SusceptibilityImage {
  ComplexArray data;
  GridSpec grid;
};

/// Per-depth nonnegative weights, broadcast across A-scans.
struct WeightVector {
  std::vector<double> w;
};

inline void check_shape(std::size_t an_x, std::size_t an_z,
                        const GridSpec& g, const char* what) {
  if (an_x != g.n_x || an_z != g.n_z)
    throw config_error(std::string(what) + ": array shape (" +
                       std::to_string(an_x) + "x" + std::to_string(an_z) +
                       ") does not match grid (" + std::to_string(g.n_x) +
                       "x" + std::to_string(g.n_z) + ")");
}

template <class T>
bool all_finite(const Array2D<T>& a) {
  for (const auto& v : a.flat()) {
    if constexpr (std::is_same_v<T, cplx>) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    } else {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

double l2_norm(const RealArray& a);
double l2_norm(const ComplexArray& a);
cplx dot(const ComplexArray& a, const ComplexArray& b);  // sum conj(a)*b

}  // namespace frisam

#endif

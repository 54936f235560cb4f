#ifndef FRISAM_IO_HPP
#define FRISAM_IO_HPP

#include <filesystem>
#include <optional>
#include <string>

#include "frisam/dispersion.hpp"
#include "frisam/metrics.hpp"
#include "frisam/types.hpp"

namespace frisam {

/// Array files live as a pair: a UTF-8 JSON header at <stem>.json and a raw
/// little-endian array at <stem>.bin, row-major with the A-scan index
/// varying slowest. Real data is stored as f32 ("f32"); complex data as
/// interleaved (re, im) f32 pairs ("c64"). An optional dispersion model
/// {k_0, coeffs} rides along in the header.

void save_real_spectra(const std::filesystem::path& stem, const RealSpectra& s,
                       const std::optional<DispersionModel>& d = std::nullopt);
void save_complex_spectra(const std::filesystem::path& stem,
                          const ComplexSpectra& s,
                          const std::optional<DispersionModel>& d = std::nullopt);
void save_image(const std::filesystem::path& stem, const SusceptibilityImage& img,
                const std::optional<DispersionModel>& d = std::nullopt);

struct LoadedReal {
  RealSpectra spectra;
  std::optional<DispersionModel> dispersion;
};
struct LoadedComplex {
  ComplexSpectra spectra;
  std::optional<DispersionModel> dispersion;
};
struct LoadedImage {
  SusceptibilityImage image;
  std::optional<DispersionModel> dispersion;
};

LoadedReal load_real_spectra(const std::filesystem::path& stem);
LoadedComplex load_complex_spectra(const std::filesystem::path& stem);
LoadedImage load_image(const std::filesystem::path& stem);

/// Standalone dispersion model file (plain JSON {k_0, coeffs}).
void save_dispersion(const std::filesystem::path& path, const DispersionModel& d);
DispersionModel load_dispersion(const std::filesystem::path& path,
                                const GridSpec& grid);

/// 16-bit grayscale PNG; rows run along depth, columns along x.
void save_png16(const std::filesystem::path& path, const Image16& img);

/// Writes content to a temp file in the same directory and renames it into
/// place, so interrupted runs leave no partial artifacts.
void atomic_write_text(const std::filesystem::path& path,
                       const std::string& content);
void atomic_write_bytes(const std::filesystem::path& path,
                        const void* data, std::size_t bytes);

}  // namespace frisam

#endif

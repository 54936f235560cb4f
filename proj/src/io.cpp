#include "frisam/io.hpp"

#include <png.h>

#include <bit>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "array files are little-endian; big-endian hosts unsupported");

namespace frisam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json grid_header(const GridSpec& g, const std::string& dtype,
                 const std::string& kind) {
  json j;
  j["n_x"] = g.n_x;
  j["n_z"] = g.n_z;
  j["k_min"] = g.k_min();
  j["k_max"] = g.k_max();
  j["lateral_pitch"] = g.lateral_pitch;
  j["focal_z_index"] = g.focal_z_index;
  j["dtype"] = dtype;
  j["byte_order"] = "little";
  j["kind"] = kind;
  return j;
}

void attach_dispersion(json& j, const std::optional<DispersionModel>& d) {
  if (!d) return;
  j["dispersion"] = {{"k_0", d->k_0}, {"coeffs", d->coeffs}};
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open " + path.string());
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw io_error("cannot parse " + path.string() + ": " + e.what());
  }
  return j;
}

struct Header {
  GridSpec grid;
  std::string dtype;
  std::string kind;
  std::optional<DispersionModel> dispersion;
};

Header parse_header(const fs::path& path) {
  const json j = read_json(path);
  Header h;
  try {
    h.grid = make_grid(j.at("n_x").get<std::size_t>(),
                       j.at("n_z").get<std::size_t>(),
                       j.at("k_min").get<double>(), j.at("k_max").get<double>(),
                       j.at("lateral_pitch").get<double>(),
                       j.at("focal_z_index").get<std::size_t>());
    h.dtype = j.at("dtype").get<std::string>();
    h.kind = j.value("kind", std::string("unknown"));
    if (j.value("byte_order", std::string("little")) != "little")
      throw io_error("unsupported byte order in " + path.string());
    if (j.contains("dispersion")) {
      const auto& dj = j.at("dispersion");
      h.dispersion = dispersion_phase(
          h.grid, dj.at("k_0").get<double>(),
          dj.at("coeffs").get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw io_error("bad header " + path.string() + ": " + e.what());
  }
  return h;
}

std::vector<float> read_floats(const fs::path& path, std::size_t expected) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open " + path.string());
  std::vector<float> buf(expected);
  f.read(reinterpret_cast<char*>(buf.data()),
         std::streamsize(expected * sizeof(float)));
  if (std::size_t(f.gcount()) != expected * sizeof(float))
    throw io_error("short read from " + path.string());
  return buf;
}

fs::path header_path(const fs::path& stem) {
  fs::path p = stem;
  p += ".json";
  return p;
}
fs::path data_path(const fs::path& stem) {
  fs::path p = stem;
  p += ".bin";
  return p;
}

}  // namespace

void atomic_write_text(const fs::path& path, const std::string& content) {
  atomic_write_bytes(path, content.data(), content.size());
}

void atomic_write_bytes(const fs::path& path, const void* data,
                        std::size_t bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot create " + tmp.string());
    f.write(static_cast<const char*>(data), std::streamsize(bytes));
    if (!f) throw io_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw io_error("rename failed for " + path.string() + ": " + ec.message());
}

void save_real_spectra(const fs::path& stem, const RealSpectra& s,
                       const std::optional<DispersionModel>& d) {
  json j = grid_header(s.grid, "f32", "real_spectra");
  attach_dispersion(j, d);
  std::vector<float> buf(s.data.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = float(s.data.flat()[i]);
  atomic_write_bytes(data_path(stem), buf.data(), buf.size() * sizeof(float));
  atomic_write_text(header_path(stem), j.dump(2) + "\n");
}

namespace {

void save_complex_array(const fs::path& stem, const ComplexArray& a, json j) {
  std::vector<float> buf(a.size() * 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    buf[2 * i] = float(a.flat()[i].real());
    buf[2 * i + 1] = float(a.flat()[i].imag());
  }
  atomic_write_bytes(data_path(stem), buf.data(), buf.size() * sizeof(float));
  atomic_write_text(header_path(stem), j.dump(2) + "\n");
}

ComplexArray load_complex_array(const fs::path& stem, const GridSpec& g) {
  const auto buf = read_floats(data_path(stem), g.n_x * g.n_z * 2);
  ComplexArray a(g.n_x, g.n_z);
  for (std::size_t i = 0; i < a.size(); ++i)
    a.flat()[i] = cplx(double(buf[2 * i]), double(buf[2 * i + 1]));
  return a;
}

}  // namespace

void save_complex_spectra(const fs::path& stem, const ComplexSpectra& s,
                          const std::optional<DispersionModel>& d) {
  json j = grid_header(s.grid, "c64", "complex_spectra");
  j["space"] = (s.space == SpaceTag::XK) ? "x-k" : "qx-k";
  attach_dispersion(j, d);
  save_complex_array(stem, s.data, std::move(j));
}

void save_image(const fs::path& stem, const SusceptibilityImage& img,
                const std::optional<DispersionModel>& d) {
  json j = grid_header(img.grid, "c64", "susceptibility");
  attach_dispersion(j, d);
  save_complex_array(stem, img.data, std::move(j));
}

LoadedReal load_real_spectra(const fs::path& stem) {
  const Header h = parse_header(header_path(stem));
  if (h.dtype != "f32")
    throw io_error("expected f32 data at " + stem.string());
  const auto buf = read_floats(data_path(stem), h.grid.n_x * h.grid.n_z);
  LoadedReal out{RealSpectra{RealArray(h.grid.n_x, h.grid.n_z), h.grid},
                 h.dispersion};
  for (std::size_t i = 0; i < buf.size(); ++i)
    out.spectra.data.flat()[i] = double(buf[i]);
  return out;
}

LoadedComplex load_complex_spectra(const fs::path& stem) {
  const Header h = parse_header(header_path(stem));
  if (h.dtype != "c64")
    throw io_error("expected c64 data at " + stem.string());
  const json j = read_json(header_path(stem));
  const SpaceTag tag = (j.value("space", std::string("x-k")) == "qx-k")
                           ? SpaceTag::QxK
                           : SpaceTag::XK;
  LoadedComplex out{
      ComplexSpectra{load_complex_array(stem, h.grid), tag, h.grid},
      h.dispersion};
  return out;
}

LoadedImage load_image(const fs::path& stem) {
  const Header h = parse_header(header_path(stem));
  if (h.dtype != "c64")
    throw io_error("expected c64 data at " + stem.string());
  LoadedImage out{
      SusceptibilityImage{load_complex_array(stem, h.grid), h.grid},
      h.dispersion};
  return out;
}

void save_dispersion(const fs::path& path, const DispersionModel& d) {
  json j;
  j["kind"] = "dispersion";
  j["k_0"] = d.k_0;
  j["coeffs"] = d.coeffs;
  atomic_write_text(path, j.dump(2) + "\n");
}

DispersionModel load_dispersion(const fs::path& path, const GridSpec& grid) {
  const json j = read_json(path);
  try {
    return dispersion_phase(grid, j.at("k_0").get<double>(),
                            j.at("coeffs").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw io_error("bad dispersion file " + path.string() + ": " + e.what());
  }
}

void save_png16(const fs::path& path, const Image16& img) {
  // rows along depth so B-scans display upright: row r = depth index,
  // column c = A-scan index
  const std::size_t rows = img.n_z(), cols = img.n_x();

  fs::path tmp = path;
  tmp += ".tmp";
  std::FILE* fp = std::fopen(tmp.c_str(), "wb");
  if (!fp) throw io_error("cannot create " + tmp.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw io_error("png write failed for " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(cols), png_uint_32(rows), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<std::uint8_t> row(cols * 2);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::uint16_t v = img(c, r);  // (x, z) layout
      row[2 * c] = std::uint8_t(v >> 8);  // PNG is big-endian
      row[2 * c + 1] = std::uint8_t(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);

  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw io_error("rename failed for " + path.string());
}

}  // namespace frisam

// Python bindings for the main reconstruction operations. Arrays cross the
// boundary as numpy (n_x, n_z) matrices; plans are built per call, which is
// fine at interactive scales.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "frisam/defr.hpp"
#include "frisam/mbir.hpp"
#include "frisam/metrics.hpp"
#include "frisam/operator.hpp"
#include "frisam/synthesis.hpp"

namespace py = pybind11;
using namespace frisam;

namespace {

using CArray = py::array_t<std::complex<double>,
                           py::array::c_style | py::array::forcecast>;
using RArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ComplexArray to_complex(const CArray& a, const GridSpec& g, const char* what) {
  if (a.ndim() != 2) throw config_error(std::string(what) + ": expected a 2-d array");
  check_shape(std::size_t(a.shape(0)), std::size_t(a.shape(1)), g, what);
  ComplexArray out(g.n_x, g.n_z);
  std::copy(a.data(), a.data() + out.size(), out.data());
  return out;
}

RealArray to_real(const RArray& a, const GridSpec& g, const char* what) {
  if (a.ndim() != 2) throw config_error(std::string(what) + ": expected a 2-d array");
  check_shape(std::size_t(a.shape(0)), std::size_t(a.shape(1)), g, what);
  RealArray out(g.n_x, g.n_z);
  std::copy(a.data(), a.data() + out.size(), out.data());
  return out;
}

template <class T>
py::array from_array(const Array2D<T>& a) {
  py::array_t<T> out({a.n_x(), a.n_z()});
  std::copy(a.data(), a.data() + a.size(), out.mutable_data());
  return out;
}

DispersionModel make_dispersion(const GridSpec& g, double k0,
                                const std::vector<double>& coeffs) {
  return dispersion_phase(g, k0, coeffs);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Dispersion-encoded full-range ISAM reconstruction: forward model, "
      "direct/ISAM/DEFR/MBIR solvers, phantom synthesis and image metrics";

  py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<nonfinite_error>(m, "NonFiniteError",
                                          PyExc_RuntimeError);

  py::class_<GridSpec>(m, "Grid")
      .def(py::init([](std::size_t n_x, std::size_t n_z, double k_min,
                       double k_max, double pitch, std::size_t focal) {
             return make_grid(n_x, n_z, k_min, k_max, pitch, focal);
           }),
           py::arg("n_x"), py::arg("n_z"), py::arg("k_min"), py::arg("k_max"),
           py::arg("lateral_pitch"), py::arg("focal_z_index"))
      .def_readonly("n_x", &GridSpec::n_x)
      .def_readonly("n_z", &GridSpec::n_z)
      .def_readonly("lateral_pitch", &GridSpec::lateral_pitch)
      .def_readonly("focal_z_index", &GridSpec::focal_z_index)
      .def_property_readonly(
          "k_grid", [](const GridSpec& g) { return py::array(py::cast(g.k_grid)); })
      .def_property_readonly("dz", &GridSpec::dz)
      .def_property_readonly("zero_delay_index", &GridSpec::zero_delay_index);

  py::class_<DispersionModel>(m, "Dispersion")
      .def_readonly("k_0", &DispersionModel::k_0)
      .def_readonly("coeffs", &DispersionModel::coeffs)
      .def_property_readonly("phase", [](const DispersionModel& d) {
        return py::array(py::cast(d.phase));
      });

  m.def("dispersion", &make_dispersion, py::arg("grid"), py::arg("k_0"),
        py::arg("coeffs"),
        "Dispersion phase model with coefficients a_2..a_Np");

  m.def(
      "phantom_points",
      [](const GridSpec& g,
         const std::vector<std::tuple<double, double, std::complex<double>>>&
             pts) {
        PhantomSpec spec;
        spec.grid = g;
        for (const auto& [x, z, a] : pts) spec.scatterers.push_back({x, z, a});
        return from_array(phantom_image(spec).data);
      },
      py::arg("grid"), py::arg("scatterers"),
      "Sparse image from (x_um, z_um, amplitude) triples");

  m.def(
      "phantom_random",
      [](const GridSpec& g, std::size_t count, double amp_min, double amp_max,
         double min_sep, std::uint64_t seed, py::object z_lo, py::object z_hi,
         py::object x_lo, py::object x_hi) {
        PhantomSpec spec;
        spec.grid = g;
        ProceduralPhantom p;
        p.count = count;
        p.amp_min = amp_min;
        p.amp_max = amp_max;
        p.min_separation_px = min_sep;
        p.seed = seed;
        if (!z_lo.is_none()) p.z_lo = z_lo.cast<std::size_t>();
        if (!z_hi.is_none()) p.z_hi = z_hi.cast<std::size_t>();
        if (!x_lo.is_none()) p.x_lo = x_lo.cast<std::size_t>();
        if (!x_hi.is_none()) p.x_hi = x_hi.cast<std::size_t>();
        spec.procedural = p;
        return from_array(phantom_image(spec).data);
      },
      py::arg("grid"), py::arg("count"), py::arg("amp_min") = 0.3,
      py::arg("amp_max") = 1.0, py::arg("min_separation_px") = 3.0,
      py::arg("seed") = 0, py::arg("z_lo") = py::none(),
      py::arg("z_hi") = py::none(), py::arg("x_lo") = py::none(),
      py::arg("x_hi") = py::none(),
      "Seeded procedural phantom with a minimum pixel separation");

  m.def(
      "k_forward",
      [](const GridSpec& g, const CArray& eta, int width, double oversample) {
        const NufftPlan plan = plan_nufft(g, width, oversample, 15);
        return from_array(
            k_forward(SusceptibilityImage{to_complex(eta, g, "k_forward"), g},
                      plan)
                .data);
      },
      py::arg("grid"), py::arg("eta"), py::arg("width") = 6,
      py::arg("oversample") = 2.0, "Scattering operator K applied to an image");

  m.def(
      "k_adjoint",
      [](const GridSpec& g, const CArray& s, int width, double oversample) {
        const NufftPlan plan = plan_nufft(g, width, oversample, 15);
        return from_array(
            k_adjoint(
                ComplexSpectra{to_complex(s, g, "k_adjoint"), SpaceTag::XK, g},
                plan)
                .data);
      },
      py::arg("grid"), py::arg("spectra"), py::arg("width") = 6,
      py::arg("oversample") = 2.0, "Adjoint K^H applied to complex spectra");

  m.def(
      "simulate",
      [](const GridSpec& g, const CArray& eta, const DispersionModel& d,
         double noise_sigma, std::uint64_t seed, int width, double oversample) {
        const NufftPlan plan = plan_nufft(g, width, oversample, 15);
        return from_array(
            simulate_measurement(
                SusceptibilityImage{to_complex(eta, g, "simulate"), g}, plan,
                d, noise_sigma, seed)
                .data);
      },
      py::arg("grid"), py::arg("eta"), py::arg("dispersion"),
      py::arg("noise_sigma") = 0.0, py::arg("seed") = 0, py::arg("width") = 6,
      py::arg("oversample") = 2.0,
      "Dispersion-encoded real measurement Re(Khat eta) + noise");

  m.def(
      "synthesize_fullrange",
      [](const GridSpec& g, const RArray& half, const DispersionModel& dk,
         const DispersionModel& de, long shift, int width, double oversample) {
        const NufftPlan plan = plan_nufft(g, width, oversample, 15);
        const FullRangeSynthesis syn = synthesize_fullrange(
            RealSpectra{to_real(half, g, "synthesize_fullrange"), g}, dk, de,
            shift, plan);
        return py::make_tuple(from_array(syn.ground_truth.data),
                              from_array(syn.s_d.data), syn.out_grid);
      },
      py::arg("grid"), py::arg("half_range"), py::arg("d_known"),
      py::arg("d_encode"), py::arg("delay_shift"), py::arg("width") = 6,
      py::arg("oversample") = 2.0,
      "Pseudo-full-range protocol: returns (ground_truth, s_d, out_grid)");

  m.def(
      "reconstruct",
      [](const GridSpec& g, const RArray& sd_in, const DispersionModel& d,
         const std::string& method, double lam, double tol, int max_iters,
         bool add_residual, double w_min, double w_max, int defr_iters,
         double defr_floor, bool defr_residual, int width, double oversample) {
        const RealSpectra sd{to_real(sd_in, g, "reconstruct"), g};
        if (method == "ifft") return from_array(ifft_reconstruct(sd, d).data);
        if (method == "defr")
          return from_array(
              defr_image(defr_solve(sd, d, defr_iters, defr_floor), d,
                         defr_residual)
                  .data);
        const NufftPlan plan = plan_nufft(g, width, oversample, 15);
        if (method == "isam")
          return from_array(isam_reconstruct(sd, plan, d).data);
        if (method == "defr-isam")
          return from_array(
              defr_isam(sd, d, plan, defr_iters, defr_floor).data);
        if (method == "mbir" || method == "mbir+") {
          MbirConfig cfg;
          cfg.lambda = lam;
          cfg.tol = tol;
          cfg.max_iters = max_iters;
          cfg.add_residual = add_residual;
          cfg.norm_iters = 25;
          cfg.weights = (method == "mbir+") ? depth_weights(g, w_min, w_max)
                                            : uniform_weights(g);
          return from_array(mbir_solve(sd, plan, d, cfg).image.data);
        }
        throw config_error("unknown method '" + method + "'");
      },
      py::arg("grid"), py::arg("s_d"), py::arg("dispersion"),
      py::arg("method") = "mbir+", py::arg("lambda_") = 0.5,
      py::arg("tol") = 1e-3, py::arg("max_iters") = 500,
      py::arg("add_residual") = true, py::arg("w_min") = 0.5,
      py::arg("w_max") = 1.0, py::arg("defr_iters") = 500,
      py::arg("defr_floor") = 1e-4, py::arg("defr_residual") = true,
      py::arg("width") = 6, py::arg("oversample") = 2.0,
      "Reconstruct with ifft | isam | defr | defr-isam | mbir | mbir+");

  m.def(
      "autofocus",
      [](const GridSpec& g, const RArray& sd_in, double k0, double a2_min,
         double a2_max, double a3_min, double a3_max, std::size_t grid_points,
         std::size_t refine_iters) {
        AutofocusOptions opt;
        opt.a2_min = a2_min;
        opt.a2_max = a2_max;
        opt.a3_min = a3_min;
        opt.a3_max = a3_max;
        opt.grid_points = grid_points;
        opt.refine_iters = refine_iters;
        const AutofocusResult r =
            autofocus(RealSpectra{to_real(sd_in, g, "autofocus"), g}, k0, opt);
        py::dict out;
        out["a2"] = r.model.a(2);
        out["a3"] = r.model.a(3);
        out["converged"] = r.converged;
        out["entropy"] = r.cost;
        out["model"] = r.model;
        return out;
      },
      py::arg("grid"), py::arg("s_d"), py::arg("k_0") = 7.854,
      py::arg("a2_min") = 0.0, py::arg("a2_max") = 150.0,
      py::arg("a3_min") = -20.0, py::arg("a3_max") = 20.0,
      py::arg("grid_points") = 21, py::arg("refine_iters") = 200,
      "Entropy autofocus over (a2, a3)");

  m.def(
      "depth_weights",
      [](const GridSpec& g, double w_min, double w_max) {
        return py::array(py::cast(depth_weights(g, w_min, w_max).w));
      },
      py::arg("grid"), py::arg("w_min") = 0.5, py::arg("w_max") = 1.0);

  m.def(
      "rmse",
      [](const GridSpec& g, const CArray& a, const CArray& b) {
        return rmse(SusceptibilityImage{to_complex(a, g, "rmse"), g},
                    SusceptibilityImage{to_complex(b, g, "rmse"), g});
      },
      py::arg("grid"), py::arg("a"), py::arg("b"));

  m.def(
      "log_scale_16bit",
      [](const GridSpec& g, const CArray& img, double floor_db, double ceil_db,
         py::object ref) {
        std::optional<double> r;
        if (!ref.is_none()) r = ref.cast<double>();
        return from_array(log_scale_16bit(
            SusceptibilityImage{to_complex(img, g, "log_scale_16bit"), g},
            floor_db, ceil_db, r));
      },
      py::arg("grid"), py::arg("image"), py::arg("floor_db") = -60.0,
      py::arg("ceil_db") = 0.0, py::arg("ref_max") = py::none());

  m.def("psnr16",
        [](const py::array_t<std::uint16_t,
                             py::array::c_style | py::array::forcecast>& a,
           const py::array_t<std::uint16_t,
                             py::array::c_style | py::array::forcecast>& b) {
          Image16 ia(std::size_t(a.shape(0)), std::size_t(a.shape(1)));
          Image16 ib(std::size_t(b.shape(0)), std::size_t(b.shape(1)));
          std::copy(a.data(), a.data() + ia.size(), ia.data());
          std::copy(b.data(), b.data() + ib.size(), ib.data());
          return psnr(ia, ib);
        });

  m.def("ssim16",
        [](const py::array_t<std::uint16_t,
                             py::array::c_style | py::array::forcecast>& a,
           const py::array_t<std::uint16_t,
                             py::array::c_style | py::array::forcecast>& b) {
          Image16 ia(std::size_t(a.shape(0)), std::size_t(a.shape(1)));
          Image16 ib(std::size_t(b.shape(0)), std::size_t(b.shape(1)));
          std::copy(a.data(), a.data() + ia.size(), ia.data());
          std::copy(b.data(), b.data() + ib.size(), ib.data());
          return ssim(ia, ib);
        });

#ifdef FRISAM_VERSION
  m.attr("__version__") = FRISAM_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}

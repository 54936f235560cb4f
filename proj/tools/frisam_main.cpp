// frisam: full-range ISAM reconstruction toolkit command line.
//
// Subcommands: synth, reconstruct, autofocus, compare, bench.
// Exit codes: 0 ok, 2 bad configuration, 3 unreadable input,
// 4 solver produced non-finite values, 5 autofocus did not converge
// (its output is still written).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "frisam/defr.hpp"
#include "frisam/io.hpp"
#include "frisam/mbir.hpp"
#include "frisam/metrics.hpp"
#include "frisam/operator.hpp"
#include "frisam/synthesis.hpp"

namespace fs = std::filesystem;
using namespace frisam;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Applies a JSON config file as defaults: any long option present in the
// file but absent from the command line is appended before parsing, so
// explicit flags always win.
std::vector<std::string> merge_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  fs::path config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (config.empty()) return args;

  std::ifstream f(config);
  if (!f) throw io_error("cannot open config file " + config.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw config_error("cannot parse config file " + config.string() + ": " +
                       e.what());
  }
  if (!j.is_object())
    throw config_error("config file must hold a JSON object");

  auto given = [&](const std::string& name) {
    const std::string flag = "--" + name;
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "config" || given(key)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else if (value.is_string()) {
      args.push_back("--" + key + "=" + value.get<std::string>());
    } else {
      args.push_back("--" + key + "=" + value.dump());
    }
  }
  return args;
}

struct GridFlags {
  std::size_t n_x = 128, n_z = 256;
  double k_min = 7.3, k_max = 8.4, pitch = 2.0;
  std::size_t focal = 0;
  bool focal_given = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--nx", n_x, "number of A-scans");
    cmd->add_option("--nz", n_z, "spectral samples per A-scan");
    cmd->add_option("--k-min", k_min, "lowest wavenumber, rad/um");
    cmd->add_option("--k-max", k_max, "highest wavenumber, rad/um");
    cmd->add_option("--pitch", pitch, "lateral pitch, um");
    cmd->add_option("--focal-index", focal, "focal plane axial pixel")
        ->each([this](const std::string&) { focal_given = true; });
  }
  GridSpec build() const {
    return make_grid(n_x, n_z, k_min, k_max, pitch,
                     focal_given ? focal : n_z / 2);
  }
};

struct NufftFlags {
  int width = 6;
  double oversample = 2.0;
  void attach(CLI::App* cmd) {
    cmd->add_option("--nufft-width", width, "gridding kernel taps");
    cmd->add_option("--nufft-oversample", oversample, "oversampling factor");
  }
};

struct MethodFlags {
  double lambda = 0.5, tol = 1e-3, step_scale = 1.0;
  int max_iters = 500;
  bool no_add_residual = false;
  double w_min = 0.5, w_max = 1.0;
  int defr_iters = 500;
  double defr_floor = 1e-4;
  bool no_residual = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "regularization constant");
    cmd->add_option("--tol", tol, "relative-residual stop threshold");
    cmd->add_option("--max-iters", max_iters, "iteration budget");
    cmd->add_option("--step-scale", step_scale, "step multiplier in (0,1]");
    cmd->add_flag("--no-add-residual", no_add_residual,
                  "skip the final residual re-addition");
    cmd->add_option("--w-min", w_min, "depth weight at zero delay");
    cmd->add_option("--w-max", w_max, "depth weight at max depth");
    cmd->add_option("--defr-iters", defr_iters, "greedy iteration budget");
    cmd->add_option("--defr-floor", defr_floor,
                    "greedy relative residual-energy floor");
    cmd->add_flag("--no-residual", no_residual,
                  "exclude the greedy residual image");
  }
};

DispersionModel dispersion_from(const GridSpec& g, double k0, double a2,
                                double a3) {
  return dispersion_phase(g, k0, {a2, a3});
}

SusceptibilityImage run_method(const std::string& method,
                               const RealSpectra& sd, const DispersionModel& d,
                               const NufftPlan* plan, const MethodFlags& mf,
                               const fs::path& trace_csv, bool verbose) {
  if (method == "ifft") return ifft_reconstruct(sd, d);
  if (method == "isam") return isam_reconstruct(sd, *plan, d);
  if (method == "defr")
    return defr_image(defr_solve(sd, d, mf.defr_iters, mf.defr_floor), d,
                      !mf.no_residual);
  if (method == "defr-isam")
    return defr_isam(sd, d, *plan, mf.defr_iters, mf.defr_floor);
  if (method == "mbir" || method == "mbir+") {
    MbirConfig cfg;
    cfg.lambda = mf.lambda;
    cfg.tol = mf.tol;
    cfg.max_iters = mf.max_iters;
    cfg.step_scale = mf.step_scale;
    cfg.add_residual = !mf.no_add_residual;
    cfg.weights = (method == "mbir+")
                      ? depth_weights(sd.grid, mf.w_min, mf.w_max)
                      : uniform_weights(sd.grid);
    const MbirResult res = mbir_solve(sd, *plan, d, cfg);
    if (verbose)
      std::fprintf(stderr, "%s: %d iterations, %s, model norm %.6g\n",
                   method.c_str(), res.iterations,
                   res.converged ? "converged" : "iteration budget hit",
                   res.model_norm);
    if (!trace_csv.empty()) {
      std::string csv = "iteration,objective,fidelity,l1,rel_residual,seconds\n";
      for (const auto& e : res.trace)
        csv += std::to_string(e.iteration) + "," + fmt(e.objective) + "," +
               fmt(e.fidelity) + "," + fmt(e.l1) + "," + fmt(e.rel_residual) +
               "," + fmt(e.seconds) + "\n";
      atomic_write_text(trace_csv, csv);
    }
    return res.image;
  }
  throw config_error("unknown method '" + method + "'");
}

// Reads a scatterer list: JSON array of [x_um, z_um, re, im] rows.
std::vector<Scatterer> read_scatterers(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open scatterer file " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw config_error("cannot parse scatterer file: " + std::string(e.what()));
  }
  if (!j.is_array()) throw config_error("scatterer file must hold an array");
  std::vector<Scatterer> out;
  for (const auto& row : j) {
    if (!row.is_array() || row.size() < 3)
      throw config_error("scatterer rows are [x_um, z_um, re, im]");
    Scatterer s;
    s.x_um = row[0].get<double>();
    s.z_um = row[1].get<double>();
    s.amplitude = cplx(row[2].get<double>(),
                       row.size() > 3 ? row[3].get<double>() : 0.0);
    out.push_back(s);
  }
  return out;
}

int cmd_synth(CLI::App& app, const GridFlags& gf, const NufftFlags& nf,
              std::uint64_t seed, std::size_t count, double amp_min,
              double amp_max, double min_sep, long z_lo, long z_hi,
              double k0, double a2_known, double a3_known, double a2,
              double a3, long shift, double noise, const std::string& out,
              const std::string& scatterer_file, bool verbose) {
  (void)app;
  const GridSpec g = gf.build();
  const NufftPlan plan = plan_nufft(g, nf.width, nf.oversample);
  if (verbose)
    std::fprintf(stderr, "operator norm estimate: %.9g\n",
                 plan.operator_norm());
  const DispersionModel dk = dispersion_from(g, k0, a2_known, a3_known);
  const DispersionModel de = dispersion_from(g, k0, a2, a3);

  PhantomSpec spec;
  spec.grid = g;
  if (!scatterer_file.empty()) {
    spec.scatterers = read_scatterers(scatterer_file);
  } else {
    ProceduralPhantom p;
    p.count = count;
    p.amp_min = amp_min;
    p.amp_max = amp_max;
    p.min_separation_px = min_sep;
    p.seed = seed;
    p.z_lo = std::size_t(z_lo < 0 ? long(g.n_z / 2) + 8 : z_lo);
    p.z_hi = std::size_t(z_hi < 0 ? long(g.n_z) - 8 : z_hi);
    spec.procedural = p;
  }

  const SusceptibilityImage eta = phantom_image(spec);
  const RealSpectra half = simulate_measurement(eta, plan, dk, noise, seed);
  const FullRangeSynthesis syn =
      synthesize_fullrange(half, dk, de, shift, plan);

  const DispersionModel d_out =
      dispersion_phase(syn.out_grid, de.k_0, de.coeffs);
  save_image(out + "_gt", syn.ground_truth, d_out);
  save_real_spectra(out + "_sd", syn.s_d, d_out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dispersion-encoded full-range ISAM reconstruction toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // --config / --verbose may follow the subcommand
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file; command-line flags take precedence");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "diagnostic output on stderr");

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth", "generate a pseudo-full-range phantom pair (ground truth, s_d)");
  GridFlags synth_grid;
  synth_grid.attach(synth);
  NufftFlags synth_nufft;
  synth_nufft.attach(synth);
  std::uint64_t seed = 0;
  synth->add_option("--seed", seed, "phantom RNG seed")->required();
  std::size_t count = 24;
  double amp_min = 0.3, amp_max = 1.0, min_sep = 3.0;
  long z_lo = -1, z_hi = -1;
  synth->add_option("--count", count, "number of scatterers");
  synth->add_option("--amp-min", amp_min, "scatterer magnitude lower bound");
  synth->add_option("--amp-max", amp_max, "scatterer magnitude upper bound");
  synth->add_option("--min-sep", min_sep, "minimum pixel separation");
  synth->add_option("--z-lo", z_lo, "lowest axial pixel for scatterers");
  synth->add_option("--z-hi", z_hi, "highest axial pixel for scatterers");
  double k0 = 7.854, a2_known = 15.0, a3_known = 0.0, a2 = 70.0, a3 = -8.0;
  synth->add_option("--k0", k0, "center wavenumber, rad/um");
  synth->add_option("--a2-known", a2_known, "acquisition dispersion a2");
  synth->add_option("--a3-known", a3_known, "acquisition dispersion a3");
  synth->add_option("--a2", a2, "encoding dispersion a2");
  synth->add_option("--a3", a3, "encoding dispersion a3");
  long shift = 0;
  synth->add_option("--shift", shift, "virtual zero-delay shift, pixels");
  double noise = 0.0;
  synth->add_option("--noise-sigma", noise,
                    "relative measurement noise std dev");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output stem prefix")->required();
  std::string synth_scatterers;
  synth->add_option("--scatterers", synth_scatterers,
                    "JSON file of [x_um, z_um, re, im] rows (overrides the "
                    "procedural phantom)");

  // ---- reconstruct ----------------------------------------------------
  auto* rec = app.add_subcommand("reconstruct",
                                 "reconstruct an image from s_d");
  std::string rec_in, rec_out, rec_method = "mbir+", rec_png, rec_trace;
  rec->add_option("--input", rec_in, "s_d file stem")->required();
  rec->add_option("--output", rec_out, "image output stem")->required();
  rec->add_option("--method", rec_method,
                  "ifft | isam | defr | defr-isam | mbir | mbir+");
  rec->add_option("--png", rec_png, "also export a 16-bit PNG");
  rec->add_option("--trace", rec_trace, "write the solver trace CSV here");
  NufftFlags rec_nufft;
  rec_nufft.attach(rec);
  MethodFlags rec_mf;
  rec_mf.attach(rec);
  double rec_k0 = 7.854, rec_a2 = 0.0, rec_a3 = 0.0;
  bool rec_disp_given = false;
  rec->add_option("--k0", rec_k0, "center wavenumber for dispersion");
  rec->add_option("--a2", rec_a2, "dispersion a2 (overrides the sidecar)")
      ->each([&](const std::string&) { rec_disp_given = true; });
  rec->add_option("--a3", rec_a3, "dispersion a3 (overrides the sidecar)")
      ->each([&](const std::string&) { rec_disp_given = true; });
  bool rec_autofocus = false;
  double af_a2_min = 0.0, af_a2_max = 150.0, af_a3_min = -20.0,
         af_a3_max = 20.0;
  std::size_t af_grid = 21, af_iters = 200;
  rec->add_flag("--autofocus", rec_autofocus,
                "estimate dispersion before reconstructing");
  rec->add_option("--a2-min", af_a2_min, "autofocus a2 search floor");
  rec->add_option("--a2-max", af_a2_max, "autofocus a2 search ceiling");
  rec->add_option("--a3-min", af_a3_min, "autofocus a3 search floor");
  rec->add_option("--a3-max", af_a3_max, "autofocus a3 search ceiling");
  rec->add_option("--af-grid", af_grid, "autofocus coarse grid points");
  rec->add_option("--af-iters", af_iters, "autofocus refinement budget");
  double rec_floor = -60.0, rec_ceil = 0.0;
  rec->add_option("--floor-db", rec_floor, "PNG display floor, dB");
  rec->add_option("--ceil-db", rec_ceil, "PNG display ceiling, dB");

  // ---- autofocus ------------------------------------------------------
  auto* af = app.add_subcommand("autofocus",
                                "estimate dispersion coefficients from s_d");
  std::string af_in, af_out;
  af->add_option("--input", af_in, "s_d file stem")->required();
  af->add_option("--output", af_out, "dispersion JSON output")->required();
  double afc_k0 = 7.854;
  double afc_a2_min = 0.0, afc_a2_max = 150.0, afc_a3_min = -20.0,
         afc_a3_max = 20.0;
  std::size_t afc_grid = 21, afc_iters = 200;
  af->add_option("--k0", afc_k0, "center wavenumber");
  af->add_option("--a2-min", afc_a2_min, "a2 search floor");
  af->add_option("--a2-max", afc_a2_max, "a2 search ceiling");
  af->add_option("--a3-min", afc_a3_min, "a3 search floor");
  af->add_option("--a3-max", afc_a3_max, "a3 search ceiling");
  af->add_option("--grid-points", afc_grid, "coarse grid points per axis");
  af->add_option("--refine-iters", afc_iters, "simplex iteration budget");

  // ---- compare --------------------------------------------------------
  auto* cmp = app.add_subcommand("compare",
                                 "evaluate an image against a reference");
  std::string cmp_test, cmp_ref, cmp_csv, cmp_label = "method", cmp_png;
  cmp->add_option("--test", cmp_test, "image stem under test")->required();
  cmp->add_option("--ref", cmp_ref, "reference image stem")->required();
  cmp->add_option("--csv", cmp_csv, "write the report row here")->required();
  cmp->add_option("--label", cmp_label, "method label for the row");
  cmp->add_option("--png-prefix", cmp_png, "export scaled PNG pair");
  double cmp_floor = -60.0, cmp_ceil = 0.0;
  cmp->add_option("--floor-db", cmp_floor, "display floor, dB");
  cmp->add_option("--ceil-db", cmp_ceil, "display ceiling, dB");

  // ---- bench ----------------------------------------------------------
  auto* bench = app.add_subcommand(
      "bench", "run all six methods on one dataset and tabulate metrics");
  std::string bench_sd, bench_gt, bench_csv, bench_png;
  bench->add_option("--input", bench_sd, "s_d file stem")->required();
  bench->add_option("--gt", bench_gt, "ground-truth image stem")->required();
  bench->add_option("--out", bench_csv, "comparison CSV path")->required();
  bench->add_option("--png-prefix", bench_png, "export PNGs with this prefix");
  NufftFlags bench_nufft;
  bench_nufft.attach(bench);
  MethodFlags bench_mf;
  bench_mf.attach(bench);
  double bench_floor = -60.0, bench_ceil = 0.0;
  bench->add_option("--floor-db", bench_floor, "display floor, dB");
  bench->add_option("--ceil-db", bench_ceil, "display ceiling, dB");

  std::vector<std::string> args;
  try {
    args = merge_config(argc, argv);
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    std::vector<const char*> cargs;
    cargs.push_back(argv[0]);
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(int(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return (app.exit(e) == 0) ? 0 : 2;
  }

  try {
    if (app.got_subcommand(synth)) {
      return cmd_synth(app, synth_grid, synth_nufft, seed, count, amp_min,
                       amp_max, min_sep, z_lo, z_hi, k0, a2_known, a3_known,
                       a2, a3, shift, noise, synth_out, synth_scatterers,
                       verbose);
    }

    if (app.got_subcommand(rec)) {
      if (rec_in == rec_out)
        throw config_error("input and output stems must differ");
      const LoadedReal in = load_real_spectra(rec_in);
      const GridSpec& g = in.spectra.grid;
      DispersionModel d = dispersion_phase(g, rec_k0, {0.0, 0.0});
      if (in.dispersion) d = *in.dispersion;
      if (rec_disp_given) d = dispersion_phase(g, rec_k0, {rec_a2, rec_a3});
      int status = 0;
      if (rec_autofocus) {
        AutofocusOptions opt;
        opt.a2_min = af_a2_min;
        opt.a2_max = af_a2_max;
        opt.a3_min = af_a3_min;
        opt.a3_max = af_a3_max;
        opt.grid_points = af_grid;
        opt.refine_iters = af_iters;
        const AutofocusResult res = autofocus(in.spectra, rec_k0, opt);
        d = res.model;
        if (!res.converged) status = 5;
        if (verbose)
          std::fprintf(stderr,
                       "autofocus: a2=%.6g a3=%.6g entropy=%.6g %s\n",
                       d.a(2), d.a(3), res.cost,
                       res.converged ? "(converged)" : "(NOT converged)");
      }
      std::optional<NufftPlan> plan;
      if (rec_method != "ifft" && rec_method != "defr") {
        plan.emplace(plan_nufft(g, rec_nufft.width, rec_nufft.oversample));
        if (verbose)
          std::fprintf(stderr, "operator norm estimate: %.9g\n",
                       plan->operator_norm());
      }
      const SusceptibilityImage img =
          run_method(rec_method, in.spectra, d, plan ? &*plan : nullptr,
                     rec_mf, rec_trace, verbose);
      save_image(rec_out, img, d);
      if (!rec_png.empty())
        save_png16(rec_png, log_scale_16bit(img, rec_floor, rec_ceil));
      return status;
    }

    if (app.got_subcommand(af)) {
      const LoadedReal in = load_real_spectra(af_in);
      AutofocusOptions opt;
      opt.a2_min = afc_a2_min;
      opt.a2_max = afc_a2_max;
      opt.a3_min = afc_a3_min;
      opt.a3_max = afc_a3_max;
      opt.grid_points = afc_grid;
      opt.refine_iters = afc_iters;
      const AutofocusResult res = autofocus(in.spectra, afc_k0, opt);
      save_dispersion(af_out, res.model);
      if (verbose || !res.converged)
        std::fprintf(stderr, "autofocus: a2=%.6g a3=%.6g entropy=%.6g %s\n",
                     res.model.a(2), res.model.a(3), res.cost,
                     res.converged ? "(converged)" : "(NOT converged)");
      return res.converged ? 0 : 5;
    }

    if (app.got_subcommand(cmp)) {
      const LoadedImage test = load_image(cmp_test);
      const LoadedImage ref = load_image(cmp_ref);
      const EvalReport rep =
          evaluate(cmp_label, test.image, ref.image, cmp_floor, cmp_ceil);
      std::string csv = "method,rmse,psnr,ssim,floor_db,ceil_db,scale_ref\n";
      csv += rep.method + "," + fmt(rep.rmse) + "," + fmt(rep.psnr_db) + "," +
             fmt(rep.ssim_val) + "," + fmt(rep.floor_db) + "," +
             fmt(rep.ceil_db) + "," + fmt(rep.scale_ref) + "\n";
      atomic_write_text(cmp_csv, csv);
      if (!cmp_png.empty()) {
        save_png16(cmp_png + "_test.png",
                   log_scale_16bit(test.image, cmp_floor, cmp_ceil,
                                   rep.scale_ref));
        save_png16(cmp_png + "_ref.png",
                   log_scale_16bit(ref.image, cmp_floor, cmp_ceil,
                                   rep.scale_ref));
      }
      return 0;
    }

    if (app.got_subcommand(bench)) {
      const LoadedReal in = load_real_spectra(bench_sd);
      const LoadedImage gt = load_image(bench_gt);
      const GridSpec& g = in.spectra.grid;
      DispersionModel d = in.dispersion
                              ? *in.dispersion
                              : dispersion_phase(g, 7.854, {0.0, 0.0});
      const NufftPlan plan =
          plan_nufft(g, bench_nufft.width, bench_nufft.oversample);
      if (verbose)
        std::fprintf(stderr, "operator norm estimate: %.9g\n",
                     plan.operator_norm());

      const std::vector<std::string> methods{"ifft",      "isam", "defr",
                                             "defr-isam", "mbir", "mbir+"};
      const std::vector<std::string> labels{"direct",    "ISAM", "DEFR",
                                            "DEFR+ISAM", "MBIR", "MBIR+"};
      std::string csv = "method,rmse,psnr,ssim\n";
      for (std::size_t i = 0; i < methods.size(); ++i) {
        const SusceptibilityImage img =
            run_method(methods[i], in.spectra, d, &plan, bench_mf, "",
                       verbose);
        const EvalReport rep =
            evaluate(labels[i], img, gt.image, bench_floor, bench_ceil);
        csv += rep.method + "," + fmt(rep.rmse) + "," + fmt(rep.psnr_db) +
               "," + fmt(rep.ssim_val) + "\n";
        if (!bench_png.empty())
          save_png16(bench_png + "_" + methods[i] + ".png",
                     log_scale_16bit(img, bench_floor, bench_ceil,
                                     rep.scale_ref));
      }
      if (!bench_png.empty()) {
        double ref_max = 0.0;
        for (const cplx& v : gt.image.data.flat())
          ref_max = std::max(ref_max, std::abs(v));
        save_png16(bench_png + "_gt.png",
                   log_scale_16bit(gt.image, bench_floor, bench_ceil,
                                   ref_max));
      }
      atomic_write_text(bench_csv, csv);
      return 0;
    }
  } catch (const nonfinite_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

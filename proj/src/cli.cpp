#include "p2s/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "p2s/baseline.hpp"
#include "p2s/denoise.hpp"
#include "p2s/io.hpp"
#include "p2s/metrics.hpp"
#include "p2s/phantom.hpp"

namespace p2s {

namespace {

namespace fs = std::filesystem;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::io_open:
    case ErrorCode::io_truncated:
    case ErrorCode::io_magic:
    case ErrorCode::io_unsupported:
    case ErrorCode::io_write:
      return 2;
    case ErrorCode::numeric_failure:
    case ErrorCode::non_finite:
      return 3;
    default:
      return 1;
  }
}

unsigned env_default_threads() {
  if (const char* env = std::getenv("P2S_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 4096)
      return static_cast<unsigned>(v);
  }
  return 1;
}

// --model accepts ols, ridge, or svd-rank-K (K a positive integer).
struct ModelChoice {
  bool baseline = false;
  std::size_t rank = 0;
  Regularization reg = Regularization::ols();
};

ModelChoice parse_model(const std::string& name, double lambda,
                        bool lambda_given) {
  ModelChoice choice;
  if (name == "ols") {
    if (lambda_given)
      throw Error(ErrorCode::bad_argument, "--lambda requires --model ridge");
    return choice;
  }
  if (name == "ridge") {
    if (!lambda_given)
      throw Error(ErrorCode::bad_argument, "--model ridge requires --lambda");
    choice.reg = Regularization::ridge(lambda);
    return choice;
  }
  const std::string prefix = "svd-rank-";
  if (name.rfind(prefix, 0) == 0) {
    if (lambda_given)
      throw Error(ErrorCode::bad_argument, "--lambda requires --model ridge");
    const std::string digits = name.substr(prefix.size());
    std::size_t used = 0;
    unsigned long rank = 0;
    try {
      rank = std::stoul(digits, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != digits.size() || digits.empty() || rank == 0)
      throw Error(ErrorCode::bad_argument,
                  "bad rank in '" + name + "' (expected svd-rank-K, K >= 1)");
    choice.baseline = true;
    choice.rank = rank;
    return choice;
  }
  throw Error(ErrorCode::bad_argument,
              "unknown model '" + name + "' (expected ols, ridge, or svd-rank-K)");
}

std::string snr_label(double snr) {
  std::ostringstream out;
  out << snr;
  return out.str();
}

void write_volume_atomic(const Volume4D& vol, const std::string& path) {
  atomic_write(path, [&](const std::string& tmp) { write_volume(vol, tmp); });
}

Volume4D mask_to_volume(const Mask3D& mask, const Spacing& spacing) {
  std::vector<double> data(mask.dims().voxels());
  for (std::size_t v = 0; v < data.size(); ++v)
    data[v] = mask.test(v) ? 1.0 : 0.0;
  return Volume4D({mask.dims().l, mask.dims().w, mask.dims().h, 1}, spacing,
                  std::move(data));
}

Mask3D load_mask(const std::string& path, const Dim3& expected) {
  const Volume4D vol = read_volume(path);
  if (vol.dims().spatial() != expected)
    throw Error(ErrorCode::bad_dimensions,
                path + ": mask dims do not match the input volume");
  return Mask3D::from_volume(vol);
}

// ---- simulate ----

struct SimulateArgs {
  std::string output_dir;
  std::string spec_path;
  std::string format = "nii";
  std::size_t volumes = 30;
  std::uint64_t seed = 42;
  bool seed_given = false;
  bool volumes_given = false;
  std::vector<double> snr;
  unsigned channels = 8;
  bool write_mask = false;
};

int cmd_simulate(const SimulateArgs& args) {
  PhantomSpec spec;
  if (!args.spec_path.empty()) {
    if (args.volumes_given)
      throw Error(ErrorCode::bad_argument,
                  "--volumes conflicts with --spec (the spec fixes the gradient table)");
    spec = load_phantom_spec(args.spec_path);
  } else {
    spec = default_phantom_spec(args.volumes, args.seed);
  }
  if (args.seed_given) spec.seed = args.seed;

  const std::string ext = "." + args.format;
  fs::create_directories(args.output_dir);
  const auto out = [&](const std::string& stem) {
    return (fs::path(args.output_dir) / (stem + ext)).string();
  };

  const Volume4D clean = clean_signal(spec);
  std::cerr << "simulate: " << spec.dims.l << "x" << spec.dims.w << "x"
            << spec.dims.h << ", " << spec.gradients.size() << " volumes, seed "
            << spec.seed << "\n";

  write_volume_atomic(clean, out("clean"));
  if (args.write_mask)
    write_volume_atomic(mask_to_volume(tissue_mask(spec), spec.spacing),
                        out("mask"));

  for (double snr : args.snr) {
    if (snr < 0.0)
      throw Error(ErrorCode::bad_argument, "--snr values must be >= 0");
    NoiseSpec noise;
    noise.channels = args.channels;
    if (snr > 0.0) {
      noise.snr_target = snr;
      noise.sigma = resolve_sigma(clean, spec, noise);
      noise.snr_target.reset();
    }
    std::cerr << "  snr " << snr_label(snr) << ": sigma " << noise.sigma
              << "\n";
    const Volume4D noisy = apply_noise(clean, noise, spec.seed);
    write_volume_atomic(noisy, out("noisy_snr" + snr_label(snr)));
  }

  atomic_write((fs::path(args.output_dir) / "phantom.json").string(),
               [&](const std::string& tmp) { save_phantom_spec(spec, tmp); });
  return 0;
}

// ---- denoise ----

struct DenoiseArgs {
  std::string input, output, mask_path, model = "ols";
  int radius = 0;
  double lambda = 0.0;
  bool lambda_given = false;
  unsigned threads = 1;
};

int cmd_denoise(const DenoiseArgs& args) {
  const ModelChoice model =
      parse_model(args.model, args.lambda, args.lambda_given);
  const Volume4D input = read_volume(args.input);

  std::optional<Mask3D> mask;
  if (!args.mask_path.empty())
    mask = load_mask(args.mask_path, input.dims().spatial());

  std::cerr << "denoise: " << input.dims().l << "x" << input.dims().w << "x"
            << input.dims().h << "x" << input.dims().n << ", radius "
            << args.radius << ", model " << args.model << ", threads "
            << args.threads << "\n";

  Volume4D result = [&] {
    if (model.baseline)
      return svd_rank_baseline(input, std::max(args.radius, 1), model.rank,
                               mask ? &*mask : nullptr);
    DenoiseConfig cfg;
    cfg.radius = args.radius;
    cfg.regularization = model.reg;
    cfg.mask = mask ? &*mask : nullptr;
    cfg.threads = args.threads;
    cfg.progress = [](std::size_t volume, double seconds) {
      std::cerr << "  volume " << volume << " fitted in " << seconds << " s\n";
    };
    return patch2self(input, cfg);
  }();

  write_volume_atomic(result, args.output);
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string ref, est, mask_path, report_path;
  std::string method = "p2s";
  std::string snr = "-";
  bool per_volume = false;
};

int cmd_evaluate(const EvaluateArgs& args) {
  const Volume4D ref = read_volume(args.ref);
  const Volume4D est = read_volume(args.est);
  std::optional<Mask3D> mask;
  if (!args.mask_path.empty())
    mask = load_mask(args.mask_path, ref.dims().spatial());

  const EvalReport report =
      evaluate(ref, est, mask ? &*mask : nullptr, args.per_volume);
  const std::string row = csv_record(args.snr, args.method, report);
  std::cout << csv_header() << "\n" << row << "\n";
  if (args.per_volume) {
    for (std::size_t t = 0; t < report.per_volume.size(); ++t) {
      const auto& score = report.per_volume[t];
      std::cout << "# volume " << t << ": rmse=" << score.rmse << " r2=";
      if (score.r2)
        std::cout << *score.r2;
      else
        std::cout << "n/a";
      std::cout << "\n";
    }
  }

  if (!args.report_path.empty()) {
    const bool add_header =
        !fs::exists(args.report_path) || fs::file_size(args.report_path) == 0;
    std::ofstream out(args.report_path, std::ios::app);
    if (!out)
      throw Error(ErrorCode::io_write, "cannot write: " + args.report_path);
    if (add_header) out << csv_header() << "\n";
    out << row << "\n";
    if (!out)
      throw Error(ErrorCode::io_write, "failed writing: " + args.report_path);
  }
  return 0;
}

// ---- sweep ----

struct SweepArgs {
  std::string output;
  std::vector<double> snr{10, 15, 20, 25, 30};
  std::vector<std::size_t> volumes{10, 30, 60};
  std::vector<int> radius{0, 1};
  std::string baseline;  // e.g. svd-rank-5; empty = p2s only
  std::uint64_t seed = 42;
  unsigned channels = 8;
  unsigned threads = 1;
};

std::string sanitize_note(std::string note) {
  for (char& c : note)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return note;
}

int cmd_sweep(const SweepArgs& args) {
  std::optional<ModelChoice> baseline;
  if (!args.baseline.empty()) {
    baseline = parse_model(args.baseline, 0.0, false);
    if (!baseline->baseline)
      throw Error(ErrorCode::bad_argument,
                  "--baseline expects an svd-rank-K model");
  }

  std::ofstream out(args.output);
  if (!out) throw Error(ErrorCode::io_write, "cannot write: " + args.output);
  out << "schema_version,snr,volumes,radius,method,rmse,r2,voxel_count,status,note"
      << std::endl;

  const auto emit = [&](double snr, std::size_t volumes, int radius,
                        const std::string& method, const EvalReport* report,
                        const std::string& note) {
    out << 1 << ',' << snr_label(snr) << ',' << volumes << ',' << radius << ','
        << method << ',';
    if (report != nullptr) {
      out.precision(10);
      out << report->rmse << ',' << report->r2 << ',' << report->voxel_count
          << ",ok,";
    } else {
      out << ",,,error," << sanitize_note(note);
    }
    out << std::endl;
  };

  for (std::size_t volumes : args.volumes) {
    PhantomSpec spec = default_phantom_spec(volumes, args.seed);
    const Volume4D clean = clean_signal(spec);
    const Mask3D mask = tissue_mask(spec);
    for (double snr : args.snr) {
      Volume4D noisy = Volume4D::zeros({1, 1, 1, 1});
      try {
        NoiseSpec noise;
        noise.channels = args.channels;
        if (snr > 0.0) {
          noise.snr_target = snr;
          noise.sigma = resolve_sigma(clean, spec, noise);
          noise.snr_target.reset();
        }
        noisy = apply_noise(clean, noise, spec.seed);
      } catch (const std::exception& e) {
        for (int radius : args.radius)
          emit(snr, volumes, radius, "p2s", nullptr, e.what());
        continue;
      }
      for (int radius : args.radius) {
        std::cerr << "sweep: snr " << snr_label(snr) << ", " << volumes
                  << " volumes, radius " << radius << "\n";
        try {
          DenoiseConfig cfg;
          cfg.radius = radius;
          cfg.mask = &mask;
          cfg.threads = args.threads;
          const Volume4D denoised = patch2self(noisy, cfg);
          const EvalReport report = evaluate(clean, denoised, &mask);
          emit(snr, volumes, radius, "p2s", &report, "");
        } catch (const std::exception& e) {
          emit(snr, volumes, radius, "p2s", nullptr, e.what());
        }
        if (baseline) {
          try {
            const Volume4D recon = svd_rank_baseline(
                noisy, std::max(radius, 1), baseline->rank, &mask);
            const EvalReport report = evaluate(clean, recon, &mask);
            emit(snr, volumes, radius, args.baseline, &report, "");
          } catch (const std::exception& e) {
            emit(snr, volumes, radius, args.baseline, nullptr, e.what());
          }
        }
      }
    }
  }
  if (!out) throw Error(ErrorCode::io_write, "failed writing: " + args.output);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Patch2Self denoiser for 4D diffusion MRI"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Generate a synthetic phantom dataset");
  simulate->add_option("--output-dir", sim.output_dir, "Directory for outputs")
      ->required();
  simulate->add_option("--spec", sim.spec_path,
                       "Phantom spec JSON (defaults to the stock phantom)");
  auto* vol_opt = simulate->add_option(
      "--volumes", sim.volumes, "Volume count for the stock phantom (>= 3)");
  auto* seed_opt = simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate
      ->add_option("--snr", sim.snr,
                   "Comma-separated SNR list; 0 means noise-free")
      ->delimiter(',');
  simulate->add_option("--channels", sim.channels, "Coil channel count")
      ->check(CLI::PositiveNumber);
  simulate
      ->add_option("--format", sim.format, "Output format: nii, nii.gz, or raw")
      ->check(CLI::IsMember({"nii", "nii.gz", "raw"}));
  simulate->add_flag("--write-mask", sim.write_mask, "Also write the tissue mask");

  DenoiseArgs den;
  CLI::App* denoise = app.add_subcommand("denoise", "Denoise a 4D volume");
  denoise->add_option("--input", den.input, "Input volume (.nii/.nii.gz/.raw)")
      ->required();
  denoise->add_option("--output", den.output, "Output volume path")->required();
  denoise->add_option("--radius", den.radius, "Patch radius (edge 2r+1)")
      ->check(CLI::NonNegativeNumber);
  denoise->add_option("--model", den.model,
                      "Regression model: ols, ridge, or svd-rank-K baseline");
  auto* lambda_opt = denoise->add_option(
      "--lambda", den.lambda, "Ridge penalty (requires --model ridge)");
  denoise->add_option("--mask", den.mask_path, "Mask volume (nonzero = include)");
  denoise->add_option(
      "--threads", den.threads,
      "Worker threads (default: P2S_THREADS or 1; results identical)");

  EvaluateArgs eva;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Compare a volume against ground truth");
  evaluate->add_option("--ref", eva.ref, "Reference (ground-truth) volume")
      ->required();
  evaluate->add_option("--est", eva.est, "Estimate (denoised/noisy) volume")
      ->required();
  evaluate->add_option("--mask", eva.mask_path, "Mask volume");
  evaluate->add_option("--method", eva.method, "Method label for the record");
  evaluate->add_option("--snr", eva.snr, "SNR label for the record");
  evaluate->add_option("--report", eva.report_path,
                       "CSV file to append the record to");
  evaluate->add_flag("--per-volume", eva.per_volume,
                     "Also print per-volume metrics");

  SweepArgs swp;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Grid of simulate/denoise/evaluate runs, CSV output");
  sweep->add_option("--output", swp.output, "CSV output path")->required();
  sweep->add_option("--snr", swp.snr, "SNR grid")->delimiter(',');
  sweep->add_option("--volumes", swp.volumes, "Volume-count grid")
      ->delimiter(',');
  sweep->add_option("--radius", swp.radius, "Patch-radius grid")->delimiter(',');
  sweep->add_option("--baseline", swp.baseline,
                    "Extra baseline model (svd-rank-K)");
  sweep->add_option("--seed", swp.seed, "RNG seed");
  sweep->add_option("--channels", swp.channels, "Coil channel count")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--threads", swp.threads, "Worker threads");

  den.threads = env_default_threads();
  swp.threads = env_default_threads();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  sim.volumes_given = vol_opt->count() > 0;
  sim.seed_given = seed_opt->count() > 0;
  den.lambda_given = lambda_opt->count() > 0;

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (denoise->parsed()) return cmd_denoise(den);
    if (evaluate->parsed()) return cmd_evaluate(eva);
    return cmd_sweep(swp);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace p2s

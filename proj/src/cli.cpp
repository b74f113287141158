#include "spiked_pca/cli.hpp"

#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "spiked_pca/errors.hpp"
#include "spiked_pca/experiment.hpp"
#include "spiked_pca/io.hpp"
#include "spiked_pca/metrics.hpp"
#include "spiked_pca/ppca.hpp"
#include "spiked_pca/synthetic.hpp"
#include "spiked_pca/theory.hpp"

namespace spiked {
namespace {

struct TheoryArgs {
  double alpha = 0.0;
  double snr = 0.0;
  double missing = 0.0;
  bool effective_sample = false;
};

struct GenerateArgs {
  Index n = 0;
  Index d = 0;
  std::vector<double> norms;
  double noise_variance = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string truth;
  bool non_orthogonal = false;
};

struct MaskArgs {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::string in;
  std::string out;
};

struct FitArgs {
  Index k = 1;
  std::string in;
  std::string out;
  int max_iterations = FitOptions{}.max_iterations;
  double tolerance = FitOptions{}.rel_tolerance;
  std::uint64_t seed = 0;
};

struct SnrArgs {
  std::string in;
  Index k = 1;
};

struct ExperimentArgs {
  std::string config;
  std::string out;
  bool compare = false;
  double min_m = 0.0;
  unsigned threads = 0;
};

MatrixFile csv_at(const std::string& path) {
  MatrixFile file;
  file.path = path;
  return file;
}

void run_theory(const TheoryArgs& args, std::ostream& out) {
  const double r2 = theory_r2_missing(args.alpha, args.snr, args.missing);
  out << "predicted_r2 " << format_real(r2) << '\n';
  out << "effective_snr " << format_real((1.0 - args.missing) * args.snr) << '\n';
  if (args.effective_sample) {
    out << "effective_sample_r2 "
        << format_real(theory_r2_effective_sample(args.alpha, args.snr, args.missing)) << '\n';
  }
  out << "critical_missing_rate " << format_real(critical_missing_rate(args.alpha, args.snr))
      << '\n';
  if (args.missing < 1.0) {
    out << "critical_alpha " << format_real(critical_alpha(args.snr, args.missing)) << '\n';
  } else {
    out << "critical_alpha unreachable\n";
  }
}

void run_generate(const GenerateArgs& args, std::ostream& out) {
  const GroundTruth truth =
      make_ground_truth(args.d, args.norms, args.noise_variance,
                        derive_cell_seed(args.seed, 0, 0, 0), !args.non_orthogonal);
  const Matrix data = sample_dataset(truth, args.n, derive_cell_seed(args.seed, 0, 0, 1));
  write_masked_csv(MaskedMatrix(data), csv_at(args.out));
  const std::string truth_path = args.truth.empty() ? args.out + ".truth.csv" : args.truth;
  write_ground_truth(truth, args.seed, truth_path);
  out << "wrote " << args.n << "x" << args.d << " matrix to " << args.out << '\n';
  out << "wrote ground truth to " << truth_path << '\n';
  for (Index i = 0; i < truth.rank(); ++i) {
    out << "snr_" << i + 1 << ' ' << format_real(truth.snr_per_component(i)) << '\n';
  }
}

void run_mask(const MaskArgs& args, std::ostream& out) {
  const MaskedMatrix input = read_masked_csv(csv_at(args.in));
  if (!input.fully_observed()) {
    throw DomainError("mask expects a complete matrix; '" + args.in + "' already has gaps");
  }
  const MaskedMatrix masked = apply_mcar_mask(input.values(), args.rate, args.seed);
  write_masked_csv(masked, csv_at(args.out));
  out << "observed_fraction " << format_real(observed_fraction(masked)) << '\n';
}

void run_fit(const FitArgs& args, std::ostream& out) {
  const MaskedMatrix input = read_masked_csv(csv_at(args.in));
  FitOptions options;
  options.k = args.k;
  options.max_iterations = args.max_iterations;
  options.rel_tolerance = args.tolerance;
  options.seed = args.seed;
  const PpcaModel model = fit_ppca(input, options);
  write_model(model, args.out);
  out << "noise_variance " << format_real(model.noise_variance) << '\n';
  out << "log_likelihood " << format_real(model.log_likelihood) << '\n';
  out << "iterations " << model.n_iterations << '\n';
  out << "converged " << (model.converged ? "true" : "false") << '\n';
  out << "skipped_rows " << model.skipped_rows << '\n';
}

void run_snr(const SnrArgs& args, std::ostream& out) {
  const MaskedMatrix input = read_masked_csv(csv_at(args.in));
  if (!input.fully_observed()) {
    throw DomainError("snr estimation needs a complete matrix");
  }
  const SnrEstimate estimate = estimate_snr(sample_spectrum(input.values()), args.k);
  out << "noise_variance_hat " << format_real(estimate.noise_variance_hat) << '\n';
  for (Index i = 0; i < estimate.k; ++i) {
    out << "snr_" << i + 1 << ' ' << format_real(estimate.snr_per_component(i)) << '\n';
  }
  for (Index i : estimate.floored_components) {
    out << "floored_component " << i + 1 << '\n';
  }
}

void run_experiment_command(const ExperimentArgs& args, std::ostream& out) {
  const ExperimentConfig config = load_experiment_config(args.config);
  const SweepResult result = run_experiment(config, args.threads);
  if (result.records.empty()) throw DomainError("every cell of the sweep failed");
  write_curve_csv(result.records, args.out);
  out << "records " << result.records.size() << '\n';
  out << "failed_cells " << result.failures.size() << '\n';

  if (!result.failures.empty()) {
    const std::string failures_path = args.out + ".failures.csv";
    std::ofstream failures(failures_path, std::ios::binary);
    if (!failures) throw IoError("cannot open '" + failures_path + "' for writing");
    failures << "repetition,cell,grid_value,numerical,message\n";
    for (const FailedCell& cell : result.failures) {
      failures << cell.repetition << ',' << cell.cell << ',' << format_real(cell.grid_value)
               << ',' << (cell.numerical ? 1 : 0) << ",\"" << cell.message << "\"\n";
      out << "failed_cell repetition=" << cell.repetition
          << " grid_value=" << format_real(cell.grid_value) << ' ' << cell.message << '\n';
    }
  }

  if (args.compare) {
    const HypothesisComparison cmp = compare_hypotheses(result.records, args.min_m);
    out << "rmse_snr_hypothesis=" << format_real(cmp.rmse_snr_hypothesis)
        << " rmse_sample_hypothesis=" << format_real(cmp.rmse_sample_hypothesis)
        << " points=" << cmp.n_points << '\n';
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic PCA with missing data: learning curves and simulations",
               "spiked-pca"};
  app.require_subcommand(1);

  TheoryArgs theory;
  auto* theory_cmd = app.add_subcommand("theory", "Predicted R^2 and critical thresholds");
  theory_cmd->add_option("--alpha", theory.alpha, "Samples per dimension N/D")->required();
  theory_cmd->add_option("--snr", theory.snr, "Signal-to-noise ratio")->required();
  theory_cmd->add_option("--missing", theory.missing, "Missing rate in [0, 1]");
  theory_cmd->add_flag("--effective-sample", theory.effective_sample,
                       "Also print the reduced-sample-size prediction");

  GenerateArgs generate;
  auto* generate_cmd = app.add_subcommand("generate", "Sample a spiked dataset");
  generate_cmd->add_option("--n", generate.n, "Number of samples")->required();
  generate_cmd->add_option("--d", generate.d, "Dimension")->required();
  generate_cmd->add_option("--norms", generate.norms, "Direction norms, comma separated")
      ->required()
      ->delimiter(',');
  generate_cmd->add_option("--noise-var", generate.noise_variance, "Noise variance")
      ->required();
  generate_cmd->add_option("--seed", generate.seed, "Random seed");
  generate_cmd->add_option("--out", generate.out, "Output CSV")->required();
  generate_cmd->add_option("--truth", generate.truth,
                           "Ground-truth sidecar path (default <out>.truth.csv)");
  generate_cmd->add_flag("--non-orthogonal", generate.non_orthogonal,
                         "Keep random directions without orthogonalizing");

  MaskArgs mask;
  auto* mask_cmd = app.add_subcommand("mask", "Apply MCAR missingness to a complete CSV");
  mask_cmd->add_option("--rate", mask.rate, "Missing rate in [0, 1]")->required();
  mask_cmd->add_option("--seed", mask.seed, "Random seed");
  mask_cmd->add_option("--in", mask.in, "Input CSV")->required();
  mask_cmd->add_option("--out", mask.out, "Output CSV")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit probabilistic PCA to a CSV with gaps");
  fit_cmd->add_option("--k", fit.k, "Number of components")->required();
  fit_cmd->add_option("--in", fit.in, "Input CSV")->required();
  fit_cmd->add_option("--max-iter", fit.max_iterations, "Maximum EM iterations");
  fit_cmd->add_option("--tol", fit.tolerance, "Relative log-likelihood tolerance");
  fit_cmd->add_option("--seed", fit.seed, "Initialization seed");
  fit_cmd->add_option("--out", fit.out, "Model output (JSON)")->required();

  SnrArgs snr;
  auto* snr_cmd = app.add_subcommand("snr", "Estimate SNR from the sample-covariance spectrum");
  snr_cmd->add_option("--in", snr.in, "Complete input CSV")->required();
  snr_cmd->add_option("--k", snr.k, "Number of signal directions")->required();

  ExperimentArgs experiment;
  auto* experiment_cmd = app.add_subcommand("experiment", "Run a sweep from a config file");
  experiment_cmd->add_option("--config", experiment.config, "Config file")->required();
  experiment_cmd->add_option("--out", experiment.out, "Curve CSV output")->required();
  experiment_cmd->add_flag("--compare-hypotheses", experiment.compare,
                           "Print RMSE against both learning-curve hypotheses");
  experiment_cmd->add_option("--min-m", experiment.min_m,
                             "Smallest missing rate included in the comparison");
  experiment_cmd->add_option("--threads", experiment.threads,
                             "Worker threads (0 = default, capped by SPIKED_PCA_THREADS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*theory_cmd) run_theory(theory, out);
    if (*generate_cmd) run_generate(generate, out);
    if (*mask_cmd) run_mask(mask, out);
    if (*fit_cmd) run_fit(fit, out);
    if (*snr_cmd) run_snr(snr, out);
    if (*experiment_cmd) run_experiment_command(experiment, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const DegenerateColumnError& e) {
    err << "degenerate input: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace spiked

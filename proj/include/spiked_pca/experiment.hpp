#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spiked_pca/masked_matrix.hpp"
#include "spiked_pca/ppca.hpp"

namespace spiked {

enum class SweepKind { missing_rate, snr_via_added_noise };

struct ExperimentConfig {
  SweepKind sweep_kind = SweepKind::missing_rate;
  // Missing rates, or added-noise variances for the SNR sweep. Sorted ascending.
  std::vector<double> grid;
  Index n = 0;
  Index d = 0;
  std::vector<double> norms;
  double noise_variance = 0.0;
  double fixed_missing_rate = 0.0;  // SNR sweep only
  int repetitions = 1;
  std::uint64_t base_seed = 0;
  bool orthogonal = true;
  // fit.k is taken from norms.size(); fit.seed is replaced per cell.
  FitOptions fit;
};

/// One aggregated row of a learning curve.
struct CurveRecord {
  double sweep_value = 0.0;  // missing rate, or resulting SNR for the SNR sweep
  int component = 1;         // 1-based
  double r2_mean = 0.0;
  double r2_std = 0.0;       // sample standard deviation over repetitions
  int n_reps = 0;            // repetitions that produced a fit
  double theory_r2 = 0.0;      // S -> (1 - m) S
  double theory_alt_r2 = 0.0;  // alpha -> (1 - m) alpha
};

struct FailedCell {
  int repetition = 0;
  Index cell = 0;
  double grid_value = 0.0;
  bool numerical = false;  // EM numerical failure, as opposed to degenerate input
  std::string message;
};

struct SweepResult {
  std::vector<CurveRecord> records;  // grid order, then component order
  std::vector<FailedCell> failures;  // lattice order
};

/// Deterministic 64-bit mix of the four integers (chained splitmix64).
/// For a fixed base seed, distinct streams of the same cell never collide.
std::uint64_t derive_cell_seed(std::uint64_t base_seed, std::uint64_t repetition,
                               std::uint64_t cell_index, std::uint64_t stream);

/// Worker count: `requested` (0 = hardware concurrency), capped by the
/// SPIKED_PCA_THREADS environment variable when it is set to a positive value.
unsigned resolve_thread_count(unsigned requested = 0);

/// Fresh dataset per repetition, fresh mask per (repetition, missing rate).
SweepResult run_missing_rate_sweep(const ExperimentConfig& config, unsigned threads = 0);

/// One low-noise dataset and one mask per repetition; fresh isotropic noise per
/// grid value. The SNR of each cell is estimated from the spectrum of the
/// complete low-noise data.
SweepResult run_snr_sweep(const ExperimentConfig& config, unsigned threads = 0);

SweepResult run_experiment(const ExperimentConfig& config, unsigned threads = 0);

struct HypothesisComparison {
  double rmse_snr_hypothesis = 0.0;
  double rmse_sample_hypothesis = 0.0;
  std::size_t n_points = 0;
};

/// RMSE of component-1 r2_mean against both theory columns, restricted to
/// sweep_value >= min_missing_rate.
HypothesisComparison compare_hypotheses(const std::vector<CurveRecord>& records,
                                        double min_missing_rate);

void validate_config(const ExperimentConfig& config);

}  // namespace spiked

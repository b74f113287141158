#include "spiked_pca/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <string>
#include <thread>

#include "spiked_pca/errors.hpp"
#include "spiked_pca/metrics.hpp"
#include "spiked_pca/random.hpp"
#include "spiked_pca/synthetic.hpp"
#include "spiked_pca/theory.hpp"

namespace spiked {
namespace {

enum Stream : std::uint64_t {
  kTruthStream = 0,
  kDataStream = 1,
  kMaskStream = 2,
  kFitStream = 3,
  kNoiseStream = 4,
};

struct CellOutcome {
  bool ok = false;
  bool numerical = false;
  std::string message;
  Vector r2;
  Vector snr;  // SNR sweep only
};

// Runs task(i) for i in [0, count) on up to `threads` workers. Each task owns
// its output slot, so the result does not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& task) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          task(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (error) std::rethrow_exception(error);
}

CellOutcome fit_cell(const MaskedMatrix& x, const GroundTruth& truth, FitOptions options) {
  CellOutcome out;
  try {
    const PpcaModel model = fit_ppca(x, options);
    const Directions dirs = extract_directions(model);
    if (dirs.rank_deficient()) {
      out.numerical = true;
      out.message = "fitted loadings have rank " + std::to_string(dirs.rank) + " < k";
      return out;
    }
    out.r2 = component_r2(dirs.basis, truth);
    out.ok = true;
  } catch (const NumericalError& e) {
    out.numerical = true;
    out.message = e.what();
  } catch (const DomainError& e) {
    out.message = e.what();
  }
  return out;
}

double safe_theory(double alpha, double snr, double m, bool effective_sample) {
  if (!(snr > 0.0)) return 0.0;
  return effective_sample ? theory_r2_effective_sample(alpha, snr, m)
                          : theory_r2_missing(alpha, snr, m);
}

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

// Folds the (repetition x grid) lattice in fixed order. For the SNR sweep the
// sweep value of each record is the mean estimated SNR of that component.
SweepResult aggregate(const ExperimentConfig& config, const std::vector<CellOutcome>& cells,
                      const Vector& true_snr) {
  const std::size_t grid_size = config.grid.size();
  const auto k = static_cast<Index>(config.norms.size());
  const double alpha = static_cast<double>(config.n) / static_cast<double>(config.d);
  const bool snr_sweep = config.sweep_kind == SweepKind::snr_via_added_noise;

  SweepResult result;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    for (std::size_t j = 0; j < grid_size; ++j) {
      const CellOutcome& cell = cells[static_cast<std::size_t>(rep) * grid_size + j];
      if (!cell.ok) {
        result.failures.push_back(
            FailedCell{rep, static_cast<Index>(j), config.grid[j], cell.numerical, cell.message});
      }
    }
  }

  for (std::size_t j = 0; j < grid_size; ++j) {
    for (Index i = 0; i < k; ++i) {
      std::vector<double> r2;
      std::vector<double> snr;
      for (int rep = 0; rep < config.repetitions; ++rep) {
        const CellOutcome& cell = cells[static_cast<std::size_t>(rep) * grid_size + j];
        if (!cell.ok) continue;
        r2.push_back(cell.r2(i));
        if (snr_sweep) snr.push_back(cell.snr(i));
      }
      if (r2.empty()) continue;

      const Moments stats = moments(r2);
      CurveRecord record;
      record.component = static_cast<int>(i) + 1;
      record.r2_mean = stats.mean;
      record.r2_std = stats.std;
      record.n_reps = static_cast<int>(r2.size());
      if (snr_sweep) {
        record.sweep_value = moments(snr).mean;
        record.theory_r2 =
            safe_theory(alpha, record.sweep_value, config.fixed_missing_rate, false);
        record.theory_alt_r2 =
            safe_theory(alpha, record.sweep_value, config.fixed_missing_rate, true);
      } else {
        record.sweep_value = config.grid[j];
        record.theory_r2 = safe_theory(alpha, true_snr(i), config.grid[j], false);
        record.theory_alt_r2 = safe_theory(alpha, true_snr(i), config.grid[j], true);
      }
      result.records.push_back(record);
    }
  }
  return result;
}

FitOptions cell_fit_options(const ExperimentConfig& config, int rep, std::size_t cell) {
  FitOptions options = config.fit;
  options.k = static_cast<Index>(config.norms.size());
  options.seed = derive_cell_seed(config.base_seed, static_cast<std::uint64_t>(rep), cell,
                                  kFitStream);
  return options;
}

GroundTruth experiment_truth(const ExperimentConfig& config) {
  return make_ground_truth(config.d, config.norms, config.noise_variance,
                           derive_cell_seed(config.base_seed, 0, 0, kTruthStream),
                           config.orthogonal);
}

}  // namespace

std::uint64_t derive_cell_seed(std::uint64_t base_seed, std::uint64_t repetition,
                               std::uint64_t cell_index, std::uint64_t stream) {
  std::uint64_t h = mix64(base_seed);
  h = mix64(h ^ repetition);
  h = mix64(h ^ cell_index);
  return mix64(h ^ stream);
}

unsigned resolve_thread_count(unsigned requested) {
  unsigned threads = requested > 0 ? requested : std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  if (const char* env = std::getenv("SPIKED_PCA_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) threads = std::min(threads, static_cast<unsigned>(cap));
  }
  return threads;
}

void validate_config(const ExperimentConfig& config) {
  if (config.grid.empty()) throw DomainError("experiment grid is empty");
  if (!std::is_sorted(config.grid.begin(), config.grid.end())) {
    throw DomainError("experiment grid must be sorted ascending");
  }
  if (config.repetitions < 1) throw DomainError("repetitions must be at least 1");
  if (config.n < 2 || config.d < 2) throw DomainError("n and d must be at least 2");
  if (config.norms.empty()) throw DomainError("at least one direction norm is required");
  if (static_cast<Index>(config.norms.size()) >= config.d) {
    throw DomainError("number of directions must be smaller than d");
  }
  if (!(config.noise_variance > 0.0)) throw DomainError("noise_variance must be positive");
  if (!(config.fixed_missing_rate >= 0.0 && config.fixed_missing_rate <= 1.0)) {
    throw DomainError("fixed_missing_rate must lie in [0, 1]");
  }
  for (double value : config.grid) {
    if (!std::isfinite(value)) throw DomainError("grid values must be finite");
    if (config.sweep_kind == SweepKind::missing_rate && !(value >= 0.0 && value <= 1.0)) {
      throw DomainError("missing-rate grid values must lie in [0, 1]");
    }
    if (config.sweep_kind == SweepKind::snr_via_added_noise && value < 0.0) {
      throw DomainError("added-noise variances must be nonnegative");
    }
  }
}

SweepResult run_missing_rate_sweep(const ExperimentConfig& config, unsigned threads) {
  if (config.sweep_kind != SweepKind::missing_rate) {
    throw DomainError("run_missing_rate_sweep needs sweep_kind = missing_rate");
  }
  validate_config(config);
  threads = resolve_thread_count(threads);
  const GroundTruth truth = experiment_truth(config);

  const auto reps = static_cast<std::size_t>(config.repetitions);
  std::vector<Matrix> datasets(reps);
  parallel_for(reps, threads, [&](std::size_t rep) {
    datasets[rep] = sample_dataset(truth, config.n,
                                   derive_cell_seed(config.base_seed, rep, 0, kDataStream));
  });

  const std::size_t grid_size = config.grid.size();
  std::vector<CellOutcome> cells(reps * grid_size);
  parallel_for(cells.size(), threads, [&](std::size_t index) {
    const std::size_t rep = index / grid_size;
    const std::size_t j = index % grid_size;
    const MaskedMatrix masked =
        apply_mcar_mask(datasets[rep], config.grid[j],
                        derive_cell_seed(config.base_seed, rep, j, kMaskStream));
    cells[index] = fit_cell(masked, truth, cell_fit_options(config, static_cast<int>(rep), j));
  });
  return aggregate(config, cells, truth.snr_per_component);
}

SweepResult run_snr_sweep(const ExperimentConfig& config, unsigned threads) {
  if (config.sweep_kind != SweepKind::snr_via_added_noise) {
    throw DomainError("run_snr_sweep needs sweep_kind = snr_via_added_noise");
  }
  validate_config(config);
  threads = resolve_thread_count(threads);
  const GroundTruth truth = experiment_truth(config);
  const auto k = static_cast<Index>(config.norms.size());

  struct Repetition {
    MaskedMatrix masked{Matrix::Zero(1, 1)};
    Vector spectrum;
  };
  const auto reps = static_cast<std::size_t>(config.repetitions);
  std::vector<Repetition> prepared(reps);
  parallel_for(reps, threads, [&](std::size_t rep) {
    const Matrix clean = sample_dataset(
        truth, config.n, derive_cell_seed(config.base_seed, rep, 0, kDataStream));
    prepared[rep].spectrum = sample_spectrum(clean);
    prepared[rep].masked = apply_mcar_mask(
        clean, config.fixed_missing_rate,
        derive_cell_seed(config.base_seed, rep, 0, kMaskStream));
  });

  const std::size_t grid_size = config.grid.size();
  std::vector<CellOutcome> cells(reps * grid_size);
  parallel_for(cells.size(), threads, [&](std::size_t index) {
    const std::size_t rep = index / grid_size;
    const std::size_t j = index % grid_size;
    const MaskedMatrix noisy =
        add_isotropic_noise(prepared[rep].masked, config.grid[j],
                            derive_cell_seed(config.base_seed, rep, j, kNoiseStream));
    CellOutcome cell =
        fit_cell(noisy, truth, cell_fit_options(config, static_cast<int>(rep), j));
    if (cell.ok) cell.snr = snr_after_added_noise(prepared[rep].spectrum, k, config.grid[j]);
    cells[index] = std::move(cell);
  });
  return aggregate(config, cells, truth.snr_per_component);
}

SweepResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  return config.sweep_kind == SweepKind::missing_rate ? run_missing_rate_sweep(config, threads)
                                                      : run_snr_sweep(config, threads);
}

HypothesisComparison compare_hypotheses(const std::vector<CurveRecord>& records,
                                        double min_missing_rate) {
  if (!(min_missing_rate >= 0.0 && min_missing_rate < 1.0)) {
    throw DomainError("min_m must lie in [0, 1)");
  }
  HypothesisComparison out;
  double ss_snr = 0.0;
  double ss_sample = 0.0;
  for (const CurveRecord& record : records) {
    if (record.component != 1 || record.sweep_value < min_missing_rate) continue;
    ss_snr += (record.r2_mean - record.theory_r2) * (record.r2_mean - record.theory_r2);
    ss_sample +=
        (record.r2_mean - record.theory_alt_r2) * (record.r2_mean - record.theory_alt_r2);
    ++out.n_points;
  }
  if (out.n_points == 0) {
    throw DomainError("no component-1 records with sweep_value >= min_m");
  }
  out.rmse_snr_hypothesis = std::sqrt(ss_snr / static_cast<double>(out.n_points));
  out.rmse_sample_hypothesis = std::sqrt(ss_sample / static_cast<double>(out.n_points));
  return out;
}

}  // namespace spiked

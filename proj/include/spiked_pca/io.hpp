#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spiked_pca/experiment.hpp"
#include "spiked_pca/masked_matrix.hpp"
#include "spiked_pca/ppca.hpp"
#include "spiked_pca/synthetic.hpp"

namespace spiked {

/// Layout of a delimited matrix file. Empty cells are always missing; on read,
/// `missing_token` and NaN spellings are missing as well.
struct MatrixFile {
  std::string path;
  char delimiter = ',';
  std::string missing_token;
  bool header = false;
};

/// Formats a real with 6 significant digits (printf %.6g).
std::string format_real(double value);

MaskedMatrix read_masked_csv(const MatrixFile& file);
/// Parses from a stream; errors cite 1-based line and column numbers.
MaskedMatrix read_masked_csv(std::istream& in, const MatrixFile& format);

/// Missing entries are written as `missing_token` (empty by default).
void write_masked_csv(const MaskedMatrix& x, const MatrixFile& file);
void write_masked_csv(const MaskedMatrix& x, std::ostream& out, const MatrixFile& format);

/// Header `sweep_value,component,r2_mean,r2_std,n_reps,theory_r2,theory_alt_r2`,
/// rows sorted by (sweep_value, component). Throws DomainError when empty.
void write_curve_csv(const std::vector<CurveRecord>& records, const std::string& path);
void write_curve_csv(const std::vector<CurveRecord>& records, std::ostream& out);
std::vector<CurveRecord> read_curve_csv(const std::string& path);
std::vector<CurveRecord> read_curve_csv(std::istream& in);

/// Sidecar written next to generated data: a metadata line
/// `# noise_variance=<v>,seed=<s>,k=<k>` followed by D rows of k direction
/// coordinates.
struct GroundTruthFile {
  GroundTruth truth;
  std::uint64_t seed = 0;
};
void write_ground_truth(const GroundTruth& truth, std::uint64_t seed, const std::string& path);
GroundTruthFile read_ground_truth(const std::string& path);

/// Fitted model as a JSON object (mean, loadings, noise_variance, ...).
void write_model(const PpcaModel& model, const std::string& path);
PpcaModel read_model(const std::string& path);

/// Experiment config as `key = value` lines; `#` starts a comment.
/// `grid` accepts a comma list or `linspace(start, stop, count)`.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace spiked

// Acceptance gate: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--known-failures 1,3] [--report path]
// The exit status is nonzero when a criterion fails that is not listed in
// --known-failures. Verdict lines are printed either way.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spiked_pca/errors.hpp"
#include "spiked_pca/experiment.hpp"
#include "spiked_pca/io.hpp"
#include "spiked_pca/metrics.hpp"
#include "spiked_pca/ppca.hpp"
#include "spiked_pca/random.hpp"
#include "spiked_pca/synthetic.hpp"
#include "spiked_pca/theory.hpp"

using namespace spiked;

namespace {

struct Verdict {
  int id;
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, double a) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, pattern, a);
  return buffer;
}

// Learning-curve lattice shared by criteria 1, 3 and 7.
ExperimentConfig phase_transition_config() {
  ExperimentConfig config;
  config.sweep_kind = SweepKind::missing_rate;
  for (int i = 0; i < 20; ++i) config.grid.push_back(i / 20.0);
  config.n = 400;
  config.d = 600;
  config.norms = {1.0, 0.5};
  config.noise_variance = 0.05;
  config.repetitions = 5;
  config.base_seed = 2024;
  return config;
}

Verdict criterion_phase_transition(const SweepResult& sweep, const ExperimentConfig& config) {
  const double alpha = static_cast<double>(config.n) / static_cast<double>(config.d);
  int checked_above = 0;
  int checked_below = 0;
  int bad = 0;
  double worst = 0.0;
  std::string worst_cell;
  for (const CurveRecord& r : sweep.records) {
    const double norm = config.norms[static_cast<std::size_t>(r.component - 1)];
    const double snr = (1.0 - r.sweep_value) * norm * norm / config.noise_variance;
    const double load = alpha * snr * snr;
    if (load >= 2.0) {
      ++checked_above;
      const double gap = std::abs(r.r2_mean - r.theory_r2);
      if (gap > 0.08) ++bad;
      if (gap > worst) {
        worst = gap;
        std::ostringstream cell;
        cell << "m=" << r.sweep_value << " component " << r.component << " r2_mean="
             << format_real(r.r2_mean) << " theory=" << format_real(r.theory_r2);
        worst_cell = cell.str();
      }
    } else if (load <= 0.5) {
      ++checked_below;
      if (r.r2_mean > 0.05) ++bad;
    }
  }
  const std::size_t expected = config.grid.size() * config.norms.size();
  const bool complete = sweep.failures.empty() && sweep.records.size() == expected;
  std::ostringstream detail;
  detail << checked_above << " cells above threshold, " << checked_below
         << " below; " << bad << " out of tolerance; largest gap " << format_real(worst);
  if (!worst_cell.empty()) detail << " at " << worst_cell;
  if (!complete) detail << "; " << sweep.failures.size() << " failed cells";
  return {1, complete && bad == 0, detail.str()};
}

Verdict criterion_threshold_location() {
  const double base_noise = 1e-4;
  const int points = 40;
  std::vector<double> onsets;
  std::ostringstream detail;
  bool pass = true;
  for (double m : {0.0, 0.25, 0.5}) {
    ExperimentConfig config;
    config.sweep_kind = SweepKind::snr_via_added_noise;
    for (int i = 0; i < points; ++i) {
      const double snr = 0.3 * std::pow(5.0 / 0.3, static_cast<double>(i) / (points - 1));
      config.grid.push_back(1.0 / snr - base_noise);
    }
    std::sort(config.grid.begin(), config.grid.end());
    config.n = 800;
    config.d = 400;
    config.norms = {1.0};
    config.noise_variance = base_noise;
    config.fixed_missing_rate = m;
    config.repetitions = 5;
    config.base_seed = 7;

    std::vector<CurveRecord> records = run_snr_sweep(config).records;
    std::sort(records.begin(), records.end(),
              [](const CurveRecord& a, const CurveRecord& b) {
                return a.sweep_value < b.sweep_value;
              });
    double onset = NAN;
    for (const CurveRecord& r : records) {
      if (r.r2_mean > 0.1) {
        onset = r.sweep_value;
        break;
      }
    }
    const double alpha = static_cast<double>(config.n) / static_cast<double>(config.d);
    const double predicted = 1.0 / ((1.0 - m) * std::sqrt(alpha));
    const double ratio = onset / predicted;
    if (!(std::abs(ratio - 1.0) <= 0.3)) pass = false;
    if (!onsets.empty() && !(onset > onsets.back())) pass = false;
    onsets.push_back(onset);
    detail << "m=" << m << " onset " << format_real(onset) << " predicted "
           << format_real(predicted) << " (ratio " << format_real(ratio) << "); ";
  }
  detail << (pass ? "onsets increase with m" : "see values");
  return {2, pass, detail.str()};
}

Verdict criterion_hypotheses(const SweepResult& sweep) {
  const HypothesisComparison cmp = compare_hypotheses(sweep.records, 0.3);
  std::ostringstream detail;
  detail << "rmse against effective-SNR curve " << format_real(cmp.rmse_snr_hypothesis)
         << ", against reduced-sample curve " << format_real(cmp.rmse_sample_hypothesis)
         << " over " << cmp.n_points << " points";
  return {3, cmp.rmse_snr_hypothesis < cmp.rmse_sample_hypothesis, detail.str()};
}

Verdict criterion_spectral_oracle() {
  Rng rng(4242);
  double min_r2 = 1.0;
  double max_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 50 + static_cast<Index>(rng.uniform() * 151.0);
    const double alpha = 1.0 + 2.0 * rng.uniform();
    const Index n = static_cast<Index>(std::ceil(alpha * static_cast<double>(d)));
    const Index k = 1 + trial % 3;
    const double sigma2 = 0.05 + 0.2 * rng.uniform();
    // Weakest component has alpha S^2 between 4 and 16; the others are spread above it.
    const double s_min = std::sqrt((4.0 + 12.0 * rng.uniform()) * d / static_cast<double>(n));
    std::vector<double> norms;
    for (Index i = 0; i < k; ++i) {
      const double snr = s_min * (1.0 + 1.5 * static_cast<double>(k - 1 - i));
      norms.push_back(std::sqrt(snr * sigma2));
    }
    const std::uint64_t seed = derive_cell_seed(99, static_cast<std::uint64_t>(trial), 0, 0);
    const GroundTruth truth = make_ground_truth(d, norms, sigma2, seed);
    const Matrix x = sample_dataset(truth, n, seed + 1);

    FitOptions options;
    options.k = k;
    options.max_iterations = 50000;
    options.rel_tolerance = 1e-13;
    options.seed = seed + 2;
    const PpcaModel model = fit_ppca(MaskedMatrix(x), options);
    const Directions dirs = extract_directions(model);
    const Matrix eig = top_eigvec_complete(x, k);
    const double subspace_r2 =
        (dirs.basis.transpose() * eig).squaredNorm() / static_cast<double>(k);
    const Vector spectrum = sample_spectrum(x);
    const double trailing = spectrum.tail(d - k).mean();
    min_r2 = std::min(min_r2, subspace_r2);
    max_rel = std::max(max_rel, std::abs(model.noise_variance - trailing) / trailing);
  }
  std::ostringstream detail;
  detail << "20 datasets; min subspace R^2 " << fmt("%.8f", min_r2)
         << ", max relative noise-variance error " << fmt("%.3g", max_rel);
  return {4, min_r2 >= 0.999 && max_rel <= 1e-6, detail.str()};
}

Verdict criterion_monotonicity() {
  Rng rng(5150);
  int violations = 0;
  int skipped = 0;
  double worst = 0.0;
  std::size_t steps = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double m = std::vector<double>{0.0, 0.3, 0.6}[static_cast<std::size_t>(trial % 3)];
    const Index d = 10 + static_cast<Index>(rng.uniform() * 51.0);
    const Index n = 20 + static_cast<Index>(rng.uniform() * 181.0);
    const Index k = 1 + static_cast<Index>(rng.uniform() * 3.0);
    const double sigma2 = 0.02 + rng.uniform();
    std::vector<double> norms;
    for (Index i = 0; i < k; ++i) norms.push_back(0.2 + 2.0 * rng.uniform());
    const std::uint64_t seed = derive_cell_seed(17, static_cast<std::uint64_t>(trial), 0, 0);
    const GroundTruth truth = make_ground_truth(d, norms, sigma2, seed);
    const MaskedMatrix x = apply_mcar_mask(sample_dataset(truth, n, seed + 1), m, seed + 2);

    FitOptions options;
    options.k = k;
    options.max_iterations = 300;
    options.seed = seed + 3;
    PpcaModel model;
    try {
      model = fit_ppca(x, options);
    } catch (const DomainError&) {
      ++skipped;  // a column lost every entry to the mask
      continue;
    }
    const auto& trace = model.log_likelihood_trace;
    for (std::size_t i = 1; i < trace.size(); ++i, ++steps) {
      const double drop = (trace[i - 1] - trace[i]) / std::abs(trace[i - 1]);
      worst = std::max(worst, drop);
      if (drop > 1e-8) ++violations;
    }
  }
  std::ostringstream detail;
  detail << 100 - skipped << " fits (" << skipped << " degenerate masks), " << steps
         << " EM steps; " << violations
         << " decreases beyond 1e-8 relative; largest relative drop " << fmt("%.3g", worst);
  return {5, violations == 0, detail.str()};
}

Verdict criterion_theory() {
  std::vector<double> alphas, snrs, rates;
  for (int i = 0; i < 20; ++i) {
    alphas.push_back(0.01 * std::pow(1e4, i / 19.0));
    snrs.push_back(0.05 * std::pow(1e3, i / 19.0));
    rates.push_back(i / 19.0);
  }
  int mismatches = 0;
  for (double a : alphas)
    for (double s : snrs)
      for (double m : rates) {
        const double effective = (1.0 - m) * s;
        const double rhs = effective > 0.0 ? theory_r2_complete(a, effective) : 0.0;
        if (theory_r2_missing(a, s, m) != rhs) ++mismatches;
      }
  const bool boundary = theory_r2_missing(1.0, 2.0, 0.5) == 0.0 &&
                        theory_r2_complete(0.25, 2.0) == 0.0 &&
                        theory_r2_missing(4.0, 1.0, 0.5) == 0.0;
  const double p1 = theory_r2_complete(2.0 / 3.0, 20.0);
  const double p2 = theory_r2_missing(2.0 / 3.0, 20.0, 0.5);
  const double p3 = theory_r2_complete(2.0, 1.0);
  const bool points = std::abs(p1 - 0.92674) <= 1e-5 && std::abs(p2 - 0.85652) <= 1e-5 &&
                      std::abs(p3 - 1.0 / 3.0) <= 1e-5;
  std::ostringstream detail;
  detail << mismatches << " identity mismatches on 8000 points; boundary "
         << (boundary ? "0" : "nonzero") << "; points " << fmt("%.6f", p1) << ", "
         << fmt("%.6f", p2) << ", " << fmt("%.6f", p3);
  return {6, mismatches == 0 && boundary && points, detail.str()};
}

Verdict criterion_determinism(const SweepResult& first, const ExperimentConfig& config) {
  std::ostringstream a, b;
  write_curve_csv(first.records, a);
  write_curve_csv(run_missing_rate_sweep(config).records, b);
  const bool same = a.str() == b.str();
  return {7, same,
          same ? "repeat run wrote " + std::to_string(a.str().size()) + " identical bytes"
               : "curve CSV differs between runs"};
}

std::set<int> parse_ids(const std::string& text) {
  std::set<int> ids;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) ids.insert(std::atoi(item.c_str()));
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known;
  std::string report_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-failures" && i + 1 < argc) {
      known = parse_ids(argv[++i]);
    } else if (arg == "--report" && i + 1 < argc) {
      report_path = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--known-failures ids] [--report path]\n";
      return 2;
    }
  }

  std::ostringstream report;
  auto emit = [&](const Verdict& v, double seconds) {
    std::ostringstream line;
    line << "criterion " << v.id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail
         << " [" << fmt("%.1f", seconds) << "s]";
    std::cout << line.str() << std::endl;
    report << line.str() << '\n';
  };
  auto timed = [&](auto&& body) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v = body();
    emit(v, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return v;
  };

  std::vector<Verdict> verdicts;
  const ExperimentConfig lattice = phase_transition_config();
  SweepResult sweep;
  verdicts.push_back(timed([&] {
    sweep = run_missing_rate_sweep(lattice);
    return criterion_phase_transition(sweep, lattice);
  }));
  verdicts.push_back(timed(criterion_threshold_location));
  verdicts.push_back(timed([&] { return criterion_hypotheses(sweep); }));
  verdicts.push_back(timed(criterion_spectral_oracle));
  verdicts.push_back(timed(criterion_monotonicity));
  verdicts.push_back(timed(criterion_theory));
  verdicts.push_back(timed([&] { return criterion_determinism(sweep, lattice); }));

  int passed = 0;
  std::vector<int> unexpected;
  for (const Verdict& v : verdicts) {
    if (v.pass) {
      ++passed;
    } else if (!known.count(v.id)) {
      unexpected.push_back(v.id);
    }
  }
  std::ostringstream summary;
  summary << passed << "/" << verdicts.size() << " criteria pass";
  if (passed != static_cast<int>(verdicts.size())) {
    summary << "; failing:";
    for (const Verdict& v : verdicts)
      if (!v.pass) summary << ' ' << v.id << (known.count(v.id) ? " (known)" : "");
  }
  std::cout << summary.str() << std::endl;
  report << summary.str() << '\n';

  if (!report_path.empty()) std::ofstream(report_path) << report.str();
  return unexpected.empty() ? 0 : 1;
}

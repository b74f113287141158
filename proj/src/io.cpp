#include "spiked_pca/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "spiked_pca/errors.hpp"

namespace spiked {
namespace {

constexpr const char* kCurveHeader =
    "sweep_value,component,r2_mean,r2_std,n_reps,theory_r2,theory_alt_r2";

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, delimiter)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == delimiter) out.emplace_back();
  if (line.empty()) out.emplace_back();
  return out;
}

bool parse_double(const std::string& token, double& out) {
  if (token.empty()) return false;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool is_nan_token(const std::string& token) {
  std::string lower = token;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "nan";
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

void validate_format(const MatrixFile& format) {
  if (!std::isprint(static_cast<unsigned char>(format.delimiter)) || format.delimiter == ' ') {
    if (format.delimiter != '\t') throw DomainError("delimiter must be a printable character");
  }
  double ignored = 0.0;
  if (parse_double(format.missing_token, ignored)) {
    throw DomainError("missing token '" + format.missing_token + "' parses as a number");
  }
}

std::vector<double> parse_real_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream stream(text);
  while (std::getline(stream, item, ',')) {
    double value = 0.0;
    if (!parse_double(trim(item), value)) {
      throw FormatError("config key '" + key + "': cannot parse '" + trim(item) + "'");
    }
    out.push_back(value);
  }
  if (out.empty()) throw FormatError("config key '" + key + "' is empty");
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  const std::string prefix = "linspace(";
  if (text.rfind(prefix, 0) != 0) return parse_real_list(text, "grid");
  if (text.back() != ')') throw FormatError("grid: unterminated linspace(...)");
  const auto args =
      parse_real_list(text.substr(prefix.size(), text.size() - prefix.size() - 1), "grid");
  if (args.size() != 3 || args[2] < 1 || args[2] != std::floor(args[2])) {
    throw FormatError("grid: linspace needs (start, stop, count) with integer count >= 1");
  }
  const auto count = static_cast<int>(args[2]);
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] =
        count == 1 ? args[0] : args[0] + (args[1] - args[0]) * i / (count - 1);
  }
  return grid;
}

long long parse_integer(const std::string& text, const std::string& key) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError("config key '" + key + "': expected an integer, got '" + text + "'");
  }
  return value;
}

double parse_real(const std::string& text, const std::string& key) {
  double value = 0.0;
  if (!parse_double(text, value)) {
    throw FormatError("config key '" + key + "': expected a number, got '" + text + "'");
  }
  return value;
}

}  // namespace

std::string format_real(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

MaskedMatrix read_masked_csv(std::istream& in, const MatrixFile& format) {
  validate_format(format);
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> observed;
  std::string line;
  long line_number = 0;
  std::size_t width = 0;
  bool skipped_header = !format.header;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto cells = split(line, format.delimiter);
    if (rows.empty()) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw FormatError("line " + std::to_string(line_number) + ": expected " +
                        std::to_string(width) + " fields, found " +
                        std::to_string(cells.size()));
    }
    std::vector<double> values(width, 0.0);
    std::vector<bool> present(width, false);
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& token = cells[c];
      if (token.empty() || token == format.missing_token || is_nan_token(token)) continue;
      if (!parse_double(token, values[c]) || !std::isfinite(values[c])) {
        throw FormatError("unparseable value '" + token + "' at (" +
                          std::to_string(line_number) + "," + std::to_string(c + 1) + ")");
      }
      present[c] = true;
    }
    rows.push_back(std::move(values));
    observed.push_back(std::move(present));
  }
  if (rows.empty()) throw FormatError("no data rows");

  Matrix values(static_cast<Index>(rows.size()), static_cast<Index>(width));
  Mask mask(values.rows(), values.cols());
  for (Index n = 0; n < values.rows(); ++n) {
    for (Index d = 0; d < values.cols(); ++d) {
      values(n, d) = rows[static_cast<std::size_t>(n)][static_cast<std::size_t>(d)];
      mask(n, d) = observed[static_cast<std::size_t>(n)][static_cast<std::size_t>(d)];
    }
  }
  return MaskedMatrix(std::move(values), std::move(mask));
}

MaskedMatrix read_masked_csv(const MatrixFile& file) {
  auto in = open_input(file.path);
  return read_masked_csv(in, file);
}

void write_masked_csv(const MaskedMatrix& x, std::ostream& out, const MatrixFile& format) {
  validate_format(format);
  for (Index n = 0; n < x.rows(); ++n) {
    for (Index d = 0; d < x.cols(); ++d) {
      if (d > 0) out << format.delimiter;
      out << (x.observed(n, d) ? format_real(x.value(n, d)) : format.missing_token);
    }
    out << '\n';
  }
}

void write_masked_csv(const MaskedMatrix& x, const MatrixFile& file) {
  auto out = open_output(file.path);
  write_masked_csv(x, out, file);
  finish_output(out, file.path);
}

void write_curve_csv(const std::vector<CurveRecord>& records, std::ostream& out) {
  if (records.empty()) throw DomainError("no curve records to write");
  std::vector<CurveRecord> sorted = records;
  std::stable_sort(sorted.begin(), sorted.end(), [](const CurveRecord& a, const CurveRecord& b) {
    if (a.sweep_value != b.sweep_value) return a.sweep_value < b.sweep_value;
    return a.component < b.component;
  });
  out << kCurveHeader << '\n';
  for (const CurveRecord& r : sorted) {
    out << format_real(r.sweep_value) << ',' << r.component << ',' << format_real(r.r2_mean)
        << ',' << format_real(r.r2_std) << ',' << r.n_reps << ',' << format_real(r.theory_r2)
        << ',' << format_real(r.theory_alt_r2) << '\n';
  }
}

void write_curve_csv(const std::vector<CurveRecord>& records, const std::string& path) {
  if (records.empty()) throw DomainError("no curve records to write");
  auto out = open_output(path);
  write_curve_csv(records, out);
  finish_output(out, path);
}

std::vector<CurveRecord> read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCurveHeader) {
    throw FormatError("line 1: expected curve header '" + std::string(kCurveHeader) + "'");
  }
  std::vector<CurveRecord> records;
  long line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 7) {
      throw FormatError("line " + std::to_string(line_number) + ": expected 7 fields");
    }
    std::array<double, 7> v{};
    for (std::size_t c = 0; c < 7; ++c) {
      if (!parse_double(cells[c], v[c])) {
        throw FormatError("unparseable value '" + cells[c] + "' at (" +
                          std::to_string(line_number) + "," + std::to_string(c + 1) + ")");
      }
    }
    records.push_back(CurveRecord{v[0], static_cast<int>(v[1]), v[2], v[3],
                                  static_cast<int>(v[4]), v[5], v[6]});
  }
  return records;
}

std::vector<CurveRecord> read_curve_csv(const std::string& path) {
  auto in = open_input(path);
  return read_curve_csv(in);
}

void write_ground_truth(const GroundTruth& truth, std::uint64_t seed, const std::string& path) {
  auto out = open_output(path);
  out << "# noise_variance=" << format_real(truth.noise_variance) << ",seed=" << seed
      << ",k=" << truth.rank() << '\n';
  write_masked_csv(MaskedMatrix(truth.directions), out, MatrixFile{});
  finish_output(out, path);
}

GroundTruthFile read_ground_truth(const std::string& path) {
  auto in = open_input(path);
  std::string meta;
  std::getline(in, meta);
  if (meta.rfind("# ", 0) != 0) throw FormatError("line 1: missing ground-truth metadata");

  std::map<std::string, std::string> fields;
  std::istringstream stream(meta.substr(2));
  std::string item;
  while (std::getline(stream, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw FormatError("line 1: malformed metadata '" + item + "'");
    fields[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  if (!fields.count("noise_variance") || !fields.count("seed")) {
    throw FormatError("line 1: metadata needs noise_variance and seed");
  }

  const MaskedMatrix directions = read_masked_csv(in, MatrixFile{});
  if (!directions.fully_observed()) throw FormatError("ground-truth directions have gaps");
  GroundTruthFile out{
      ground_truth_from_directions(directions.values(),
                                   parse_real(fields["noise_variance"], "noise_variance")),
      static_cast<std::uint64_t>(std::stoull(fields["seed"]))};
  return out;
}

void write_model(const PpcaModel& model, const std::string& path) {
  nlohmann::json doc;
  doc["mean"] = std::vector<double>(model.mean.data(), model.mean.data() + model.mean.size());
  nlohmann::json loadings = nlohmann::json::array();
  for (Index d = 0; d < model.loadings.rows(); ++d) {
    std::vector<double> row(static_cast<std::size_t>(model.loadings.cols()));
    for (Index j = 0; j < model.loadings.cols(); ++j) {
      row[static_cast<std::size_t>(j)] = model.loadings(d, j);
    }
    loadings.push_back(row);
  }
  doc["loadings"] = loadings;
  doc["noise_variance"] = model.noise_variance;
  doc["log_likelihood"] = model.log_likelihood;
  doc["n_iterations"] = model.n_iterations;
  doc["converged"] = model.converged;
  doc["skipped_rows"] = model.skipped_rows;

  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  finish_output(out, path);
}

PpcaModel read_model(const std::string& path) {
  auto in = open_input(path);
  PpcaModel model;
  try {
    const nlohmann::json doc = nlohmann::json::parse(in);
    const auto mean = doc.at("mean").get<std::vector<double>>();
    model.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Index>(mean.size()));
    const auto rows = doc.at("loadings").get<std::vector<std::vector<double>>>();
    const Index k = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
    model.loadings.resize(static_cast<Index>(rows.size()), k);
    for (std::size_t d = 0; d < rows.size(); ++d) {
      if (static_cast<Index>(rows[d].size()) != k) throw FormatError("ragged loadings");
      for (Index j = 0; j < k; ++j) {
        model.loadings(static_cast<Index>(d), j) = rows[d][static_cast<std::size_t>(j)];
      }
    }
    model.noise_variance = doc.at("noise_variance").get<double>();
    model.log_likelihood = doc.at("log_likelihood").get<double>();
    model.n_iterations = doc.at("n_iterations").get<int>();
    model.converged = doc.at("converged").get<bool>();
    model.skipped_rows = doc.value("skipped_rows", Index{0});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model file '" + path + "': " + e.what());
  }
  return model;
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig config;
  std::map<std::string, bool> seen;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    seen[key] = true;

    if (key == "sweep") {
      if (value == "missing_rate") {
        config.sweep_kind = SweepKind::missing_rate;
      } else if (value == "snr" || value == "snr_via_added_noise") {
        config.sweep_kind = SweepKind::snr_via_added_noise;
      } else {
        throw FormatError("config line " + std::to_string(line_number) +
                          ": sweep must be missing_rate or snr");
      }
    } else if (key == "grid") {
      config.grid = parse_grid(value);
    } else if (key == "n") {
      config.n = static_cast<Index>(parse_integer(value, key));
    } else if (key == "d") {
      config.d = static_cast<Index>(parse_integer(value, key));
    } else if (key == "norms") {
      config.norms = parse_real_list(value, key);
    } else if (key == "noise_variance") {
      config.noise_variance = parse_real(value, key);
    } else if (key == "fixed_missing_rate") {
      config.fixed_missing_rate = parse_real(value, key);
    } else if (key == "repetitions") {
      config.repetitions = static_cast<int>(parse_integer(value, key));
    } else if (key == "base_seed") {
      config.base_seed = static_cast<std::uint64_t>(parse_integer(value, key));
    } else if (key == "orthogonal") {
      if (value != "true" && value != "false") {
        throw FormatError("config key 'orthogonal' must be true or false");
      }
      config.orthogonal = value == "true";
    } else if (key == "max_iterations") {
      config.fit.max_iterations = static_cast<int>(parse_integer(value, key));
    } else if (key == "rel_tolerance") {
      config.fit.rel_tolerance = parse_real(value, key);
    } else if (key == "tolerance_streak") {
      config.fit.tolerance_streak = static_cast<int>(parse_integer(value, key));
    } else {
      throw FormatError("config line " + std::to_string(line_number) + ": unknown key '" +
                        key + "'");
    }
  }
  for (const char* required : {"sweep", "grid", "n", "d", "norms", "noise_variance"}) {
    if (!seen.count(required)) {
      throw FormatError(std::string("config is missing required key '") + required + "'");
    }
  }
  config.fit.k = static_cast<Index>(config.norms.size());
  validate_config(config);
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  auto in = open_input(path);
  return parse_experiment_config(in);
}

}  // namespace spiked

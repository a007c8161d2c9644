#include "spice/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "spice/conformal.hpp"
#include "spice/csv.hpp"
#include "spice/datagen.hpp"
#include "spice/model_io.hpp"
#include "spice/verify.hpp"

namespace spice::commands {

namespace {

// Opens `path` for reading; "-" means standard input.
class InputSource {
 public:
  explicit InputSource(const std::string& path) : label_(path) {
    if (path == "-") {
      label_ = "<stdin>";
      return;
    }
    file_ = std::make_unique<std::ifstream>(path);
    if (!*file_) throw DataError("cannot open '" + path + "'");
  }
  std::istream& stream() { return file_ ? *file_ : std::cin; }
  const std::string& label() const { return label_; }

 private:
  std::unique_ptr<std::ifstream> file_;
  std::string label_;
};

struct Rows {
  std::vector<std::vector<double>> values;
  std::size_t width = 0;
};

Rows read_rows(const std::string& path) {
  InputSource source(path);
  csv::Reader reader(source.stream(), source.label());
  Rows rows;
  std::vector<double> row;
  while (reader.next(row)) rows.values.push_back(row);
  if (rows.values.empty()) throw DataError(source.label() + ": no rows");
  rows.width = reader.width();
  return rows;
}

// Predictions for rows of width d (features only) or d + 1 (with target).
// Returns true when targets are present.
bool check_width(const Rows& rows, int d, const std::string& path) {
  if (rows.width == static_cast<std::size_t>(d)) return false;
  if (rows.width == static_cast<std::size_t>(d) + 1) return true;
  throw DataError(path + ": rows have " + std::to_string(rows.width) + " columns; the model expects " +
                  std::to_string(d) + " features (optionally followed by a target)");
}

}  // namespace

FeatureMap FeatureOptions::build(int input_dim) const {
  const BasisKind kind = parse_basis_kind(features);
  const MeanKind mean_kind = parse_mean_kind(mean);
  if (kind == BasisKind::Linear) return FeatureMap::linear(input_dim, mean_kind);
  if (m < 1) throw DataError("--m is required (>= 1) for Laplace features");
  if (half_widths.empty()) throw DataError("--half-widths is required for Laplace features");
  return FeatureMap(kind, mean_kind, input_dim, m, half_widths);
}

SpiceModel fit_stream(std::istream& in, const std::string& label, const FitOptions& options) {
  csv::Reader reader(in, label);
  std::vector<double> row;
  std::optional<SpiceModel> model;
  if (!options.resume.empty()) model.emplace(load_model(options.resume));
  std::size_t d = 0;
  while (reader.next(row)) {
    if (d == 0) {
      if (row.size() < 2) throw DataError(label + ": need at least one feature column and a target");
      d = row.size() - 1;
      if (model) {
        if (static_cast<std::size_t>(model->features().input_dim()) != d)
          throw DataError(label + ": rows have " + std::to_string(d) + " features; the model expects " +
                          std::to_string(model->features().input_dim()));
      } else {
        SpiceOptions spice_options;
        spice_options.cycles = options.cycles;
        spice_options.penalty_inflation = options.penalty_inflation;
        model.emplace(options.features.build(static_cast<int>(d)), spice_options);
      }
    }
    model->step(std::span<const double>(row.data(), d), row[d]);
  }
  if (d == 0) throw DataError(label + ": no rows");
  return std::move(*model);
}

int cmd_fit(const FitOptions& options, std::ostream& log) {
  InputSource source(options.input);
  const SpiceModel model = fit_stream(source.stream(), source.label(), options);
  if (!options.model.empty()) save_model(model, options.model);
  log << "n=" << model.stats().count() << " nonzero=" << model.nonzero_count()
      << " objective=" << csv::format_double(model.objective()) << '\n';
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& input, std::ostream& out,
                std::ostream& log) {
  const SpiceModel model = load_model(model_path);
  const int d = model.features().input_dim();
  const Rows rows = read_rows(input);
  const bool targets = check_width(rows, d, input);
  out << "y_hat\n";
  double sse = 0.0;
  for (const auto& row : rows.values) {
    const double y_hat = model.predict(std::span<const double>(row.data(), static_cast<std::size_t>(d)));
    const double value[] = {y_hat};
    csv::write_row(out, value);
    if (targets) sse += (row.back() - y_hat) * (row.back() - y_hat);
  }
  if (targets)
    log << "rows=" << rows.values.size()
        << " mse=" << csv::format_double(sse / static_cast<double>(rows.values.size())) << '\n';
  return kExitOk;
}

int cmd_conformal(const ConformalOptions& options, std::ostream& out, std::ostream& log) {
  const Rows data = read_rows(options.input);
  if (data.width < 2) throw DataError(options.input + ": need at least one feature column and a target");
  const auto d = data.width - 1;
  const auto n = static_cast<Index>(data.values.size());
  const auto halves = conformal::split_indices(n, options.seed);

  SpiceOptions spice_options;
  spice_options.cycles = options.cycles;
  SpiceModel model(options.features.build(static_cast<int>(d)), spice_options);
  for (Index i : halves.train) {
    const auto& row = data.values[static_cast<std::size_t>(i)];
    model.step(std::span<const double>(row.data(), d), row[d]);
  }
  std::vector<double> residuals;
  residuals.reserve(halves.calibration.size());
  for (Index i : halves.calibration) {
    const auto& row = data.values[static_cast<std::size_t>(i)];
    residuals.push_back(std::abs(row[d] - model.predict(std::span<const double>(row.data(), d))));
  }
  const auto calibrator = conformal::ConformalCalibrator::calibrate(std::move(residuals), options.kappa_cov);
  const double inf = std::numeric_limits<double>::infinity();
  const double half = calibrator.bounded() ? calibrator.half_width() : inf;

  const Rows rows = options.test.empty() ? data : read_rows(options.test);
  const bool targets = check_width(rows, static_cast<int>(d), options.test.empty() ? options.input : options.test);
  out << "y_hat,lower,upper\n";
  std::size_t covered = 0;
  for (const auto& row : rows.values) {
    const double y_hat = model.predict(std::span<const double>(row.data(), d));
    const double values[] = {y_hat, y_hat - half, y_hat + half};
    csv::write_row(out, values);
    if (targets && std::abs(row.back() - y_hat) <= half) ++covered;
  }
  log << "n_train=" << halves.train.size() << " n_cal=" << halves.calibration.size()
      << " k=" << calibrator.rank() << " half_width=" << csv::format_double(half);
  if (!calibrator.bounded()) log << " (unbounded: k exceeds n_cal)";
  if (targets)
    log << " coverage=" << csv::format_double(static_cast<double>(covered) / static_cast<double>(rows.values.size()))
        << " target=" << csv::format_double(options.kappa_cov)
        << (options.test.empty() ? " (rows include the training and calibration halves)" : "");
  log << '\n';
  return kExitOk;
}

int cmd_experiment(const experiment::ExperimentConfig& config, const std::string& out_dir,
                   std::ostream& log) {
  const experiment::ExperimentReport report = experiment::run_experiment(config);
  if (!out_dir.empty()) report.write(out_dir);
  log << report.table_text();
  return kExitOk;
}

int cmd_verify(int instances, std::uint64_t seed, std::ostream& out) {
  verify::SuiteConfig suite_config;
  suite_config.instances = instances;
  suite_config.seed = seed;
  const verify::SuiteReport suite = verify::run_bound_suite(suite_config);

  const int trials = 10000;
  const Index n = 50, p = 20;
  const double delta = 4.0;
  const double rate = verify::gaussian_event_rate(trials, n, p, delta, 1.0, derive_seed(seed, {0x6761ULL}));
  const double required = 1.0 - 2.0 * std::exp(-delta / 2.0);

  nlohmann::json doc;
  doc["bound_suite"] = suite.to_json();
  doc["gaussian_event"] = {{"trials", trials}, {"n", n},          {"p", p},
                           {"delta", delta},   {"rate", rate},    {"required", required},
                           {"pass", rate >= required}};
  doc["pass"] = suite.pass() && rate >= required;
  out << doc.dump(2) << '\n';
  return doc["pass"].get<bool>() ? kExitOk : kExitNumerical;
}

int cmd_datagen(const datagen::SparseStudentTConfig& config, Index n, std::uint64_t seed,
                std::ostream& out) {
  const datagen::SparseStudentTGenerator generator(config);
  const datagen::Dataset data = generator.sample(n, seed);
  std::vector<std::string> names;
  for (int j = 1; j <= config.d; ++j) names.push_back("x" + std::to_string(j));
  names.push_back("y");
  csv::write_header(out, names);
  std::vector<double> row(static_cast<std::size_t>(config.d) + 1);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < config.d; ++j) row[static_cast<std::size_t>(j)] = data.X(i, j);
    row.back() = data.y[i];
    csv::write_row(out, row);
  }
  return kExitOk;
}

}  // namespace spice::commands

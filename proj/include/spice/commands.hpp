#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "spice/experiment.hpp"
#include "spice/features.hpp"
#include "spice/spice.hpp"

namespace spice::commands {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

struct FeatureOptions {
  std::string features = "linear";
  std::string mean = "constant";
  int m = 0;                        ///< required for the Laplace kinds
  std::vector<double> half_widths;  ///< one value (broadcast) or d values

  /// Throws DataError for bad names or missing Laplace parameters.
  FeatureMap build(int input_dim) const;
};

struct FitOptions {
  std::string input;   ///< CSV path, "-" for stdin
  std::string model;   ///< output model path (empty: do not write)
  std::string resume;  ///< existing model to continue (empty: fresh)
  FeatureOptions features;
  int cycles = 3;
  double penalty_inflation = 1.0;
};

/// Streams every row through SpiceModel::step in file order.
SpiceModel fit_stream(std::istream& in, const std::string& label, const FitOptions& options);

/// Fits, writes the model and prints n, the nonzero count and the final
/// objective to `log`.
int cmd_fit(const FitOptions& options, std::ostream& log);

/// Writes y_hat for each row (d columns, or d + 1 with a trailing target).
/// With targets, prints the mean squared error to `log`.
int cmd_predict(const std::string& model_path, const std::string& input, std::ostream& out,
                std::ostream& log);

struct ConformalOptions {
  std::string input;  ///< training data with targets
  std::string test;   ///< rows to produce intervals for (empty: the input rows)
  FeatureOptions features;
  int cycles = 3;
  double kappa_cov = 0.9;
  std::uint64_t seed = 0;
};

/// Splits the input, fits SPICE on one half, calibrates on the other and
/// writes y_hat,lower,upper per row. Unbounded intervals print as -inf/inf.
/// A coverage summary goes to `log` when the rows carry targets.
int cmd_conformal(const ConformalOptions& options, std::ostream& out, std::ostream& log);

/// Runs the study, writes the report directory (if non-empty) and prints the
/// table to `log`.
int cmd_experiment(const experiment::ExperimentConfig& config, const std::string& out_dir,
                   std::ostream& log);

/// Bound-check suite plus the Gaussian event-rate check, as JSON.
int cmd_verify(int instances, std::uint64_t seed, std::ostream& out);

/// n rows of d features then y, with a header.
int cmd_datagen(const datagen::SparseStudentTConfig& config, Index n, std::uint64_t seed,
                std::ostream& out);

}  // namespace spice::commands

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "spice/common.hpp"
#include "spice/datagen.hpp"

namespace spice::experiment {

/// One Monte Carlo study on the sparse Student-t generator.
///
///  - table1:        fit on n rows, report the population risk in dB
///                   relative to the noise variance
///  - table2:        draw 2n rows, fit on one half, calibrate a split
///                   conformal interval on the other, report mean interval
///                   length and coverage on fresh test rows
///  - table3-timing: wall time of each fit on n rows
struct ExperimentConfig {
  std::string id = "table1";
  int replications = 200;
  std::vector<Index> n_grid{50, 100, 200};
  std::vector<std::string> predictors{"spice", "ridge", "lasso"};
  std::uint64_t seed = 1;
  int cycles = 3;        ///< SPICE L
  int folds = 10;        ///< K for ridge and LASSO
  int grid_size = 10;    ///< hyperparameter values per CV grid
  double kappa_cov = 0.9;
  int test_points = 1000;  ///< fresh rows for coverage and residual plots
  int threads = 1;
  datagen::SparseStudentTConfig generator;

  /// Defaults for an experiment id (table3-timing uses larger n, fewer
  /// replications and only SPICE).
  static ExperimentConfig defaults_for(const std::string& id);

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing fields keep the defaults for the given id.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct CellResult {
  Index n = 0;
  std::string predictor;
  double mean_risk = 0.0;
  double risk_db = 0.0;
  double mean_length = 0.0;    ///< table2 only; inf if any interval unbounded
  double mean_coverage = 0.0;  ///< table2 only
  double mean_seconds = 0.0;
  int unbounded = 0;
  std::vector<double> risks;
  std::vector<double> lengths;
  std::vector<double> coverages;
  std::vector<double> seconds;
  std::vector<double> hyperparameters;  ///< selected CV value per replication
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CellResult> cells;
  /// Out-of-sample residuals of replication 0 at the largest n.
  std::map<std::string, std::vector<double>> residuals;

  const CellResult& cell(Index n, const std::string& predictor) const;

  /// Full resolved configuration plus per-cell summaries and per-replication
  /// values. `include_timing` false drops wall times (for rerun comparisons).
  nlohmann::json to_json(bool include_timing = true) const;
  std::string results_csv() const;
  std::string table_text() const;
  std::string residual_svg() const;
  /// Writes report.json, results.csv, table.txt and residuals.svg.
  void write(const std::string& directory) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Weights over (1, x) for one predictor trained on (X, y); the selected CV
/// hyperparameter (NaN for SPICE) goes to `hyperparameter`.
Vector fit_predictor(const std::string& predictor, const Matrix& X, const Vector& y,
                     const ExperimentConfig& config, std::uint64_t cv_seed,
                     double* hyperparameter = nullptr);

}  // namespace spice::experiment

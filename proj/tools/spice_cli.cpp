#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spice/commands.hpp"
#include "spice/datagen.hpp"
#include "spice/experiment.hpp"

using namespace spice;
using namespace spice::commands;

namespace {

void add_feature_flags(CLI::App* cmd, FeatureOptions& f) {
  cmd->add_option("--features", f.features, "Basis: linear | laplace-tensor | laplace-additive")
      ->check(CLI::IsMember({"linear", "laplace-tensor", "laplace-additive"}));
  cmd->add_option("--mean", f.mean, "Unpenalized mean block: none | constant | affine")
      ->check(CLI::IsMember({"none", "constant", "affine"}));
  cmd->add_option("--m", f.m, "Laplace indices per input dimension");
  cmd->add_option("--half-widths", f.half_widths, "Laplace box half-widths (one value or d values)")
      ->delimiter(',');
}

// Writes to --out when given, else stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw DataError("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online SPICE regression with conformal intervals and baselines"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Stream a CSV through the online solver and save the model");
  fit_cmd->add_option("input", fit.input, "CSV with d feature columns then y ('-' for stdin)")->required();
  fit_cmd->add_option("--model,--out", fit.model, "Model file to write")->required();
  fit_cmd->add_option("--resume", fit.resume, "Continue from an existing model file");
  fit_cmd->add_option("--cycles", fit.cycles, "Cycles L per sample")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--penalty-inflation", fit.penalty_inflation, "Multiplier on every penalty weight")
      ->check(CLI::PositiveNumber);
  add_feature_flags(fit_cmd, fit.features);

  std::string predict_model, predict_input, predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "Predict from a saved model");
  predict_cmd->add_option("input", predict_input, "CSV with d feature columns, optionally y")->required();
  predict_cmd->add_option("--model", predict_model, "Model file")->required();
  predict_cmd->add_option("--out", predict_out, "Prediction CSV (default stdout)");

  ConformalOptions conf;
  std::string conf_out;
  auto* conf_cmd = app.add_subcommand("conformal", "Split-conformal prediction intervals");
  conf_cmd->add_option("input", conf.input, "Training CSV with targets")->required();
  conf_cmd->add_option("--test", conf.test, "Rows to predict (default: the input rows)");
  conf_cmd->add_option("--kappa-cov", conf.kappa_cov, "Target coverage in (0, 1)");
  conf_cmd->add_option("--seed", conf.seed, "Split seed");
  conf_cmd->add_option("--cycles", conf.cycles, "Cycles L per sample")->check(CLI::PositiveNumber);
  conf_cmd->add_option("--out", conf_out, "Interval CSV (default stdout)");
  add_feature_flags(conf_cmd, conf.features);

  std::string exp_id = "table1", exp_config, exp_out;
  std::vector<Index> exp_n;
  std::vector<std::string> exp_predictors;
  int exp_reps = 0, exp_threads = 0, exp_cycles = 0, exp_test = 0;
  double exp_kappa = 0.0, exp_nu = 0.0;
  std::uint64_t exp_seed = 0;
  auto* exp_cmd = app.add_subcommand("experiment", "Monte Carlo reproduction of the synthetic study");
  exp_cmd->add_option("--id", exp_id, "table1 | table2 | table3-timing")
      ->check(CLI::IsMember({"table1", "table2", "table3-timing"}));
  exp_cmd->add_option("--config", exp_config, "JSON experiment configuration (flags override it)");
  exp_cmd->add_option("--replications", exp_reps, "Monte Carlo replications");
  exp_cmd->add_option("--n", exp_n, "Sample sizes, ascending")->delimiter(',');
  exp_cmd->add_option("--predictors", exp_predictors, "Subset of spice,ridge,lasso")->delimiter(',');
  auto* exp_seed_opt = exp_cmd->add_option("--seed", exp_seed, "Base seed");
  exp_cmd->add_option("--cycles", exp_cycles, "SPICE cycles L");
  exp_cmd->add_option("--kappa-cov", exp_kappa, "Target coverage for table2");
  exp_cmd->add_option("--nu", exp_nu, "Student-t degrees of freedom");
  exp_cmd->add_option("--test-points", exp_test, "Fresh rows per replication for coverage");
  exp_cmd->add_option("--threads", exp_threads, "Worker threads over replications");
  exp_cmd->add_option("--out", exp_out, "Report directory");

  int verify_instances = 500;
  std::uint64_t verify_seed = 1;
  std::string verify_out;
  auto* verify_cmd = app.add_subcommand("verify", "Run the sparse-oracle bound checks and print JSON");
  verify_cmd->add_option("--instances", verify_instances, "Accepted random instances")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--seed", verify_seed, "Seed");
  verify_cmd->add_option("--out", verify_out, "JSON file (default stdout)");

  datagen::SparseStudentTConfig gen;
  Index gen_n = 100;
  std::uint64_t gen_seed = 0;
  std::string gen_mixing = "gaussian", gen_out;
  auto* gen_cmd = app.add_subcommand("datagen", "Write a synthetic sparse Student-t dataset as CSV");
  gen_cmd->add_option("--rows", gen_n, "Number of rows")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--d", gen.d, "Input dimension");
  gen_cmd->add_option("--nu", gen.nu, "Student-t degrees of freedom (> 2)");
  gen_cmd->add_option("--rank", gen.rank, "Input covariance rank (0: d/2)");
  gen_cmd->add_option("--mixing", gen_mixing, "gaussian | orthonormal | unit-diagonal")
      ->check(CLI::IsMember({"gaussian", "orthonormal", "unit-diagonal"}));
  gen_cmd->add_option("--mixing-seed", gen.seed, "Seed of the fixed mixing matrix");
  gen_cmd->add_option("--seed", gen_seed, "Seed of the rows");
  gen_cmd->add_option("--out", gen_out, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, std::cerr);
    if (*predict_cmd) {
      Output out(predict_out);
      return cmd_predict(predict_model, predict_input, out.stream(), std::cerr);
    }
    if (*conf_cmd) {
      Output out(conf_out);
      return cmd_conformal(conf, out.stream(), std::cerr);
    }
    if (*exp_cmd) {
      experiment::ExperimentConfig config = experiment::ExperimentConfig::defaults_for(exp_id);
      if (!exp_config.empty()) {
        std::ifstream in(exp_config);
        if (!in) throw DataError("cannot open '" + exp_config + "'");
        nlohmann::json j;
        try {
          in >> j;
        } catch (const nlohmann::json::exception& e) {
          throw DataError("config '" + exp_config + "' is not valid JSON: " + e.what());
        }
        if (!j.contains("id")) j["id"] = exp_id;
        config = experiment::ExperimentConfig::from_json(j);
      }
      if (exp_reps > 0) config.replications = exp_reps;
      if (!exp_n.empty()) config.n_grid = exp_n;
      if (!exp_predictors.empty()) config.predictors = exp_predictors;
      if (*exp_seed_opt) config.seed = exp_seed;
      if (exp_cycles > 0) config.cycles = exp_cycles;
      if (exp_kappa > 0.0) config.kappa_cov = exp_kappa;
      if (exp_nu > 0.0) config.generator.nu = exp_nu;
      if (exp_test > 0) config.test_points = exp_test;
      if (exp_threads > 0) config.threads = exp_threads;
      return cmd_experiment(config, exp_out, std::cout);
    }
    if (*verify_cmd) {
      Output out(verify_out);
      return cmd_verify(verify_instances, verify_seed, out.stream());
    }
    if (*gen_cmd) {
      gen.mixing = datagen::parse_mixing_kind(gen_mixing);
      Output out(gen_out);
      return cmd_datagen(gen, gen_n, gen_seed, out.stream());
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

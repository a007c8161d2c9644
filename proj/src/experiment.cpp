#include "spice/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "spice/baselines.hpp"
#include "spice/conformal.hpp"
#include "spice/csv.hpp"
#include "spice/features.hpp"
#include "spice/spice.hpp"

namespace spice::experiment {

namespace {

constexpr std::uint64_t kDataTag = 1, kCvTag = 2, kSplitTag = 3, kTestTag = 4;

std::uint64_t id_tag(const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : id) h = (h ^ c) * 1099511628211ULL;
  return h;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::string display_name(const std::string& predictor) {
  if (predictor == "spice") return "SPICE";
  if (predictor == "ridge") return "Ridge";
  if (predictor == "lasso") return "LASSO";
  return predictor;
}

Matrix with_intercept(const Matrix& X) {
  Matrix Phi(X.rows(), X.cols() + 1);
  Phi.col(0).setOnes();
  Phi.rightCols(X.cols()) = X;
  return Phi;
}

Vector predict(const Vector& w, const Matrix& X) {
  return (X * w.tail(X.cols())).array() + w[0];
}

Matrix gather_rows(const Matrix& A, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), A.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = A.row(rows[i]);
  return out;
}

Vector gather(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

struct RepOutcome {
  double risk = 0.0;
  double length = 0.0;
  double coverage = 0.0;
  double seconds = 0.0;
  double hyper = std::numeric_limits<double>::quiet_NaN();
  bool unbounded = false;
};

}  // namespace

ExperimentConfig ExperimentConfig::defaults_for(const std::string& id) {
  ExperimentConfig c;
  c.id = id;
  if (id == "table3-timing") {
    c.replications = 3;
    c.n_grid = {2000, 4000, 8000};
    c.predictors = {"spice"};
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (id != "table1" && id != "table2" && id != "table3-timing")
    throw DataError("unknown experiment id '" + id + "' (table1 | table2 | table3-timing)");
  if (replications < 1) throw DataError("replications must be at least 1");
  if (n_grid.empty()) throw DataError("n grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw DataError("n grid values must be positive");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw DataError("n grid must be strictly ascending");
  }
  if (predictors.empty()) throw DataError("no predictors selected");
  for (const auto& p : predictors)
    if (p != "spice" && p != "ridge" && p != "lasso")
      throw DataError("unknown predictor '" + p + "' (spice | ridge | lasso)");
  if (cycles < 1) throw DataError("cycles must be at least 1");
  if (folds < 2) throw DataError("folds must be at least 2");
  if (grid_size < 1) throw DataError("grid size must be at least 1");
  if (!(kappa_cov > 0.0 && kappa_cov < 1.0)) throw DataError("kappa_cov must lie in (0, 1)");
  if (test_points < 1) throw DataError("test_points must be at least 1");
  if (threads < 1) throw DataError("threads must be at least 1");
  for (const auto& p : predictors)
    if (p != "spice")
      for (Index n : n_grid)
        if (n < folds) throw DataError("n = " + std::to_string(n) + " is smaller than K = " + std::to_string(folds));
  generator.validate();
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"id", id},
          {"replications", replications},
          {"n_grid", n_grid},
          {"predictors", predictors},
          {"seed", seed},
          {"cycles", cycles},
          {"folds", folds},
          {"grid_size", grid_size},
          {"ridge_grid", "log-spaced over [1e-4, 1e4] * tr(Gamma) / p"},
          {"lasso_grid", "log-spaced over [1e-3, 1] * theta_max"},
          {"kappa_cov", kappa_cov},
          {"test_points", test_points},
          {"threads", threads},
          {"generator", generator.to_json()}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c = defaults_for(j.value("id", std::string("table1")));
    c.replications = j.value("replications", c.replications);
    if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<Index>>();
    if (j.contains("predictors")) c.predictors = j.at("predictors").get<std::vector<std::string>>();
    c.seed = j.value("seed", c.seed);
    c.cycles = j.value("cycles", c.cycles);
    c.folds = j.value("folds", c.folds);
    c.grid_size = j.value("grid_size", c.grid_size);
    c.kappa_cov = j.value("kappa_cov", c.kappa_cov);
    c.test_points = j.value("test_points", c.test_points);
    c.threads = j.value("threads", c.threads);
    if (j.contains("generator")) c.generator = datagen::SparseStudentTConfig::from_json(j.at("generator"));
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed experiment config: ") + e.what());
  }
}

Vector fit_predictor(const std::string& predictor, const Matrix& X, const Vector& y,
                     const ExperimentConfig& config, std::uint64_t cv_seed, double* hyperparameter) {
  if (hyperparameter) *hyperparameter = std::numeric_limits<double>::quiet_NaN();
  if (predictor == "spice") {
    SpiceOptions options;
    options.cycles = config.cycles;
    SpiceModel model(FeatureMap::linear(static_cast<int>(X.cols())), options);
    Vector row(X.cols());
    for (Index i = 0; i < X.rows(); ++i) {
      row = X.row(i).transpose();
      model.step(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), y[i]);
    }
    return model.weights();
  }
  const Matrix Phi = with_intercept(X);
  baselines::CvFit fit = predictor == "ridge"
                             ? baselines::ridge_cv(Phi, y, 1, config.folds, cv_seed, config.grid_size)
                             : baselines::lasso_cv(Phi, y, 1, config.folds, cv_seed, config.grid_size);
  if (hyperparameter) *hyperparameter = fit.cv.best;
  return fit.w;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const datagen::SparseStudentTGenerator generator(config.generator);
  const std::uint64_t tag = id_tag(config.id);
  const double noise = config.generator.noise_variance;
  const std::size_t P = config.predictors.size();
  const auto reps = static_cast<std::size_t>(config.replications);

  ExperimentReport report;
  report.config = config;

  for (Index n : config.n_grid) {
    std::vector<std::vector<RepOutcome>> outcomes(P, std::vector<RepOutcome>(reps));
    const bool keep_residuals = n == config.n_grid.back();

    auto run_rep = [&](std::size_t rep) {
      const auto un = static_cast<std::uint64_t>(n);
      const bool split = config.id == "table2";
      const datagen::Dataset data =
          generator.sample(split ? 2 * n : n, derive_seed(config.seed, {tag, kDataTag, un, rep}));
      Matrix X_train = data.X, X_cal;
      Vector y_train = data.y, y_cal;
      if (split) {
        const auto halves = conformal::split_indices(2 * n, derive_seed(config.seed, {tag, kSplitTag, un, rep}));
        X_train = gather_rows(data.X, halves.train);
        y_train = gather(data.y, halves.train);
        X_cal = gather_rows(data.X, halves.calibration);
        y_cal = gather(data.y, halves.calibration);
      }
      const bool need_test = split || (keep_residuals && rep == 0);
      datagen::Dataset test;
      if (need_test)
        test = generator.sample(config.test_points, derive_seed(config.seed, {tag, kTestTag, un, rep}));

      for (std::size_t k = 0; k < P; ++k) {
        RepOutcome& out = outcomes[k][rep];
        const auto start = std::chrono::steady_clock::now();
        const Vector w = fit_predictor(config.predictors[k], X_train, y_train, config,
                                       derive_seed(config.seed, {tag, kCvTag, un, rep}), &out.hyper);
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.risk = generator.population_risk(w[0], w.tail(X_train.cols()));
        if (split) {
          const Vector cal_residuals = (y_cal - predict(w, X_cal)).cwiseAbs();
          const auto calibrator = conformal::ConformalCalibrator::calibrate(
              std::vector<double>(cal_residuals.data(), cal_residuals.data() + cal_residuals.size()),
              config.kappa_cov);
          if (calibrator.bounded()) {
            const double r = calibrator.half_width();
            out.length = 2.0 * r;
            const Vector test_residuals = (test.y - predict(w, test.X)).cwiseAbs();
            out.coverage = static_cast<double>((test_residuals.array() <= r).count()) /
                           static_cast<double>(test_residuals.size());
          } else {
            out.unbounded = true;
            out.length = std::numeric_limits<double>::infinity();
            out.coverage = 1.0;
          }
        }
        if (need_test && keep_residuals && rep == 0) {
          const Vector r = test.y - predict(w, test.X);
          report.residuals[config.predictors[k]] = std::vector<double>(r.data(), r.data() + r.size());
        }
      }
    };

    if (config.threads <= 1 || reps <= 1) {
      for (std::size_t rep = 0; rep < reps; ++rep) run_rep(rep);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      std::vector<std::thread> pool;
      const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), reps);
      for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
          for (std::size_t rep; (rep = next++) < reps;) {
            try {
              run_rep(rep);
            } catch (...) {
              std::lock_guard<std::mutex> lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      for (auto& t : pool) t.join();
      if (failure) std::rethrow_exception(failure);
    }

    for (std::size_t k = 0; k < P; ++k) {
      CellResult cell;
      cell.n = n;
      cell.predictor = config.predictors[k];
      for (const RepOutcome& o : outcomes[k]) {
        cell.risks.push_back(o.risk);
        cell.seconds.push_back(o.seconds);
        cell.hyperparameters.push_back(o.hyper);
        if (config.id == "table2") {
          cell.lengths.push_back(o.length);
          cell.coverages.push_back(o.coverage);
          if (o.unbounded) ++cell.unbounded;
        }
      }
      cell.mean_risk = mean_of(cell.risks);
      cell.risk_db = 10.0 * std::log10(cell.mean_risk / noise);
      cell.mean_length = mean_of(cell.lengths);
      cell.mean_coverage = mean_of(cell.coverages);
      cell.mean_seconds = mean_of(cell.seconds);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

const CellResult& ExperimentReport::cell(Index n, const std::string& predictor) const {
  for (const auto& c : cells)
    if (c.n == n && c.predictor == predictor) return c;
  throw DataError("no cell for n = " + std::to_string(n) + ", predictor " + predictor);
}

namespace {

nlohmann::json finite_or_null(const std::vector<double>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : v) out.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
  return out;
}

nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json ExperimentReport::to_json(bool include_timing) const {
  nlohmann::json doc;
  doc["config"] = config.to_json();
  doc["risk_unit"] = "10 log10(mean population risk / noise variance)";
  if (include_timing)
    doc["timing_note"] = "wall-clock seconds on this machine; compare trends, not absolute values";
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json j{{"n", c.n},
                     {"predictor", c.predictor},
                     {"mean_risk", c.mean_risk},
                     {"risk_db", c.risk_db},
                     {"risks", c.risks},
                     {"hyperparameters", finite_or_null(c.hyperparameters)}};
    if (config.id == "table2") {
      j["mean_length"] = finite_or_null(c.mean_length);
      j["mean_coverage"] = c.mean_coverage;
      j["unbounded"] = c.unbounded;
      j["lengths"] = finite_or_null(c.lengths);
      j["coverages"] = c.coverages;
    }
    if (include_timing) {
      j["mean_seconds"] = c.mean_seconds;
      j["seconds"] = c.seconds;
    }
    list.push_back(std::move(j));
  }
  doc["cells"] = std::move(list);
  return doc;
}

std::string ExperimentReport::results_csv() const {
  std::ostringstream out;
  out << "experiment,n,predictor,replications,risk_db,mean_risk,mean_length,mean_coverage,unbounded,mean_seconds\n";
  for (const auto& c : cells) {
    out << config.id << ',' << c.n << ',' << c.predictor << ',' << config.replications << ','
        << csv::format_double(c.risk_db) << ',' << csv::format_double(c.mean_risk) << ','
        << csv::format_double(c.mean_length) << ',' << csv::format_double(c.mean_coverage) << ','
        << c.unbounded << ',' << csv::format_double(c.mean_seconds) << '\n';
  }
  return out.str();
}

std::string ExperimentReport::table_text() const {
  std::ostringstream out;
  const char* n_label = config.id == "table2" ? "n'" : "n";
  if (config.id == "table1") {
    out << "Risk normalized by noise level [dB]\n";
  } else if (config.id == "table2") {
    out << "Average interval length with target coverage " << std::fixed << std::setprecision(2)
        << config.kappa_cov << " (average coverage in parentheses)\n";
  } else {
    out << "Average fit wall time [s] (this machine; absolute values are not comparable across hardware)\n";
  }
  out << std::setw(6) << n_label;
  for (const auto& p : config.predictors) out << " | " << std::setw(14) << display_name(p);
  out << '\n' << std::string(6 + 17 * config.predictors.size(), '-') << '\n';
  for (Index n : config.n_grid) {
    out << std::setw(6) << n;
    for (const auto& p : config.predictors) {
      const CellResult& c = cell(n, p);
      std::ostringstream v;
      v << std::fixed;
      if (config.id == "table1") {
        v << std::setprecision(2) << c.risk_db;
      } else if (config.id == "table2") {
        if (std::isfinite(c.mean_length))
          v << std::setprecision(2) << c.mean_length;
        else
          v << "inf";
        v << " (" << std::setprecision(2) << c.mean_coverage << ")";
      } else {
        v << std::setprecision(4) << c.mean_seconds;
      }
      out << " | " << std::setw(14) << v.str();
    }
    out << '\n';
  }
  out << "replications: " << config.replications << ", seed: " << config.seed
      << ", L: " << config.cycles << ", K: " << config.folds
      << ", nu: " << config.generator.nu << '\n';
  return out.str();
}

std::string ExperimentReport::residual_svg() const {
  const double width = 640, height = 400, left = 60, right = 20, top = 30, bottom = 50;
  const int bins = 40;
  std::vector<double> all;
  for (const auto& [name, r] : residuals) all.insert(all.end(), r.begin(), r.end());

  std::ostringstream svg;
  svg << std::setprecision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\">Out-of-sample residuals, n = "
      << (config.n_grid.empty() ? 0 : config.n_grid.back()) << "</text>\n";
  if (all.empty()) {
    svg << "</svg>\n";
    return svg.str();
  }
  std::sort(all.begin(), all.end());
  const auto pick = [&](double q) { return all[static_cast<std::size_t>(q * static_cast<double>(all.size() - 1))]; };
  double lo = pick(0.005), hi = pick(0.995);
  const double bound = std::max(std::abs(lo), std::abs(hi));
  lo = -bound;
  hi = bound > 0.0 ? bound : 1.0;
  const double bin_width = (hi - lo) / bins;

  std::map<std::string, std::vector<double>> density;
  double peak = 0.0;
  for (const auto& [name, r] : residuals) {
    std::vector<double> counts(bins, 0.0);
    for (double x : r) {
      const int b = static_cast<int>(std::floor((x - lo) / bin_width));
      if (b >= 0 && b < bins) counts[static_cast<std::size_t>(b)] += 1.0;
    }
    for (double& c : counts) c /= static_cast<double>(r.size()) * bin_width;
    peak = std::max(peak, *std::max_element(counts.begin(), counts.end()));
    density[name] = std::move(counts);
  }
  if (peak <= 0.0) peak = 1.0;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  auto px = [&](double x) { return left + (x - lo) / (hi - lo) * plot_w; };
  auto py = [&](double d) { return top + plot_h - d / peak * plot_h; };

  svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
      << top + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double x = lo + (hi - lo) * t / 4.0;
    svg << "<text x=\"" << px(x) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">"
        << std::fixed << std::setprecision(1) << x << std::defaultfloat << std::setprecision(6) << "</text>\n";
  }
  svg << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\">residual y - y_hat</text>\n";
  svg << "<text x=\"15\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 15 " << top + plot_h / 2
      << ")\" text-anchor=\"middle\">density</text>\n";

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  int index = 0;
  for (const auto& [name, counts] : density) {
    const char* color = colors[index % 4];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (int b = 0; b < bins; ++b) {
      const double x0 = lo + b * bin_width, x1 = x0 + bin_width;
      const double y = py(counts[static_cast<std::size_t>(b)]);
      svg << px(x0) << ',' << y << ' ' << px(x1) << ',' << y << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << left + plot_w - 80 << "\" y=\"" << top + 15 + 15 * index << "\" fill=\"" << color
        << "\">" << display_name(name) << "</text>\n";
    ++index;
  }
  svg << "</svg>\n";
  return svg.str();
}

void ExperimentReport::write(const std::string& directory) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw DataError("cannot create report directory '" + directory + "': " + ec.message());
  auto put = [&](const std::string& name, const std::string& content) {
    std::ofstream out(fs::path(directory) / name);
    if (!out) throw DataError("cannot write " + (fs::path(directory) / name).string());
    out << content;
  };
  put("report.json", to_json().dump(2) + "\n");
  put("results.csv", results_csv());
  put("table.txt", table_text());
  put("residuals.svg", residual_svg());
}

}  // namespace spice::experiment

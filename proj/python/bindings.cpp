#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spice/baselines.hpp"
#include "spice/conformal.hpp"
#include "spice/datagen.hpp"
#include "spice/experiment.hpp"
#include "spice/features.hpp"
#include "spice/model_io.hpp"
#include "spice/spice.hpp"
#include "spice/stats.hpp"
#include "spice/verify.hpp"

namespace py = pybind11;
using namespace spice;

namespace {

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online SPICE regression";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<FeatureMap>(m, "FeatureMap")
      .def_static("linear", [](int d, const std::string& mean) { return FeatureMap::linear(d, parse_mean_kind(mean)); },
                  py::arg("d"), py::arg("mean") = "constant")
      .def_static("laplace_tensor",
                  [](std::vector<double> half_widths, int m, const std::string& mean) {
                    return FeatureMap::laplace_tensor(std::move(half_widths), m, parse_mean_kind(mean));
                  },
                  py::arg("half_widths"), py::arg("m"), py::arg("mean") = "constant")
      .def_static("laplace_additive",
                  [](std::vector<double> half_widths, int m, const std::string& mean) {
                    return FeatureMap::laplace_additive(std::move(half_widths), m, parse_mean_kind(mean));
                  },
                  py::arg("half_widths"), py::arg("m"), py::arg("mean") = "constant")
      .def_property_readonly("dim", &FeatureMap::dim)
      .def_property_readonly("mean_width", &FeatureMap::mean_width)
      .def_property_readonly("basis_width", &FeatureMap::basis_width)
      .def("evaluate", [](const FeatureMap& f, const Vector& x) { return f.evaluate(as_span(x)); })
      .def("design_matrix", &FeatureMap::design_matrix);

  py::class_<SufficientStats>(m, "SufficientStats")
      .def(py::init<Index>(), py::arg("p"))
      .def_static("from_batch", &SufficientStats::from_batch)
      .def("ingest", [](SufficientStats& s, const Vector& phi, double y) { s.ingest(phi, y); })
      .def_property_readonly("gamma", &SufficientStats::gamma)
      .def_property_readonly("rho", &SufficientStats::rho)
      .def_property_readonly("y_energy", &SufficientStats::y_energy)
      .def_property_readonly("count", &SufficientStats::count);

  py::class_<SpiceModel>(m, "SpiceModel")
      .def(py::init([](const FeatureMap& f, int cycles, double inflation) {
             SpiceOptions o;
             o.cycles = cycles;
             o.penalty_inflation = inflation;
             return SpiceModel(f, o);
           }),
           py::arg("features"), py::arg("cycles") = 3, py::arg("penalty_inflation") = 1.0)
      .def("step", [](SpiceModel& s, const Vector& x, double y) { s.step(as_span(x), y); })
      .def("fit",
           [](SpiceModel& s, const Matrix& X, const Vector& y) {
             if (X.rows() != y.size()) throw DataError("X and y differ in rows");
             Vector row(X.cols());
             for (Index i = 0; i < X.rows(); ++i) {
               row = X.row(i).transpose();
               s.step(as_span(row), y[i]);
             }
           })
      .def("predict", [](const SpiceModel& s, const Vector& x) { return s.predict(as_span(x)); })
      .def("fit_to_convergence", &SpiceModel::fit_to_convergence, py::arg("tol") = 1e-10,
           py::arg("max_cycles") = 100000)
      .def("objective", &SpiceModel::objective)
      .def_property_readonly("weights", &SpiceModel::weights)
      .def_property_readonly("stats", &SpiceModel::stats)
      .def("to_json", [](const SpiceModel& s) { return model_to_json(s).dump(); })
      .def_static("from_json", [](const std::string& text) {
        try {
          return model_from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::exception& e) {
          throw DataError(e.what());
        }
      });

  m.def("objective", &spice::objective, py::arg("stats"), py::arg("w"), py::arg("u"),
        py::arg("penalty_inflation") = 1.0);
  m.def("ridge_fit", py::overload_cast<const Matrix&, const Vector&, double, Index>(&baselines::ridge_fit),
        py::arg("Phi"), py::arg("y"), py::arg("penalty"), py::arg("u"));
  m.def("lasso_fit",
        [](const Matrix& Phi, const Vector& y, double theta, Index u) { return baselines::lasso_fit(Phi, y, theta, u); },
        py::arg("Phi"), py::arg("y"), py::arg("theta"), py::arg("u"));

  m.def("split_indices", [](Index n, std::uint64_t seed) {
    auto s = conformal::split_indices(n, seed);
    return py::make_tuple(s.train, s.calibration);
  });
  m.def("conformal_rank", &conformal::conformal_rank);
  m.def("calibrate",
        [](std::vector<double> residuals, double kappa) {
          auto c = conformal::ConformalCalibrator::calibrate(std::move(residuals), kappa);
          return py::make_tuple(c.rank(), c.bounded(), c.bounded() ? c.half_width() : INFINITY);
        },
        "Returns (k, bounded, half_width).");

  m.def("best_subset_support",
        [](const Matrix& X, const Vector& y, Index k) {
          auto r = verify::best_subset(X, y, k);
          return py::make_tuple(r.support, r.w_star, r.R_star, r.eps_star);
        },
        "Returns (support, w_star, R_star, eps_star).");
  m.def("divergence", &verify::divergence);
  m.def("reference_spice",
        [](const Matrix& X, const Vector& y, Index u) { return verify::reference_spice(X, y, u).w; },
        py::arg("X"), py::arg("y"), py::arg("u") = 0);

  m.def("sample_sparse_student_t",
        [](Index n, std::uint64_t seed, int d, double nu, std::uint64_t mixing_seed) {
          datagen::SparseStudentTConfig c;
          c.d = d;
          c.nu = nu;
          c.seed = mixing_seed;
          auto data = datagen::SparseStudentTGenerator(c).sample(n, seed);
          return py::make_tuple(data.X, data.y);
        },
        py::arg("n"), py::arg("seed"), py::arg("d") = 100, py::arg("nu") = 3.0, py::arg("mixing_seed") = 0);

  m.def("run_experiment",
        [](const std::string& config_json) {
          auto config = experiment::ExperimentConfig::from_json(nlohmann::json::parse(config_json));
          return experiment::run_experiment(config).to_json().dump();
        },
        "Runs an experiment from a JSON config string and returns the JSON report.");
}

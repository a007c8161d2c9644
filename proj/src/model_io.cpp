#include "spice/model_io.hpp"

#include <fstream>
#include <vector>

namespace spice {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

nlohmann::json model_to_json(const SpiceModel& model) {
  const SufficientStats& stats = model.stats();
  const SpiceState& state = model.state();
  const Index p = stats.dim();

  std::vector<double> gamma;
  gamma.reserve(static_cast<std::size_t>(p * p));
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) gamma.push_back(stats.gamma()(i, j));

  nlohmann::json doc;
  doc["version"] = kModelFormatVersion;
  doc["feature_map"] = model.features().to_json();
  doc["n"] = stats.count();
  doc["kappa"] = stats.y_energy();
  doc["gamma"] = std::move(gamma);
  doc["rho"] = to_std(stats.rho());
  doc["w"] = to_std(state.w);
  doc["u"] = state.u;
  doc["L"] = model.options().cycles;
  doc["xi"] = state.xi;
  doc["zeta"] = to_std(state.zeta);
  doc["update_count"] = state.update_count;
  doc["refresh_interval"] = model.options().refresh_interval;
  doc["recompute_each_sample"] = model.options().recompute_each_sample;
  doc["penalty_inflation"] = model.options().penalty_inflation;
  return doc;
}

SpiceModel model_from_json(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) throw DataError("model file is not a JSON object");
    if (!doc.contains("version")) throw DataError("model file has no version field");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw DataError("unsupported model version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kModelFormatVersion) + ")");

    FeatureMap features = FeatureMap::from_json(doc.at("feature_map"));
    const Index p = features.dim();

    SpiceOptions options;
    options.cycles = doc.at("L").get<int>();
    options.refresh_interval = doc.value("refresh_interval", options.refresh_interval);
    options.recompute_each_sample = doc.value("recompute_each_sample", options.recompute_each_sample);
    options.penalty_inflation = doc.value("penalty_inflation", options.penalty_inflation);

    const auto gamma_flat = doc.at("gamma").get<std::vector<double>>();
    if (static_cast<Index>(gamma_flat.size()) != p * p)
      throw DataError("model gamma has " + std::to_string(gamma_flat.size()) +
                      " entries, expected p^2 = " + std::to_string(p * p));
    Matrix gamma(p, p);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j) gamma(i, j) = gamma_flat[static_cast<std::size_t>(i * p + j)];

    SufficientStats stats(std::move(gamma), to_eigen(doc.at("rho").get<std::vector<double>>()),
                          doc.at("kappa").get<double>(), doc.at("n").get<std::int64_t>());

    SpiceState state;
    state.w = to_eigen(doc.at("w").get<std::vector<double>>());
    state.u = doc.at("u").get<Index>();
    state.update_count = doc.value("update_count", stats.count());
    if (doc.contains("zeta") && doc.contains("xi")) {
      state.zeta = to_eigen(doc.at("zeta").get<std::vector<double>>());
      state.xi = doc.at("xi").get<double>();
    } else {
      state.zeta = Vector::Zero(state.w.size());
      if (stats.dim() == state.w.size()) refresh(state, stats);
    }
    return SpiceModel(std::move(features), options, std::move(stats), std::move(state));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const SpiceModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw DataError("failed writing model to '" + path + "'");
}

SpiceModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace spice

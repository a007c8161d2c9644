#pragma once

#include <string>

#include <json.hpp>

#include "spice/spice.hpp"

namespace spice {

inline constexpr int kModelFormatVersion = 1;

/// Model document:
///   {version, feature_map, n, kappa, gamma (row-major), rho, w, u, L,
///    xi, zeta, update_count, refresh_interval, recompute_each_sample,
///    penalty_inflation}
/// Doubles are written as shortest round-trip decimals, so a reloaded model
/// continues the stream bit-for-bit.
nlohmann::json model_to_json(const SpiceModel& model);
SpiceModel model_from_json(const nlohmann::json& doc);

void save_model(const SpiceModel& model, const std::string& path);
SpiceModel load_model(const std::string& path);

}  // namespace spice

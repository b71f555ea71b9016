#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "diracsea/bloch.hpp"
#include "diracsea/core.hpp"
#include "diracsea/evolution.hpp"
#include "diracsea/study.hpp"

namespace diracsea {

/// Parsed scenario document:
///   {"mode": {...}, "scale": {...}, "run": {...}, "tolerances": {...}}
/// Unknown keys are rejected at every level with ErrorKind::Validation.
struct ScenarioFile {
  Mode mode{1.5, 1.0, kPi / 2};
  ScaleFunction scale = dust_scale(1.0);
  /// Set when the scale was given as rotation segments (tau0 = 0).
  std::optional<Scenario> scenario;
  nlohmann::json scale_spec = nlohmann::json::object();
  nlohmann::json run = nlohmann::json::object();
  Tolerances tol;
};

ScenarioFile parse_scenario(const nlohmann::json& doc);
ScenarioFile load_scenario(const std::string& path);

/// Checks a JSON object against the allowed key set.
void require_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const char* where);

/// Tolerance ranges: ode_tol in (1e-14, 1e-4), quad_tol in (0, 1e-2], gap_tol in (0, 1).
void validate_tolerances(const Tolerances& tol);

/// Reads a spinor given as [x, y] (real) or [[re, im], [re, im]].
Spinor parse_spinor(const nlohmann::json& j);

/// {"support": [a, b], "direction": spinor, "amplitude": A}
PhiSpec parse_phi(const nlohmann::json& j);

/// Rebuilds the scale of `file` with a different R_max (smooth profiles only).
ScaleFunction rescaled(const ScenarioFile& file, double r_max);

/// Builds a study configuration from the "run" object of a study scenario.
StudyConfig parse_study(const ScenarioFile& file);

}  // namespace diracsea

#include "diracsea/scenario_io.hpp"

#include <fstream>
#include <sstream>

namespace diracsea {

using nlohmann::json;

namespace {

const json& at(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key)) fail(ErrorKind::Validation, std::string(where) + ": missing key '" + key + "'");
  return obj.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) fail(ErrorKind::Validation, std::string(what) + " must be a number");
  return j.get<double>();
}

double number_or(const json& obj, const char* key, double fallback) {
  return obj.contains(key) ? number(obj.at(key), key) : fallback;
}

std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) fail(ErrorKind::Validation, std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number(x, what));
  return out;
}

void require_object(const json& j, const char* where) {
  if (!j.is_object()) fail(ErrorKind::Validation, std::string(where) + " must be an object");
}

Scenario parse_segments(const json& scale, double lambda, double mass) {
  if (scale.contains("preset")) {
    const std::string preset = scale.at("preset").get<std::string>();
    Scenario sc = preset == "six_segment"      ? build_six_segment(lambda, mass)
                  : preset == "twelve_segment" ? build_twelve_segment(lambda, mass)
                                               : (fail(ErrorKind::Validation, "unknown preset '" + preset + "'"),
                                                  build_six_segment(lambda, mass));
    if (scale.contains("perturb")) {
      const json& p = scale.at("perturb");
      require_object(p, "scale.perturb");
      require_keys(p, {"segment", "dp"}, "scale.perturb");
      const auto seg = at(p, "segment", "scale.perturb").get<long>();
      if (seg < 0 || static_cast<std::size_t>(seg) >= sc.segments().size())
        fail(ErrorKind::Validation, "scale.perturb.segment out of range");
      sc = sc.perturbed(static_cast<std::size_t>(seg), number(at(p, "dp", "scale.perturb"), "dp"));
    }
    return sc;
  }
  std::vector<Segment> segs;
  const json& arr = at(scale, "segments", "scale");
  if (!arr.is_array()) fail(ErrorKind::Validation, "scale.segments must be an array");
  for (const auto& s : arr) {
    require_object(s, "segment");
    require_keys(s, {"r", "p"}, "segment");
    segs.push_back({number(at(s, "r", "segment"), "r"), number(at(s, "p", "segment"), "p")});
  }
  return Scenario(lambda, mass, segs);
}

ScaleFunction smooth_scale(const json& scale, double r_max) {
  const std::string kind = scale.at("kind").get<std::string>();
  if (kind == "dust") return dust_scale(r_max);
  return table_scale(numbers(at(scale, "taus", "scale"), "taus"), numbers(at(scale, "g", "scale"), "g"), r_max);
}

}  // namespace

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(ErrorKind::Validation, std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

void validate_tolerances(const Tolerances& tol) {
  if (!(tol.ode_tol > 1e-14 && tol.ode_tol < 1e-4)) fail(ErrorKind::Validation, "ode_tol must lie in (1e-14, 1e-4)");
  if (!(tol.quad_tol > 0.0 && tol.quad_tol <= 1e-2)) fail(ErrorKind::Validation, "quad_tol must lie in (0, 1e-2]");
  if (!(tol.gap_tol > 0.0 && tol.gap_tol < 1.0)) fail(ErrorKind::Validation, "gap_tol must lie in (0, 1)");
}

Spinor parse_spinor(const json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorKind::Validation, "a spinor is a two-element array");
  Spinor out;
  for (int i = 0; i < 2; ++i) {
    const json& c = j[i];
    if (c.is_number()) {
      out[i] = c.get<double>();
    } else if (c.is_array() && c.size() == 2) {
      out[i] = Complex(number(c[0], "spinor entry"), number(c[1], "spinor entry"));
    } else {
      fail(ErrorKind::Validation, "spinor entries are numbers or [re, im] pairs");
    }
  }
  return out;
}

PhiSpec parse_phi(const json& j) {
  require_object(j, "phi");
  require_keys(j, {"support", "direction", "amplitude"}, "phi");
  PhiSpec phi;
  if (j.contains("support")) {
    const auto s = numbers(j.at("support"), "phi.support");
    if (s.size() != 2) fail(ErrorKind::Validation, "phi.support must be [a, b]");
    phi.a = s[0];
    phi.b = s[1];
  }
  if (j.contains("direction")) phi.direction = parse_spinor(j.at("direction"));
  phi.amplitude = number_or(j, "amplitude", 1.0);
  return phi;
}

ScenarioFile parse_scenario(const json& doc) {
  require_object(doc, "scenario");
  require_keys(doc, {"mode", "scale", "run", "tolerances"}, "scenario");
  ScenarioFile out;

  const json& mode = at(doc, "mode", "scenario");
  require_object(mode, "mode");
  require_keys(mode, {"lambda", "mass", "tau0", "physical"}, "mode");
  const double lambda = number(at(mode, "lambda", "mode"), "lambda");
  const double mass = number(at(mode, "mass", "mode"), "mass");
  const bool physical = mode.contains("physical") ? mode.at("physical").get<bool>() : true;

  const json& scale = at(doc, "scale", "scenario");
  require_object(scale, "scale");
  const std::string kind = at(scale, "kind", "scale").get<std::string>();
  out.scale_spec = scale;
  try {
    if (kind == "dust") {
      require_keys(scale, {"kind", "r_max"}, "scale");
      out.scale = dust_scale(number(at(scale, "r_max", "scale"), "r_max"));
    } else if (kind == "smooth_table") {
      require_keys(scale, {"kind", "r_max", "taus", "g"}, "scale");
      out.scale = smooth_scale(scale, number(at(scale, "r_max", "scale"), "r_max"));
    } else if (kind == "piecewise") {
      require_keys(scale, {"kind", "breakpoints", "values", "segments", "preset", "perturb"}, "scale");
      if (scale.contains("breakpoints")) {
        out.scale = ScaleFunction::piecewise(numbers(scale.at("breakpoints"), "breakpoints"),
                                             numbers(at(scale, "values", "scale"), "values"));
      } else {
        out.scenario = parse_segments(scale, lambda, mass);
        out.scale = out.scenario->scale();
      }
    } else {
      fail(ErrorKind::Validation, "scale.kind must be dust, smooth_table or piecewise");
    }
    const double tau0 = number_or(mode, "tau0", out.scale.is_smooth() ? kPi / 2 : 0.0);
    out.mode = Mode(lambda, mass, tau0, physical);
    if (out.scenario && tau0 != 0.0) fail(ErrorKind::Validation, "rotation-segment scenarios start at tau0 = 0");
    check_time(out.scale, tau0, "tau0");
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed scale: ") + e.what());
  }

  if (doc.contains("run")) {
    require_object(doc.at("run"), "run");
    out.run = doc.at("run");
  }
  if (doc.contains("tolerances")) {
    const json& t = doc.at("tolerances");
    require_object(t, "tolerances");
    require_keys(t, {"ode_tol", "quad_tol", "gap_tol"}, "tolerances");
    out.tol.ode_tol = number_or(t, "ode_tol", out.tol.ode_tol);
    out.tol.quad_tol = number_or(t, "quad_tol", out.tol.quad_tol);
    out.tol.gap_tol = number_or(t, "gap_tol", out.tol.gap_tol);
  }
  validate_tolerances(out.tol);
  return out;
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Validation, "cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

ScaleFunction rescaled(const ScenarioFile& file, double r_max) {
  if (!file.scale.is_smooth()) fail(ErrorKind::Validation, "studies need a smooth scale (dust or smooth_table)");
  return smooth_scale(file.scale_spec, r_max);
}

StudyConfig parse_study(const ScenarioFile& file) {
  const json& run = file.run;
  require_keys(run, {"kind", "grid", "vary", "lambda_policy", "k", "phi", "window", "slack"}, "run");
  StudyConfig cfg;
  try {
    cfg.kind = parse_study_kind(at(run, "kind", "run").get<std::string>());
    cfg.grid = numbers(at(run, "grid", "run"), "grid");
    const std::string vary = run.value("vary", std::string("r_max"));
    if (vary == "r_max") cfg.axis = StudyAxis::RMax;
    else if (vary == "mass") cfg.axis = StudyAxis::Mass;
    else fail(ErrorKind::Validation, "run.vary must be r_max or mass");
    cfg.lambda_policy = parse_lambda_policy(run.value("lambda_policy", std::string("fixed")));
    cfg.k = number_or(run, "k", cfg.k);
    if (run.contains("phi")) cfg.phi = parse_phi(run.at("phi"));
    if (run.contains("window")) {
      const auto w = numbers(run.at("window"), "window");
      if (w.size() != 2) fail(ErrorKind::Validation, "run.window must be [a, b]");
      cfg.window_a = w[0];
      cfg.window_b = w[1];
    }
    cfg.slack = number_or(run, "slack", cfg.slack);
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed study: ") + e.what());
  }
  cfg.mass = file.mode.mass();
  cfg.r_max = file.scale.r_max();
  cfg.lambda = file.mode.lambda();
  cfg.tau0 = file.mode.tau0();
  cfg.tol = file.tol;
  const ScenarioFile copy = file;
  cfg.scale = [copy](double r) { return rescaled(copy, r); };
  if (!file.scale.is_smooth()) fail(ErrorKind::Validation, "studies need a smooth scale (dust or smooth_table)");
  return cfg;
}

}  // namespace diracsea

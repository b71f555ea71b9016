// Command-line driver: evolve | signature | project | bloch | cfs | study.
//
// Exit codes: 0 ok, 1 validation, 2 numerical failure, 3 bound violation.
// Errors are reported as a JSON object on stderr.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "diracsea/bloch.hpp"
#include "diracsea/cfs.hpp"
#include "diracsea/projector.hpp"
#include "diracsea/scenario_io.hpp"
#include "diracsea/study.hpp"

using namespace diracsea;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitBound = 3;

struct Options {
  std::string scenario;
  std::string out;
  std::string format = "csv";
  double ode_tol = 0.0;
  double quad_tol = 0.0;
  double gap_tol = 0.0;
  int jobs = 1;
};

// Rows of a table emitted either as CSV or as a JSON array of objects.
class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<json> row) { rows_.push_back(std::move(row)); }

  std::string render(const std::string& format, const json& extra = json::object()) const {
    std::ostringstream os;
    if (format == "json") {
      json doc = extra;
      doc["rows"] = json::array();
      for (const auto& r : rows_) {
        json obj = json::object();
        for (std::size_t i = 0; i < columns_.size(); ++i) obj[columns_[i]] = r[i];
        doc["rows"].push_back(obj);
      }
      os << doc.dump(2) << '\n';
      return os.str();
    }
    os << std::setprecision(17);
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) os << ',';
        if (r[i].is_number_float()) os << r[i].get<double>();
        else if (r[i].is_string()) os << r[i].get<std::string>();
        else os << r[i].dump();
      }
      os << '\n';
    }
    return os.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<json>> rows_;
};

void emit(const Options& opt, const std::string& text) {
  if (opt.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(opt.out);
  if (!f) fail(ErrorKind::Validation, "cannot write '" + opt.out + "'");
  f << text;
}

ScenarioFile load(const Options& opt) {
  if (opt.scenario.empty()) fail(ErrorKind::Validation, "--scenario is required");
  ScenarioFile file = load_scenario(opt.scenario);
  if (opt.ode_tol > 0.0) file.tol.ode_tol = opt.ode_tol;
  if (opt.quad_tol > 0.0) file.tol.quad_tol = opt.quad_tol;
  if (opt.gap_tol > 0.0) file.tol.gap_tol = opt.gap_tol;
  validate_tolerances(file.tol);
  spdlog::debug("scenario {} loaded: lambda={} m={} tau0={}", opt.scenario, file.mode.lambda(), file.mode.mass(),
                file.mode.tau0());
  return file;
}

double run_number(const json& run, const char* key, double fallback) {
  if (!run.contains(key)) return fallback;
  if (!run.at(key).is_number()) fail(ErrorKind::Validation, std::string("run.") + key + " must be a number");
  return run.at(key).get<double>();
}

// ---------------------------------------------------------------------------

int cmd_evolve(const Options& opt) {
  const ScenarioFile file = load(opt);
  require_keys(file.run, {"tau_from", "tau_to", "samples"}, "run");
  const double from = run_number(file.run, "tau_from", file.mode.tau0());
  const double to = run_number(file.run, "tau_to", from);
  const int samples = from == to ? 0 : static_cast<int>(run_number(file.run, "samples", 10));
  if (samples < 0) fail(ErrorKind::Validation, "run.samples must be non-negative");

  Table t({"tau", "re_u11", "im_u11", "re_u12", "im_u12", "re_u21", "im_u21", "re_u22", "im_u22",
           "unitarity_defect"});
  Matrix2 u = Matrix2::Identity();
  double prev = from;
  check_time(file.scale, from, "tau_from");
  for (int i = 0; i <= samples; ++i) {
    const double tau = samples == 0 ? from : from + (to - from) * i / samples;
    u = evolve(file.mode, file.scale, prev, tau, file.tol.ode_tol).u.matrix() * u;
    prev = tau;
    std::vector<json> row{tau};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        row.emplace_back(u(r, c).real());
        row.emplace_back(u(r, c).imag());
      }
    row.emplace_back(unitarity_defect(u));
    t.add(row);
  }
  emit(opt, t.render(opt.format));
  return kExitOk;
}

int cmd_signature(const Options& opt) {
  const ScenarioFile file = load(opt);
  require_keys(file.run, {"wkb"}, "run");
  const bool wkb = file.run.value("wkb", false);
  const auto s = signature_operator(file.mode, file.scale, file.tol);
  const auto c = pauli::decompose(s.s.matrix());
  std::vector<std::string> cols{"mu_minus", "mu_plus", "s0", "s1", "s2", "s3", "quad_error_estimate",
                                "integral_bound"};
  std::vector<json> row{s.eigenvalues[0], s.eigenvalues[1], c[0].real(), c[1].real(),
                        c[2].real(),      c[3].real(),      s.quad_error_estimate, s.integral_bound};
  if (wkb) {
    const auto sw = signature_operator_wkb(file.mode, file.scale, file.tol);
    const auto cf = wkb_eigenvalues_closed_form(file.mode, file.scale);
    const auto lead = wkb_signature_leading_term(file.mode, file.scale).eigenvalues();
    for (const char* name : {"wkb_mu_minus", "wkb_mu_plus", "closed_form_mu_minus", "closed_form_mu_plus",
                             "leading_mu_plus", "norm_s_minus_s_wkb"})
      cols.emplace_back(name);
    for (double v : {sw.eigenvalues[0], sw.eigenvalues[1], cf[0], cf[1], lead[1],
                     spectral_norm(Matrix2(s.s.matrix() - sw.s.matrix()))})
      row.emplace_back(v);
  }
  Table t(cols);
  t.add(row);
  emit(opt, t.render(opt.format));
  return kExitOk;
}

int cmd_project(const Options& opt) {
  const ScenarioFile file = load(opt);
  require_keys(file.run, {"phi", "variant"}, "run");
  PhiSpec spec;
  if (file.run.contains("phi")) spec = parse_phi(file.run.at("phi"));
  if (!file.scale.is_smooth() && !file.run.contains("phi")) {
    // Default bump in the middle of the scenario.
    const double end = file.scale.end();
    spec.a = 0.4 * end;
    spec.b = 0.6 * end;
  }
  const TestFunction phi = bump(spec.a, spec.b, spec.direction, spec.amplitude, file.scale.end());
  const std::string variant = file.run.value("variant", std::string("exact"));
  ProjectorOutput out;
  if (variant == "exact") out = fermionic_projector_apply(file.mode, file.scale, phi, file.tol);
  else if (variant == "k_m") out = k_m_apply(file.mode, file.scale, phi, file.tol.ode_tol);
  else if (variant == "wkb_full") out = p_wkb_apply(file.mode, file.scale, phi, file.tol, WkbVariant::Full);
  else if (variant == "wkb_leading")
    out = p_wkb_apply(file.mode, file.scale, phi, file.tol, WkbVariant::LeadingOrder);
  else fail(ErrorKind::Validation, "run.variant must be exact, k_m, wkb_full or wkb_leading");

  Table t({"provenance", "re_0", "im_0", "re_1", "im_1", "norm", "phi_l1_norm"});
  t.add({provenance_name(out.provenance), out.value[0].real(), out.value[0].imag(), out.value[1].real(),
         out.value[1].imag(), out.value.norm(), phi.l1_norm()});
  emit(opt, t.render(opt.format));
  return kExitOk;
}

int cmd_bloch(const Options& opt) {
  const ScenarioFile file = load(opt);
  require_keys(file.run, {"samples_per_segment", "samples"}, "run");
  std::vector<VRow> rows;
  double r_max = file.scale.r_max();
  if (file.scenario) {
    const int per = static_cast<int>(run_number(file.run, "samples_per_segment", 50));
    rows = v_components(*file.scenario, scenario_grid(*file.scenario, per));
    r_max = file.scenario->r_max();
  } else if (file.scale.is_smooth()) {
    const int n = static_cast<int>(run_number(file.run, "samples", 200));
    if (n < 1) fail(ErrorKind::Validation, "run.samples must be positive");
    std::vector<double> grid;
    const double lo = 0.05, hi = kPi - 0.05;
    for (int i = 0; i <= n; ++i) grid.push_back(lo + (hi - lo) * i / n);
    rows = v_components(file.mode, file.scale, grid, file.tol.ode_tol);
  } else {
    fail(ErrorKind::Validation, "bloch needs rotation segments or a smooth scale");
  }
  Table t({"tau", "v1", "v2", "v3", "cum_int_v1R", "cum_int_v2R", "cum_int_v3R"});
  for (const auto& r : rows)
    t.add({r.tau, r.v.x(), r.v.y(), r.v.z(), r.cum_int_vr.x(), r.cum_int_vr.y(), r.cum_int_vr.z()});
  const auto& last = rows.back().cum_int_vr;
  spdlog::info("final cumulative integrals ({}, {}, {}), R_max = {}", last.x(), last.y(), last.z(), r_max);
  emit(opt, t.render(opt.format, json{{"r_max", r_max}}));
  return kExitOk;
}

int cmd_cfs(const Options& opt) {
  const ScenarioFile file = load(opt);
  require_keys(file.run, {"lambdas", "samples", "window", "tol"}, "run");
  std::vector<Mode> modes;
  if (file.run.contains("lambdas")) {
    for (const auto& l : file.run.at("lambdas")) {
      if (!l.is_number()) fail(ErrorKind::Validation, "run.lambdas must hold numbers");
      modes.push_back(file.mode.with_lambda(l.get<double>()));
    }
  } else {
    modes.push_back(file.mode);
  }
  const int n = static_cast<int>(run_number(file.run, "samples", 8));
  if (n < 1) fail(ErrorKind::Validation, "run.samples must be positive");
  double lo = file.scale.is_smooth() ? 0.3 : 0.0;
  double hi = file.scale.is_smooth() ? kPi - 0.3 : file.scale.end();
  if (file.run.contains("window")) {
    const auto& w = file.run.at("window");
    if (!w.is_array() || w.size() != 2) fail(ErrorKind::Validation, "run.window must be [a, b]");
    lo = w[0].get<double>();
    hi = w[1].get<double>();
  }
  const double tol = run_number(file.run, "tol", 1e-8);
  const auto family = SolutionFamily::full_negative(modes, file.scale, file.tol);
  std::vector<CorrelationOperator> fs;
  std::vector<double> taus;
  for (int i = 0; i <= n; ++i) {
    taus.push_back(lo + (hi - lo) * i / n);
    fs.push_back(local_correlation(family, taus.back()));
  }
  Table t({"tau_x", "tau_y", "class"});
  for (std::size_t i = 0; i < taus.size(); ++i)
    for (std::size_t j = 0; j < taus.size(); ++j)
      t.add({taus[i], taus[j], causal_class_name(causal_classify(fs[i], fs[j], tol))});
  emit(opt, t.render(opt.format));
  return kExitOk;
}

int cmd_study(const Options& opt) {
  const ScenarioFile file = load(opt);
  StudyConfig cfg = parse_study(file);
  cfg.jobs = opt.jobs;
  const StudyResult res = run_study(cfg);
  Table t({"m_rmax", "lambda", "measured", "envelope", "pass"});
  for (const auto& r : res.records) t.add({r.m_rmax, r.lambda, r.measured, r.envelope, r.pass});
  const json summary{{"kind", study_kind_name(cfg.kind)},
                     {"fitted_c", res.fitted_c},
                     {"slope", res.slope},
                     {"slack", cfg.slack},
                     {"all_pass", res.all_pass}};
  emit(opt, t.render(opt.format, summary));
  spdlog::info("study {}: c = {}, slope = {}, all_pass = {}", study_kind_name(cfg.kind), res.fitted_c, res.slope,
               res.all_pass);
  if (!res.all_pass) {
    for (const auto& r : res.records) {
      if (r.pass) continue;
      json err{{"error",
                {{"kind", "bound_violation"},
                 {"message", "measured value exceeds the fitted envelope"},
                 {"m_rmax", r.m_rmax},
                 {"lambda", r.lambda},
                 {"measured", r.measured},
                 {"envelope", r.envelope}}}};
      std::cerr << err.dump() << '\n';
      break;
    }
    return kExitBound;
  }
  return kExitOk;
}

int report(ErrorKind kind, const std::string& message, json extra = json::object()) {
  json err{{"kind", error_kind_name(kind)}, {"message", message}};
  for (auto it = extra.begin(); it != extra.end(); ++it) err[it.key()] = it.value();
  std::cerr << json{{"error", err}}.dump() << '\n';
  return is_validation_kind(kind) ? kExitValidation : kExitNumerical;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("diracsea");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("DIRACSEA_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Mode-by-mode fermionic projector of a Dirac field in a closed FRW universe"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", opt.scenario, "Scenario JSON file")->required();
    sub->add_option("--out", opt.out, "Output file (stdout if omitted)");
    sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--ode-tol", opt.ode_tol, "Override the stepper tolerance");
    sub->add_option("--quad-tol", opt.quad_tol, "Override the quadrature tolerance");
    sub->add_option("--gap-tol", opt.gap_tol, "Override the spectral gap tolerance");
    sub->add_option("--jobs", opt.jobs, "Worker threads for studies")->check(CLI::PositiveNumber);
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"evolve", "Tabulate the exact evolution U(tau, tau_from)", cmd_evolve},
      {"signature", "Signature operator and its WKB counterpart", cmd_signature},
      {"project", "Apply P, P_WKB or k_m to a bump", cmd_project},
      {"bloch", "v_alpha(tau) and cumulative integrals of v_alpha R", cmd_bloch},
      {"cfs", "Causal classification grid of a finite family", cmd_cfs},
      {"study", "Fit and check a scaling envelope over a grid", cmd_study},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    for (const auto& [sub, cmd] : subs)
      if (sub->parsed()) return cmd->run(opt);
  } catch (const DegenerateSignature& e) {
    return report(e.kind(), e.what(),
                  json{{"mu_minus", e.mu_minus()}, {"mu_plus", e.mu_plus()}, {"threshold", e.threshold()}});
  } catch (const Error& e) {
    return report(e.kind(), e.what());
  } catch (const json::exception& e) {
    return report(ErrorKind::Validation, e.what());
  } catch (const std::exception& e) {
    return report(ErrorKind::IntegrationFailure, e.what());
  }
  return kExitValidation;
}

#include "doctest.h"

#include "diracsea/scenario_io.hpp"
#include "diracsea/study.hpp"

using namespace diracsea;
using nlohmann::json;

namespace {

json dust_doc() {
  return json::parse(R"({"mode": {"lambda": 1.5, "mass": 1.0}, "scale": {"kind": "dust", "r_max": 10.0}})");
}

ErrorKind kind_of(const json& doc) {
  try {
    parse_scenario(doc);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected the document to be rejected");
  return ErrorKind::Validation;
}

}  // namespace

TEST_CASE("dust scenario defaults") {
  const auto f = parse_scenario(dust_doc());
  CHECK(f.mode.lambda() == 1.5);
  CHECK(f.mode.tau0() == doctest::Approx(kPi / 2));
  CHECK(f.scale.r_max() == 10.0);
  CHECK(!f.scenario.has_value());
  CHECK(f.tol.ode_tol == 1e-10);
}

TEST_CASE("piecewise forms") {
  auto doc = dust_doc();
  doc["scale"] = json::parse(R"({"kind": "piecewise", "preset": "six_segment"})");
  const auto six = parse_scenario(doc);
  REQUIRE(six.scenario.has_value());
  CHECK(six.mode.tau0() == 0.0);
  CHECK(six.scenario->segments().size() == 6);

  doc["scale"] = json::parse(R"({"kind": "piecewise", "preset": "twelve_segment", "perturb": {"segment": 0, "dp": 0.01}})");
  const auto pert = parse_scenario(doc);
  CHECK(pert.scenario->segments()[0].p == doctest::Approx(build_twelve_segment().segments()[0].p + 0.01));

  doc["scale"] = json::parse(R"({"kind": "piecewise", "segments": [{"r": 2.0, "p": 0.5}, {"r": 1.0, "p": 1.5}]})");
  const auto segs = parse_scenario(doc);
  CHECK(segs.scenario->total_duration() == doctest::Approx(kPi * 0.5 / 2.5 + kPi * 1.5 / std::hypot(1.5, 1.0)));

  doc["scale"] = json::parse(R"({"kind": "piecewise", "breakpoints": [0.0, 1.0, 2.0], "values": [1.0, 3.0]})");
  doc["mode"]["tau0"] = 0.5;
  const auto bp = parse_scenario(doc);
  CHECK(!bp.scenario.has_value());
  CHECK(bp.scale(1.5) == 3.0);
  CHECK(bp.mode.tau0() == 0.5);
}

TEST_CASE("unknown keys and bad values are rejected") {
  auto doc = dust_doc();
  doc["extra"] = 1;
  CHECK(kind_of(doc) == ErrorKind::Validation);

  doc = dust_doc();
  doc["mode"]["spin"] = 0.5;
  CHECK(kind_of(doc) == ErrorKind::Validation);

  doc = dust_doc();
  doc["scale"]["kind"] = "radiation";
  CHECK(is_validation_kind(kind_of(doc)));

  doc = dust_doc();
  doc["mode"]["lambda"] = 2.0;
  CHECK(is_validation_kind(kind_of(doc)));

  doc = dust_doc();
  doc["mode"].erase("mass");
  CHECK(is_validation_kind(kind_of(doc)));

  doc = dust_doc();
  doc["scale"]["r_max"] = "ten";
  CHECK(is_validation_kind(kind_of(doc)));

  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST_CASE("tolerance ranges") {
  auto doc = dust_doc();
  for (const auto& [key, value] : std::vector<std::pair<std::string, double>>{
           {"ode_tol", 1e-3}, {"ode_tol", 1e-15}, {"quad_tol", 0.0}, {"quad_tol", 0.1}, {"gap_tol", 1.0}, {"gap_tol", 0.0}}) {
    doc["tolerances"] = json{{key, value}};
    CHECK(is_validation_kind(kind_of(doc)));
  }
  doc["tolerances"] = json{{"ode_tol", 1e-8}, {"gap_tol", 1e-4}};
  const auto f = parse_scenario(doc);
  CHECK(f.tol.ode_tol == 1e-8);
  CHECK(f.tol.gap_tol == 1e-4);
  CHECK_NOTHROW(validate_tolerances(Tolerances{}));
}

TEST_CASE("spinor and test function parsing") {
  CHECK((parse_spinor(json::parse("[1, 2]")) - Spinor(1.0, 2.0)).norm() == 0.0);
  CHECK((parse_spinor(json::parse("[[0, 1], [2, -1]]")) - Spinor(Complex(0, 1), Complex(2, -1))).norm() == 0.0);
  CHECK_THROWS_AS(parse_spinor(json::parse("[1, 2, 3]")), Error);
  const auto phi = parse_phi(json::parse(R"({"support": [0.5, 1.5], "amplitude": 2.0})"));
  CHECK(phi.a == 0.5);
  CHECK(phi.b == 1.5);
  CHECK(phi.amplitude == 2.0);
  CHECK_THROWS_AS(parse_phi(json::parse(R"({"centre": 1.0})")), Error);
}

TEST_CASE("study configuration") {
  auto doc = dust_doc();
  doc["run"] = json::parse(R"({"kind": "s_wkb_bound", "grid": [10, 20, 40], "lambda_policy": "ratio", "k": 0.2})");
  const auto f = parse_scenario(doc);
  const auto cfg = parse_study(f);
  CHECK(cfg.kind == StudyKind::SWkbBound);
  CHECK(cfg.grid.size() == 3);
  CHECK(cfg.lambda_policy == LambdaPolicy::Ratio);
  CHECK(study_lambda(cfg, 20.0) == 4.5);  // ties round up
  CHECK(cfg.scale(7.0).r_max() == 7.0);

  StudyConfig above = cfg;
  above.lambda_policy = LambdaPolicy::AboveFourFifths;
  // ceil(32^{4/5}) = 16, rounded up to the next half-integer
  CHECK(study_lambda(above, 32.0) == 16.5);
  CHECK(study_lambda(above, 50.0) >= std::pow(50.0, 0.8));

  doc["run"]["vary"] = "volume";
  CHECK_THROWS_AS(parse_study(parse_scenario(doc)), Error);
  doc["run"].erase("vary");
  doc["run"]["bogus"] = true;
  CHECK_THROWS_AS(parse_study(parse_scenario(doc)), Error);
  CHECK_THROWS_AS(parse_study_kind("nope"), Error);
  CHECK(std::string(study_kind_name(StudyKind::LeadingOrder)) == "leading_order");
}

TEST_CASE("log-log slope") {
  std::vector<double> x{1.0, 2.0, 4.0, 8.0}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.2));
  CHECK(loglog_slope(x, y) == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("small s_wkb study passes") {
  StudyConfig cfg;
  cfg.kind = StudyKind::SWkbBound;
  cfg.grid = {10.0, 20.0};
  const auto res = run_study(cfg);
  REQUIRE(res.records.size() == 2);
  CHECK(res.fitted_c > 0.0);
  CHECK(res.records[0].pass);
  CHECK(res.all_pass);
}

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "diracsea/core.hpp"
#include "diracsea/evolution.hpp"

namespace diracsea {

enum class StudyKind {
  SWkbBound,         ///< ||S - S_WKB|| against m^{-1/5} R_max^{4/5}
  PWkbBound,         ///< ||(P - P_WKB)(phi)|| against (m R_max)^{-1/5} R_max ||phi||_1
  LeadingTermBound,  ///< ||S_WKB - leading term|| against 1/m
  WDeviation,        ///< sup ||W - 1|| over a window against (m R_max)^{-1/5}
  LeadingOrder,      ///< ||Full - LeadingOrder|| / ||Full|| against sqrt(lambda^2 + m^2 R^2) / (m R)^2
};

const char* study_kind_name(StudyKind k);
StudyKind parse_study_kind(const std::string& name);

enum class LambdaPolicy {
  Fixed,            ///< lambda as given
  Ratio,            ///< half-integer nearest k m R_max
  AboveFourFifths,  ///< half-integer nearest ceil((m R_max)^{4/5})
};

LambdaPolicy parse_lambda_policy(const std::string& name);
const char* lambda_policy_name(LambdaPolicy p);

enum class StudyAxis { RMax, Mass };

struct PhiSpec {
  double a = 1.0;
  double b = 2.0;
  Spinor direction = Spinor(1.0, 0.0);
  double amplitude = 1.0;
  TestFunction build() const;
};

struct StudyConfig {
  StudyKind kind = StudyKind::SWkbBound;
  std::vector<double> grid;  ///< values of m R_max, ascending, all > 1
  StudyAxis axis = StudyAxis::RMax;
  double mass = 1.0;   ///< held fixed when the grid varies R_max
  double r_max = 1.0;  ///< held fixed when the grid varies m
  LambdaPolicy lambda_policy = LambdaPolicy::Fixed;
  double lambda = 1.5;
  double k = 0.1;
  double tau0 = kPi / 2;
  PhiSpec phi;
  double window_a = 0.5;
  double window_b = 2.5;
  double slack = 0.05;
  int jobs = 1;
  Tolerances tol;
  /// Scale profile factory; defaults to the dust model.
  std::function<ScaleFunction(double r_max)> scale = nullptr;
};

struct StudyRecord {
  double m_rmax = 0.0;
  double lambda = 0.0;
  double lambda_ratio = 0.0;  ///< lambda / (m R_max)
  std::string observable;
  double measured = 0.0;
  double envelope = 0.0;
  double fitted_c = 0.0;
  bool pass = false;
};

struct StudyResult {
  std::vector<StudyRecord> records;
  double fitted_c = 0.0;
  double slope = 0.0;  ///< least-squares slope of log(measured) against log(m R_max)
  bool all_pass = false;
};

/// lambda for one grid point according to the policy.
double study_lambda(const StudyConfig& cfg, double m_rmax);

/// The measured quantity and the envelope shape (without the constant) at one grid point.
std::pair<double, double> study_point(const StudyConfig& cfg, double m_rmax);

/// Fits c at the first grid point, then checks measured <= (1 + slack) c shape everywhere.
StudyResult run_study(const StudyConfig& cfg);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace diracsea

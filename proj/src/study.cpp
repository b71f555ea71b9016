#include "diracsea/study.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "diracsea/projector.hpp"

namespace diracsea {

const char* study_kind_name(StudyKind k) {
  switch (k) {
    case StudyKind::SWkbBound: return "s_wkb_bound";
    case StudyKind::PWkbBound: return "p_wkb_bound";
    case StudyKind::LeadingTermBound: return "leading_term_bound";
    case StudyKind::WDeviation: return "w_deviation";
    case StudyKind::LeadingOrder: return "leading_order";
  }
  return "unknown";
}

StudyKind parse_study_kind(const std::string& name) {
  for (auto k : {StudyKind::SWkbBound, StudyKind::PWkbBound, StudyKind::LeadingTermBound, StudyKind::WDeviation,
                 StudyKind::LeadingOrder})
    if (name == study_kind_name(k)) return k;
  fail(ErrorKind::Validation, "unknown study kind '" + name + "'");
}

const char* lambda_policy_name(LambdaPolicy p) {
  switch (p) {
    case LambdaPolicy::Fixed: return "fixed";
    case LambdaPolicy::Ratio: return "ratio";
    case LambdaPolicy::AboveFourFifths: return "above";
  }
  return "unknown";
}

LambdaPolicy parse_lambda_policy(const std::string& name) {
  for (auto p : {LambdaPolicy::Fixed, LambdaPolicy::Ratio, LambdaPolicy::AboveFourFifths})
    if (name == lambda_policy_name(p)) return p;
  fail(ErrorKind::Validation, "unknown lambda policy '" + name + "'");
}

TestFunction PhiSpec::build() const { return bump(a, b, direction, amplitude); }

double study_lambda(const StudyConfig& cfg, double m_rmax) {
  switch (cfg.lambda_policy) {
    case LambdaPolicy::Fixed: return cfg.lambda;
    case LambdaPolicy::Ratio: return nearest_half_integer(cfg.k * m_rmax);
    case LambdaPolicy::AboveFourFifths: {
      // Round before the ceiling so that exact powers such as 32^{4/5} = 16 are not bumped up.
      const double x = std::pow(m_rmax, 0.8);
      return nearest_half_integer(std::ceil(x - 1e-12 * x));
    }
  }
  return cfg.lambda;
}

namespace {

void validate(const StudyConfig& cfg) {
  if (cfg.grid.empty()) fail(ErrorKind::Validation, "study grid is empty");
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    if (!(cfg.grid[i] > 1.0)) fail(ErrorKind::Validation, "every grid value m R_max must exceed 1");
    if (i > 0 && !(cfg.grid[i] > cfg.grid[i - 1])) fail(ErrorKind::Validation, "study grid must be ascending");
  }
  if (cfg.lambda_policy == LambdaPolicy::Ratio && !(cfg.k > 0.0)) fail(ErrorKind::Validation, "k must be positive");
  if (!(cfg.slack >= 0.0)) fail(ErrorKind::Validation, "slack must be non-negative");
  if (!(cfg.mass > 0.0) || !(cfg.r_max > 0.0)) fail(ErrorKind::Validation, "mass and r_max must be positive");
}

}  // namespace

std::pair<double, double> study_point(const StudyConfig& cfg, double m_rmax) {
  const double m = cfg.axis == StudyAxis::RMax ? cfg.mass : m_rmax / cfg.r_max;
  const double r = cfg.axis == StudyAxis::RMax ? m_rmax / cfg.mass : cfg.r_max;
  const double lambda = study_lambda(cfg, m_rmax);
  const Mode mode(lambda, m, cfg.tau0);
  const ScaleFunction scale = cfg.scale ? cfg.scale(r) : dust_scale(r);
  const Tolerances& tol = cfg.tol;

  switch (cfg.kind) {
    case StudyKind::SWkbBound: {
      const auto s = signature_operator(mode, scale, tol);
      const auto sw = signature_operator_wkb(mode, scale, tol);
      return {spectral_norm(Matrix2(s.s.matrix() - sw.s.matrix())), std::pow(m, -0.2) * std::pow(r, 0.8)};
    }
    case StudyKind::PWkbBound: {
      const TestFunction phi = cfg.phi.build();
      const auto p = fermionic_projector_apply(mode, scale, phi, tol).value;
      const auto pw = p_wkb_apply(mode, scale, phi, tol, WkbVariant::Full).value;
      return {(p - pw).norm(), std::pow(m_rmax, -0.2) * r * phi.l1_norm()};
    }
    case StudyKind::LeadingTermBound: {
      const auto sw = signature_operator_wkb(mode, scale, tol);
      const auto lead = wkb_signature_leading_term(mode, scale);
      return {spectral_norm(Matrix2(sw.s.matrix() - lead.matrix())), 1.0 / m};
    }
    case StudyKind::WDeviation: {
      const auto sup = wkb_deviation_sup(mode, scale, cfg.window_a, cfg.window_b, tol.ode_tol);
      return {sup.sup, std::pow(m_rmax, -0.2)};
    }
    case StudyKind::LeadingOrder: {
      const TestFunction phi = cfg.phi.build();
      const auto full = p_wkb_apply(mode, scale, phi, tol, WkbVariant::Full).value;
      const auto lo = p_wkb_apply(mode, scale, phi, tol, WkbVariant::LeadingOrder).value;
      const double denom = full.norm();
      if (!(denom > 0.0)) fail(ErrorKind::ConvergenceFailure, "full WKB projection vanishes; relative error undefined");
      return {(full - lo).norm() / denom, std::hypot(lambda, m_rmax) / (m_rmax * m_rmax)};
    }
  }
  return {0.0, 0.0};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

StudyResult run_study(const StudyConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.grid.size();
  std::vector<std::pair<double, double>> points(n);
  points[0] = study_point(cfg, cfg.grid[0]);

  // The fit point is serial; the rest run on a small pool and land in grid order.
  std::atomic<std::size_t> next{1};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        points[i] = study_point(cfg, cfg.grid[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(n)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  StudyResult out;
  out.fitted_c = points[0].second > 0.0 ? points[0].first / points[0].second : 0.0;
  out.all_pass = true;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < n; ++i) {
    StudyRecord rec;
    rec.m_rmax = cfg.grid[i];
    rec.lambda = study_lambda(cfg, cfg.grid[i]);
    rec.lambda_ratio = rec.lambda / rec.m_rmax;
    rec.observable = study_kind_name(cfg.kind);
    rec.measured = points[i].first;
    rec.envelope = out.fitted_c * points[i].second;
    rec.fitted_c = out.fitted_c;
    rec.pass = std::isfinite(rec.measured) && rec.measured <= (1.0 + cfg.slack) * rec.envelope;
    out.all_pass = out.all_pass && rec.pass;
    out.records.push_back(rec);
    xs.push_back(rec.m_rmax);
    ys.push_back(rec.measured);
  }
  out.slope = loglog_slope(xs, ys);
  return out;
}

}  // namespace diracsea

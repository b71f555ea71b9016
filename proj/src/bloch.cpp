#include "diracsea/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "diracsea/integrator.hpp"
#include "diracsea/projector.hpp"

namespace diracsea {

namespace {

Matrix3 cross_matrix(const Vec3& a) {
  Matrix3 k;
  k << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return k;
}

Matrix3 project_so3(const Matrix3& w) {
  Eigen::JacobiSVD<Matrix3> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Matrix3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

// Segment map of the frame over a time t: rotation about d by -|d| t.
Matrix3 segment_rotation(const Vec3& d, double t) {
  const double norm = d.norm();
  if (norm == 0.0) return Matrix3::Identity();
  return rodrigues(d / norm, -norm * t);
}

// int_0^t of the segment rotation, in closed form.
Matrix3 segment_rotation_integral(const Vec3& d, double t) {
  const double w = d.norm();
  if (w == 0.0) return t * Matrix3::Identity();
  const Matrix3 k = cross_matrix(d / w);
  // R(s) = 1 - sin(ws) K + (1 - cos(ws)) K^2
  return t * Matrix3::Identity() + ((std::cos(w * t) - 1.0) / w) * k + (t - std::sin(w * t) / w) * (k * k);
}

bool admissible_lambda(double lambda) {
  const double a = std::abs(lambda);
  return a >= 1.5 && std::abs(a - 0.5 - std::round(a - 0.5)) < 1e-12;
}

void check_grid(const std::vector<double>& grid, double lo, double hi) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= lo && grid[i] <= hi)) {
      std::ostringstream os;
      os << "grid point " << grid[i] << " outside [" << lo << ", " << hi << "]";
      fail(ErrorKind::Domain, os.str());
    }
    if (i > 0 && grid[i] < grid[i - 1]) fail(ErrorKind::InvalidParameter, "grid must be sorted");
  }
}

// Visits the grid outward from tau0 so that every step chains onto its neighbour.
template <typename State, typename Step>
std::vector<State> sweep_from(double tau0, const std::vector<double>& grid, const State& start, Step&& step) {
  std::vector<State> out(grid.size(), start);
  const auto split = std::lower_bound(grid.begin(), grid.end(), tau0) - grid.begin();
  State s = start;
  double t = tau0;
  for (std::size_t i = split; i < grid.size(); ++i) {
    s = step(t, grid[i], s);
    t = grid[i];
    out[i] = s;
  }
  s = start;
  t = tau0;
  for (std::ptrdiff_t i = split - 1; i >= 0; --i) {
    s = step(t, grid[i], s);
    t = grid[i];
    out[i] = s;
  }
  return out;
}

Vec3 trace_v(const Matrix2& u) {
  const Matrix2 a = u.adjoint() * pauli::sigma3() * u;
  const auto c = pauli::decompose(a);
  return Vec3(c[1].real(), c[2].real(), c[3].real());
}

void cross_check(std::vector<VRow>& rows, double agreement_tol) {
  for (const auto& r : rows) {
    const double gap = (r.v - r.v_bloch).cwiseAbs().maxCoeff();
    if (gap > agreement_tol) {
      std::ostringstream os;
      os << "trace formula and Bloch frame disagree by " << gap << " at tau = " << r.tau;
      fail(ErrorKind::ConventionMismatch, os.str());
    }
  }
}

}  // namespace

Vec3 bloch_axis(const Mode& mode, double r) {
  if (r < 0.0) fail(ErrorKind::InvalidParameter, "R must be non-negative");
  return Vec3(2.0 * mode.lambda(), 0.0, -2.0 * mode.mass() * r);
}

Matrix3 rodrigues(const Vec3& axis, double angle) {
  const Matrix3 k = cross_matrix(axis);
  return Matrix3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
}

double so3_defect(const Matrix3& w) {
  const Matrix3 g = w.transpose() * w - Matrix3::Identity();
  Eigen::SelfAdjointEigenSolver<Matrix3> es(g);
  const double orth = es.eigenvalues().cwiseAbs().maxCoeff();
  return std::max(orth, std::abs(w.determinant() - 1.0));
}

// ---------------------------------------------------------------------------

Scenario::Scenario(double lambda, double mass, std::vector<Segment> segments)
    : mode_(lambda, mass, 0.0, admissible_lambda(lambda)), segments_(std::move(segments)) {
  if (segments_.empty()) fail(ErrorKind::InvalidParameter, "scenario needs at least one segment");
  for (const auto& s : segments_) {
    if (!(s.r > 0.0) || !std::isfinite(s.r)) fail(ErrorKind::InvalidParameter, "segment R must be positive");
    if (!(s.p > 0.0) || !std::isfinite(s.p)) fail(ErrorKind::InvalidParameter, "segment p must be positive");
  }
}

double Scenario::duration(std::size_t n) const {
  const auto& s = segments_.at(n);
  return kPi * s.p / std::hypot(mode_.lambda(), mode_.mass() * s.r);
}

double Scenario::total_duration() const {
  double t = 0.0;
  for (std::size_t n = 0; n < segments_.size(); ++n) t += duration(n);
  return t;
}

double Scenario::r_max() const {
  double r = 0.0;
  for (const auto& s : segments_) r = std::max(r, s.r);
  return r;
}

std::vector<double> Scenario::breakpoints() const {
  std::vector<double> bp{0.0};
  for (std::size_t n = 0; n < segments_.size(); ++n) bp.push_back(bp.back() + duration(n));
  return bp;
}

ScaleFunction Scenario::scale() const {
  std::vector<double> values;
  for (const auto& s : segments_) values.push_back(s.r);
  return ScaleFunction::piecewise(breakpoints(), values);
}

Scenario Scenario::perturbed(std::size_t n, double dp) const {
  if (n >= segments_.size()) fail(ErrorKind::InvalidParameter, "perturbed segment index out of range");
  auto segs = segments_;
  segs[n].p += dp;
  return Scenario(mode_.lambda(), mode_.mass(), segs);
}

namespace {

std::pair<double, double> six_segment_radii(double lambda, double mass) {
  if (!(lambda > 0.0) || !(mass > 0.0)) fail(ErrorKind::InvalidParameter, "lambda and m must be positive");
  const double deg = kPi / 180.0;
  return {lambda / mass / std::tan(10.0 * deg), lambda / mass / std::tan(70.0 * deg)};
}

}  // namespace

Scenario build_six_segment(double lambda, double mass) {
  const auto [r1, r2] = six_segment_radii(lambda, mass);
  std::vector<Segment> segs;
  for (int i = 0; i < 3; ++i) {
    segs.push_back({r1, 5.5});
    segs.push_back({r2, 0.5});
  }
  return Scenario(lambda, mass, segs);
}

Scenario build_twelve_segment(double lambda, double mass) {
  const auto [r1, r2] = six_segment_radii(lambda, mass);
  std::vector<Segment> segs;
  for (int i = 0; i < 3; ++i) {
    segs.push_back({r1, 5.5});
    segs.push_back({r2, 0.5});
  }
  for (int i = 0; i < 3; ++i) {
    segs.push_back({r2, 0.5});
    segs.push_back({r1, 5.5});
  }
  return Scenario(lambda, mass, segs);
}

// ---------------------------------------------------------------------------

std::vector<BlochState> propagate_bloch(const Scenario& scenario, const std::vector<double>& grid) {
  const auto bp = scenario.breakpoints();
  check_grid(grid, 0.0, bp.back());
  std::vector<BlochState> out;
  out.reserve(grid.size());
  Matrix3 frame = Matrix3::Identity();  // frame at bp[seg]
  std::size_t seg = 0;
  const auto& segs = scenario.segments();
  for (double t : grid) {
    while (seg + 1 < segs.size() && t >= bp[seg + 1]) {
      frame = segment_rotation(bloch_axis(scenario.mode(), segs[seg].r), bp[seg + 1] - bp[seg]) * frame;
      ++seg;
    }
    BlochState st;
    st.tau = t;
    st.w = segment_rotation(bloch_axis(scenario.mode(), segs[seg].r), t - bp[seg]) * frame;
    out.push_back(st);
  }
  return out;
}

namespace {

using BlochVec = Eigen::Matrix<double, 12, 1>;  // 9 frame entries, 3 cumulative integrals

struct SmoothBloch {
  BlochVec y = BlochVec::Zero();
};

SmoothBloch bloch_step(const Mode& mode, const ScaleFunction& scale, double from, double to,
                       const SmoothBloch& start, double tol) {
  SmoothBloch s = start;
  if (from == to) return s;
  DormandPrince<BlochVec> dp(tol);
  auto rhs = [&](double t, const BlochVec& y, BlochVec& dy) {
    const double r = scale(t);
    const Vec3 d = bloch_axis(mode, r);
    for (int a = 0; a < 3; ++a) {
      const Vec3 w = y.segment<3>(3 * a);
      dy.segment<3>(3 * a) = w.cross(d);
      dy[9 + a] = w.z() * r;
    }
  };
  auto ceiling = [&](double t) { return 0.1 / frequency(mode, scale, t); };
  auto hook = [](double, BlochVec& y) {
    Matrix3 w;
    for (int a = 0; a < 3; ++a) w.col(a) = y.segment<3>(3 * a);
    const Matrix3 r = project_so3(w);
    for (int a = 0; a < 3; ++a) y.segment<3>(3 * a) = r.col(a);
  };
  dp.integrate(rhs, s.y, from, to, ceiling, hook);
  return s;
}

std::vector<SmoothBloch> smooth_bloch(const Mode& mode, const ScaleFunction& scale,
                                      const std::vector<double>& grid, double tol) {
  validate_ode_tol(tol);
  for (double t : grid) check_time(scale, t, "grid point");
  check_grid(grid, 0.0, kPi);
  SmoothBloch start;
  for (int a = 0; a < 3; ++a) start.y[3 * a + a] = 1.0;
  return sweep_from(mode.tau0(), grid, start, [&](double from, double to, const SmoothBloch& s) {
    return bloch_step(mode, scale, from, to, s, tol);
  });
}

Matrix3 frame_of(const SmoothBloch& s) {
  Matrix3 w;
  for (int a = 0; a < 3; ++a) w.col(a) = s.y.segment<3>(3 * a);
  return w;
}

}  // namespace

std::vector<BlochState> propagate_bloch(const Mode& mode, const ScaleFunction& scale,
                                        const std::vector<double>& grid, double tol) {
  const auto states = smooth_bloch(mode, scale, grid, tol);
  std::vector<BlochState> out;
  for (std::size_t i = 0; i < grid.size(); ++i) out.push_back({frame_of(states[i]), grid[i]});
  return out;
}

std::vector<VRow> v_components(const Scenario& scenario, const std::vector<double>& grid, double agreement_tol) {
  const auto frames = propagate_bloch(scenario, grid);
  const ScaleFunction scale = scenario.scale();
  const auto bp = scenario.breakpoints();
  const auto& segs = scenario.segments();
  const Mode& mode = scenario.mode();

  std::vector<VRow> rows;
  rows.reserve(grid.size());
  Matrix2 u = Matrix2::Identity();  // U^{t, 0} at the previous grid point
  double t_prev = 0.0;
  Vec3 cum = Vec3::Zero();  // int_0^{bp[seg]} v R
  Matrix3 frame = Matrix3::Identity();
  std::size_t seg = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    VRow row;
    row.tau = t;
    u = evolve(mode, scale, t_prev, t, 1e-12).u.matrix() * u;
    t_prev = t;
    row.v = trace_v(u);
    row.v_bloch = frames[i].w.row(2).transpose();

    while (seg + 1 < segs.size() && t >= bp[seg + 1]) {
      const Vec3 d = bloch_axis(mode, segs[seg].r);
      const double len = bp[seg + 1] - bp[seg];
      cum += segs[seg].r * (segment_rotation_integral(d, len) * frame).row(2).transpose();
      frame = segment_rotation(d, len) * frame;
      ++seg;
    }
    const Vec3 d = bloch_axis(mode, segs[seg].r);
    row.cum_int_vr = cum + segs[seg].r * (segment_rotation_integral(d, t - bp[seg]) * frame).row(2).transpose();
    rows.push_back(row);
  }
  cross_check(rows, agreement_tol);
  return rows;
}

std::vector<VRow> v_components(const Mode& mode, const ScaleFunction& scale, const std::vector<double>& grid,
                               double tol, double agreement_tol) {
  const auto states = smooth_bloch(mode, scale, grid, tol);
  struct Trace {
    Matrix2 u = Matrix2::Identity();
  };
  const auto traces = sweep_from(mode.tau0(), grid, Trace{}, [&](double from, double to, const Trace& s) {
    return Trace{evolve(mode, scale, from, to, tol).u.matrix() * s.u};
  });
  std::vector<VRow> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    VRow row;
    row.tau = grid[i];
    row.v = trace_v(traces[i].u);
    row.v_bloch = frame_of(states[i]).row(2).transpose();
    row.cum_int_vr = states[i].y.segment<3>(9);
    rows.push_back(row);
  }
  cross_check(rows, agreement_tol);
  return rows;
}

std::vector<double> scenario_grid(const Scenario& scenario, int samples_per_segment) {
  if (samples_per_segment < 1) fail(ErrorKind::InvalidParameter, "samples per segment must be positive");
  const auto bp = scenario.breakpoints();
  std::vector<double> grid;
  for (std::size_t n = 0; n + 1 < bp.size(); ++n)
    for (int k = 0; k < samples_per_segment; ++k)
      grid.push_back(bp[n] + (bp[n + 1] - bp[n]) * k / samples_per_segment);
  grid.push_back(bp.back());
  return grid;
}

SignatureComponents scenario_signature_components(const Scenario& scenario) {
  const SignatureResult s = signature_operator(scenario.mode(), scenario.scale(), Tolerances{});
  const auto c = pauli::decompose(s.s.matrix());
  SignatureComponents out;
  out.s0 = c[0].real();
  out.s = Vec3(c[1].real(), c[2].real(), c[3].real());
  return out;
}

}  // namespace diracsea

#include "diracsea/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace diracsea {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid_parameter";
    case ErrorKind::Domain: return "domain_error";
    case ErrorKind::IntegrationFailure: return "integration_failure";
    case ErrorKind::ConvergenceFailure: return "convergence_failure";
    case ErrorKind::DegenerateFrame: return "degenerate_frame";
    case ErrorKind::DegenerateSignature: return "degenerate_signature";
    case ErrorKind::DegenerateFamily: return "degenerate_family";
    case ErrorKind::ConventionMismatch: return "convention_mismatch";
    case ErrorKind::Validation: return "validation";
  }
  return "unknown";
}

bool is_validation_kind(ErrorKind kind) {
  return kind == ErrorKind::InvalidParameter || kind == ErrorKind::Domain ||
         kind == ErrorKind::Validation;
}

namespace {
std::string degenerate_message(double lo, double hi, double threshold) {
  std::ostringstream os;
  os.precision(17);
  os << "signature operator is degenerate: eigenvalues (" << lo << ", " << hi
     << ") within gap threshold " << threshold;
  return os.str();
}
}  // namespace

DegenerateSignature::DegenerateSignature(double mu_minus, double mu_plus, double threshold)
    : Error(ErrorKind::DegenerateSignature, degenerate_message(mu_minus, mu_plus, threshold)),
      mu_minus_(mu_minus),
      mu_plus_(mu_plus),
      threshold_(threshold) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// ---------------------------------------------------------------------------

namespace pauli {
Matrix2 identity() { return Matrix2::Identity(); }
Matrix2 sigma1() {
  Matrix2 s;
  s << 0.0, 1.0, 1.0, 0.0;
  return s;
}
Matrix2 sigma2() {
  Matrix2 s;
  s << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return s;
}
Matrix2 sigma3() {
  Matrix2 s;
  s << 1.0, 0.0, 0.0, -1.0;
  return s;
}
Matrix2 sigma(int alpha) {
  switch (alpha) {
    case 0: return identity();
    case 1: return sigma1();
    case 2: return sigma2();
    case 3: return sigma3();
    default: fail(ErrorKind::InvalidParameter, "Pauli index must be in 0..3");
  }
}
Matrix2 dot(const Vec3& x) { return x[0] * sigma1() + x[1] * sigma2() + x[2] * sigma3(); }

std::array<Complex, 4> decompose(const Matrix2& a) {
  // Tr(sigma_alpha A)/2 written out entrywise.
  return {0.5 * (a(0, 0) + a(1, 1)), 0.5 * (a(0, 1) + a(1, 0)),
          0.5 * Complex(0.0, 1.0) * (a(0, 1) - a(1, 0)), 0.5 * (a(0, 0) - a(1, 1))};
}
}  // namespace pauli

double spectral_norm(const Matrix2& a) {
  // sigma_max^2 is the largest eigenvalue of A^dagger A.
  const Matrix2 g = a.adjoint() * a;
  const double tr = g.trace().real();
  const double det = std::max(0.0, g.determinant().real());
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  return std::sqrt(std::max(0.0, 0.5 * tr + disc));
}

double spectral_norm(const Eigen::MatrixXcd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  return svd.singularValues()(0);
}

double unitarity_defect(const Matrix2& u) {
  return spectral_norm(Matrix2(u.adjoint() * u - Matrix2::Identity()));
}

Matrix2 polar_unitary(const Matrix2& a) {
  Eigen::JacobiSVD<Matrix2> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

Unitary2::Unitary2(const Matrix2& entries) : m_(entries) {
  if (!entries.allFinite()) fail(ErrorKind::InvalidParameter, "unitary entries are not finite");
  const double defect = unitarity_defect(entries);
  if (defect > kTolerance) {
    std::ostringstream os;
    os << "matrix is not unitary (defect " << defect << ")";
    fail(ErrorKind::InvalidParameter, os.str());
  }
}

Unitary2 Unitary2::project(const Matrix2& entries) {
  return Unitary2(polar_unitary(entries), Unchecked{});
}

Unitary2 Unitary2::adjoint() const { return Unitary2(m_.adjoint(), Unchecked{}); }

Unitary2 Unitary2::operator*(const Unitary2& other) const {
  return Unitary2(m_ * other.m_, Unchecked{});
}

Hermitian2::Hermitian2(const Matrix2& entries) : m_(entries) {
  if (!entries.allFinite()) fail(ErrorKind::InvalidParameter, "hermitian entries are not finite");
  const double asym = spectral_norm(Matrix2(entries - entries.adjoint()));
  if (asym > kTolerance * std::max(1.0, spectral_norm(entries))) {
    std::ostringstream os;
    os << "matrix is not hermitian (asymmetry " << asym << ")";
    fail(ErrorKind::InvalidParameter, os.str());
  }
}

Hermitian2 Hermitian2::symmetrize(const Matrix2& entries) {
  Hermitian2 h;
  h.m_ = 0.5 * (entries + entries.adjoint());
  return h;
}

std::array<double, 2> Hermitian2::eigenvalues() const {
  const double a = m_(0, 0).real();
  const double d = m_(1, 1).real();
  const double mean = 0.5 * (a + d);
  const double r = std::hypot(0.5 * (a - d), std::abs(m_(0, 1)));
  return {mean - r, mean + r};
}

// ---------------------------------------------------------------------------

namespace {
bool is_physical_lambda(double lambda) {
  const double twice = 2.0 * std::abs(lambda);
  const double k = std::round(twice);
  return std::abs(twice - k) < 1e-12 && static_cast<long long>(k) % 2 == 1 && k >= 3.0;
}
}  // namespace

Mode::Mode(double lambda, double mass, double tau0, bool physical)
    : lambda_(lambda), mass_(mass), tau0_(tau0), physical_(physical) {
  if (!std::isfinite(lambda) || !std::isfinite(mass) || !std::isfinite(tau0))
    fail(ErrorKind::InvalidParameter, "mode parameters must be finite");
  if (!(mass > 0.0)) fail(ErrorKind::InvalidParameter, "mass must be positive");
  // tau0 = 0 is admitted for piecewise scenarios, which start at the big bang.
  if (!(tau0 >= 0.0)) fail(ErrorKind::InvalidParameter, "tau0 must be non-negative");
  if (physical && !is_physical_lambda(lambda))
    fail(ErrorKind::InvalidParameter,
         "physical modes need lambda in {+-3/2, +-5/2, ...}; use a research mode otherwise");
}

double nearest_half_integer(double x) {
  const double mag = std::max(1.5, std::floor(std::abs(x)) + 0.5);
  // floor(|x|)+1/2 and floor(|x|)-1/2 bracket |x|; pick the closer.
  double best = mag;
  if (mag - 1.0 >= 1.5 && std::abs(std::abs(x) - (mag - 1.0)) < std::abs(std::abs(x) - mag))
    best = mag - 1.0;
  return x < 0.0 ? -best : best;
}

// ---------------------------------------------------------------------------

ScaleFunction ScaleFunction::smooth(SmoothProfile profile, double r_max) {
  if (!(r_max > 0.0) || !std::isfinite(r_max))
    fail(ErrorKind::InvalidParameter, "r_max must be positive");
  if (!profile.g || !profile.dg || !profile.ddg)
    fail(ErrorKind::InvalidParameter, "smooth profile needs g, g' and g''");
  ScaleFunction s;
  s.kind_ = Kind::Smooth;
  s.r_max_ = r_max;
  s.profile_ = std::make_shared<const SmoothProfile>(std::move(profile));
  return s;
}

ScaleFunction ScaleFunction::piecewise(std::vector<double> breakpoints, std::vector<double> values) {
  if (values.empty() || breakpoints.size() != values.size() + 1)
    fail(ErrorKind::InvalidParameter, "piecewise scale needs N values and N+1 breakpoints");
  if (breakpoints.front() != 0.0)
    fail(ErrorKind::InvalidParameter, "piecewise breakpoints must start at 0");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i] > breakpoints[i - 1]) || !std::isfinite(breakpoints[i]))
      fail(ErrorKind::InvalidParameter, "piecewise breakpoints must be strictly increasing");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v))
      fail(ErrorKind::InvalidParameter, "piecewise values must be positive");
  ScaleFunction s;
  s.kind_ = Kind::PiecewiseConstant;
  s.r_max_ = *std::max_element(values.begin(), values.end());
  s.breakpoints_ = std::move(breakpoints);
  s.values_ = std::move(values);
  return s;
}

double ScaleFunction::end() const noexcept {
  return kind_ == Kind::Smooth ? kPi : breakpoints_.back();
}

std::size_t ScaleFunction::segment_index(double tau) const {
  if (kind_ != Kind::PiecewiseConstant) return 0;
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), tau);
  const std::ptrdiff_t idx = (it - breakpoints_.begin()) - 1;
  return static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values_.size()) - 1));
}

double ScaleFunction::operator()(double tau) const {
  if (kind_ == Kind::Smooth) return r_max_ * profile_->g(tau);
  return values_[segment_index(tau)];
}

double ScaleFunction::derivative(double tau) const {
  return kind_ == Kind::Smooth ? r_max_ * profile_->dg(tau) : 0.0;
}

double ScaleFunction::second_derivative(double tau) const {
  return kind_ == Kind::Smooth ? r_max_ * profile_->ddg(tau) : 0.0;
}

int ScaleFunction::monotone_pieces() const noexcept {
  if (kind_ == Kind::Smooth) return profile_->monotone_pieces;
  return static_cast<int>(values_.size());
}

const SmoothProfile& ScaleFunction::profile() const {
  if (kind_ != Kind::Smooth) fail(ErrorKind::InvalidParameter, "piecewise scale has no profile");
  return *profile_;
}

double ScaleFunction::integral(double a, double b) const {
  if (a == b) return 0.0;
  if (a > b) return -integral(b, a);
  if (kind_ == Kind::Smooth) {
    auto r = [this](double t) { return (*this)(t); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(r, a, b, 15, 1e-14);
  }
  double total = 0.0;
  for (std::size_t n = 0; n < values_.size(); ++n) {
    const double lo = std::max(a, breakpoints_[n]);
    const double hi = std::min(b, breakpoints_[n + 1]);
    if (hi > lo) total += values_[n] * (hi - lo);
  }
  return total;
}

ScaleFunction dust_scale(double r_max) {
  if (!(r_max > 0.0)) fail(ErrorKind::InvalidParameter, "dust_scale: r_max must be positive");
  SmoothProfile p;
  p.g = [](double t) { return 0.5 * (1.0 - std::cos(t)); };
  p.dg = [](double t) { return 0.5 * std::sin(t); };
  p.ddg = [](double t) { return 0.5 * std::cos(t); };
  p.monotone_pieces = 1;
  p.name = "dust";
  return ScaleFunction::smooth(std::move(p), r_max);
}

namespace {

// Natural cubic spline, evaluated with its first two derivatives.
struct CubicSpline {
  std::vector<double> x, y, m;  // m: second derivatives at the nodes

  CubicSpline(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)) {
    const std::size_t n = x.size();
    m.assign(n, 0.0);
    std::vector<double> c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x[i] - x[i - 1];
      const double h1 = x[i + 1] - x[i];
      const double rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
      const double diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
      c[i] = h1 / diag;
      d[i] = (rhs - h0 * d[i - 1]) / diag;
    }
    for (std::size_t i = n - 1; i-- > 1;) m[i] = d[i] - c[i] * m[i + 1];
  }

  std::size_t locate(double t) const {
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::ptrdiff_t i = (it - x.begin()) - 1;
    return static_cast<std::size_t>(
        std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(x.size()) - 2));
  }

  std::array<double, 3> eval(double t) const {
    const std::size_t i = locate(t);
    const double h = x[i + 1] - x[i];
    const double a = (x[i + 1] - t) / h;
    const double b = (t - x[i]) / h;
    const double v = a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
    const double dv = (y[i + 1] - y[i]) / h + ((1.0 - 3.0 * a * a) * m[i] + (3.0 * b * b - 1.0) * m[i + 1]) * h / 6.0;
    const double ddv = a * m[i] + b * m[i + 1];
    return {v, dv, ddv};
  }
};

}  // namespace

ScaleFunction table_scale(std::vector<double> taus, std::vector<double> gs, double r_max) {
  if (taus.size() < 3 || taus.size() != gs.size())
    fail(ErrorKind::InvalidParameter, "smooth_table needs at least 3 matching (tau, g) nodes");
  if (std::abs(taus.front()) > 1e-12 || std::abs(taus.back() - kPi) > 1e-9)
    fail(ErrorKind::InvalidParameter, "smooth_table nodes must span [0, pi]");
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] > taus[i - 1])) fail(ErrorKind::InvalidParameter, "smooth_table nodes must increase");
  for (std::size_t i = 1; i + 1 < gs.size(); ++i)
    if (!(gs[i] > 0.0)) fail(ErrorKind::InvalidParameter, "smooth_table interior values must be positive");
  if (gs.front() < 0.0 || gs.back() < 0.0)
    fail(ErrorKind::InvalidParameter, "smooth_table endpoint values must be non-negative");
  const double peak = *std::max_element(gs.begin(), gs.end());
  for (double& g : gs) g /= peak;

  int pieces = 1;
  for (std::size_t i = 2; i < gs.size(); ++i)
    if ((gs[i] - gs[i - 1]) * (gs[i - 1] - gs[i - 2]) < 0.0) ++pieces;

  auto spline = std::make_shared<const CubicSpline>(std::move(taus), std::move(gs));
  SmoothProfile p;
  p.g = [spline](double t) { return std::max(0.0, spline->eval(t)[0]); };
  p.dg = [spline](double t) { return spline->eval(t)[1]; };
  p.ddg = [spline](double t) { return spline->eval(t)[2]; };
  p.monotone_pieces = pieces;
  p.name = "smooth_table";
  return ScaleFunction::smooth(std::move(p), r_max);
}

// ---------------------------------------------------------------------------

namespace {
double compute_l1(const TestFunction& phi) {
  auto integrand = [&phi](double t) { return phi(t).norm(); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, phi.support_begin(), phi.support_end(), 20, 1e-13);
}
}  // namespace

TestFunction::TestFunction(double a, double b, Amplitude amplitude)
    : a_(a), b_(b), amplitude_(std::move(amplitude)) {
  if (!(a > 0.0) || !(b > a)) fail(ErrorKind::InvalidParameter, "test function support must satisfy 0 < a < b");
  if (!amplitude_) fail(ErrorKind::InvalidParameter, "test function needs an amplitude");
  l1_norm_ = compute_l1(*this);
}

TestFunction TestFunction::zero(double a, double b) {
  TestFunction f(a, b, [](double) { return Spinor::Zero().eval(); });
  f.zero_ = true;
  return f;
}

Spinor TestFunction::operator()(double tau) const {
  if (tau <= a_ || tau >= b_) return Spinor::Zero();
  return amplitude_(tau);
}

TestFunction bump(double a, double b, const Spinor& direction, double amplitude, double end) {
  if (!(a > 0.0) || !(b > a) || !(b < end))
    fail(ErrorKind::InvalidParameter, "bump support must satisfy 0 < a < b < end of the time interval");
  const double norm = direction.norm();
  if (!(norm > 0.0)) fail(ErrorKind::InvalidParameter, "bump direction must be non-zero");
  const Spinor dir = direction / norm;
  return TestFunction(a, b, [a, b, dir, amplitude](double t) -> Spinor {
    const double x = (2.0 * t - a - b) / (b - a);
    if (std::abs(x) >= 1.0) return Spinor::Zero();
    return amplitude * std::exp(-1.0 / (1.0 - x * x)) * dir;
  });
}

}  // namespace diracsea

#pragma once

#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace diracsea {

using Complex = std::complex<double>;
using Matrix2 = Eigen::Matrix2cd;
using Spinor = Eigen::Vector2cd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Errors

enum class ErrorKind {
  InvalidParameter,
  Domain,
  IntegrationFailure,
  ConvergenceFailure,
  DegenerateFrame,
  DegenerateSignature,
  DegenerateFamily,
  ConventionMismatch,
  Validation,
};

/// Stable machine-readable name ("degenerate_signature", ...).
const char* error_kind_name(ErrorKind kind);

/// Whether the error stems from bad input (CLI exit 1) or from the numerics (exit 2).
bool is_validation_kind(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when an eigenvalue of the signature operator sits inside the gap
/// tolerance around zero; the negative spectral projection is then unstable.
class DegenerateSignature : public Error {
 public:
  DegenerateSignature(double mu_minus, double mu_plus, double threshold);
  double mu_minus() const noexcept { return mu_minus_; }
  double mu_plus() const noexcept { return mu_plus_; }
  double threshold() const noexcept { return threshold_; }

 private:
  double mu_minus_;
  double mu_plus_;
  double threshold_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

// ---------------------------------------------------------------------------
// 2x2 matrix primitives

namespace pauli {
Matrix2 identity();
Matrix2 sigma1();
Matrix2 sigma2();
Matrix2 sigma3();
/// sigma_alpha for alpha = 0..3 (0 is the identity).
Matrix2 sigma(int alpha);
/// x . sigma for a real 3-vector.
Matrix2 dot(const Vec3& x);
/// Components (A_0, A_1, A_2, A_3) with A = sum A_alpha sigma_alpha, A_alpha = Tr(sigma_alpha A)/2.
std::array<Complex, 4> decompose(const Matrix2& a);
}  // namespace pauli

/// Largest singular value.
double spectral_norm(const Matrix2& a);
double spectral_norm(const Eigen::MatrixXcd& a);

/// ||U^dagger U - 1||_2
double unitarity_defect(const Matrix2& u);

/// Closest unitary in the polar sense, U (U^dagger U)^{-1/2}.
Matrix2 polar_unitary(const Matrix2& a);

class Unitary2 {
 public:
  static constexpr double kTolerance = 1e-10;

  Unitary2() : m_(Matrix2::Identity()) {}
  /// Throws InvalidParameter if the entries are not unitary within kTolerance.
  explicit Unitary2(const Matrix2& entries);
  /// Polar re-projection of an almost-unitary matrix; never throws.
  static Unitary2 project(const Matrix2& entries);
  static Unitary2 identity() { return Unitary2(); }

  const Matrix2& matrix() const noexcept { return m_; }
  Unitary2 adjoint() const;
  Unitary2 operator*(const Unitary2& other) const;

 private:
  struct Unchecked {};
  Unitary2(const Matrix2& entries, Unchecked) : m_(entries) {}
  Matrix2 m_;
};

class Hermitian2 {
 public:
  static constexpr double kTolerance = 1e-12;

  Hermitian2() : m_(Matrix2::Zero()) {}
  /// Throws InvalidParameter unless ||A - A^dagger|| <= 1e-12 max(1, ||A||).
  explicit Hermitian2(const Matrix2& entries);
  /// Replaces A by (A + A^dagger)/2.
  static Hermitian2 symmetrize(const Matrix2& entries);

  const Matrix2& matrix() const noexcept { return m_; }
  /// Ascending real eigenvalues.
  std::array<double, 2> eigenvalues() const;

 private:
  Matrix2 m_;
};

// ---------------------------------------------------------------------------
// Mode

/// A separated Dirac mode: spatial eigenvalue lambda, rest mass and the
/// reference time tau0 at which the solution space is identified with C^2.
class Mode {
 public:
  /// Physical modes need lambda in {+-3/2, +-5/2, ...}; research modes accept any real
  /// lambda (including 0, used for the decoupled diagonal checks).
  Mode(double lambda, double mass, double tau0, bool physical = true);

  double lambda() const noexcept { return lambda_; }
  double mass() const noexcept { return mass_; }
  double tau0() const noexcept { return tau0_; }
  bool physical() const noexcept { return physical_; }

  Mode with_lambda(double lambda) const { return Mode(lambda, mass_, tau0_, physical_); }
  Mode with_mass(double mass) const { return Mode(lambda_, mass, tau0_, physical_); }
  Mode with_tau0(double tau0) const { return Mode(lambda_, mass_, tau0, physical_); }

 private:
  double lambda_;
  double mass_;
  double tau0_;
  bool physical_;
};

/// Nearest admissible physical eigenvalue (n + 1/2, |.| >= 3/2) to x with the sign of x.
double nearest_half_integer(double x);

// ---------------------------------------------------------------------------
// Scale functions

/// R(tau) = r_max g(tau) with g in C^2 on (0, pi), max g = 1.
struct SmoothProfile {
  std::function<double(double)> g;
  std::function<double(double)> dg;
  std::function<double(double)> ddg;
  /// Number of intervals on which g is monotone.
  int monotone_pieces = 1;
  std::string name = "smooth";
};

class ScaleFunction {
 public:
  enum class Kind { Smooth, PiecewiseConstant };

  static ScaleFunction smooth(SmoothProfile profile, double r_max);
  /// breakpoints tau_0 = 0 < tau_1 < ... < tau_N, values R_1..R_N > 0.
  static ScaleFunction piecewise(std::vector<double> breakpoints, std::vector<double> values);

  Kind kind() const noexcept { return kind_; }
  bool is_smooth() const noexcept { return kind_ == Kind::Smooth; }

  /// End of the time interval (pi for smooth profiles, tau_N for piecewise).
  double end() const noexcept;
  double r_max() const noexcept { return r_max_; }

  /// R(tau); total on the closed interval [0, end()].
  double operator()(double tau) const;
  /// dR/dtau (zero for piecewise constant).
  double derivative(double tau) const;
  double second_derivative(double tau) const;
  /// Number of monotone pieces of R.
  int monotone_pieces() const noexcept;

  const SmoothProfile& profile() const;
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }
  /// Index n of the segment [tau_n, tau_{n+1}) containing tau (last segment closed).
  std::size_t segment_index(double tau) const;

  /// int_a^b R(tau) dtau.
  double integral(double a, double b) const;

 private:
  ScaleFunction() = default;
  Kind kind_ = Kind::Smooth;
  double r_max_ = 0.0;
  std::shared_ptr<const SmoothProfile> profile_;
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

/// Dust model R(tau) = r_max (1 - cos tau) / 2.
ScaleFunction dust_scale(double r_max);

/// Natural cubic spline through (tau_i, g_i); the profile is divided by max g_i so r_max is
/// the value at the highest node. Nodes must start at 0 and end at pi.
ScaleFunction table_scale(std::vector<double> taus, std::vector<double> gs, double r_max);

// ---------------------------------------------------------------------------
// Test functions

class TestFunction {
 public:
  using Amplitude = std::function<Spinor(double)>;

  TestFunction(double a, double b, Amplitude amplitude);
  /// The zero test function supported on (a, b).
  static TestFunction zero(double a, double b);

  double support_begin() const noexcept { return a_; }
  double support_end() const noexcept { return b_; }
  Spinor operator()(double tau) const;
  /// int ||phi(tau)|| dtau.
  double l1_norm() const noexcept { return l1_norm_; }
  bool is_zero() const noexcept { return zero_; }

 private:
  double a_;
  double b_;
  Amplitude amplitude_;
  double l1_norm_ = 0.0;
  bool zero_ = false;
};

/// amplitude exp(-1/(1-x^2)) d/|d| with x = (2 tau - a - b)/(b - a). `end` is the end of the
/// time interval (pi, or the duration of a piecewise scenario).
TestFunction bump(double a, double b, const Spinor& direction, double amplitude = 1.0, double end = kPi);

}  // namespace diracsea

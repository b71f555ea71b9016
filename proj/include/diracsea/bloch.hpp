#pragma once

#include <array>
#include <vector>

#include "diracsea/core.hpp"
#include "diracsea/evolution.hpp"

namespace diracsea {

using Matrix3 = Eigen::Matrix3d;

/// d = 2 (lambda, 0, -m R). The frame obeys dw/dtau = w x d, i.e. it rotates about d by the
/// angle -|d| dtau; this orientation is the one fixed by the trace formula for v_alpha.
Vec3 bloch_axis(const Mode& mode, double r);

/// Rotation about the unit axis `axis` by `angle` (right-handed).
Matrix3 rodrigues(const Vec3& axis, double angle);

/// Columns are w_1, w_2, w_3.
struct BlochState {
  Matrix3 w = Matrix3::Identity();
  double tau = 0.0;
};

/// Distance of a 3x3 matrix from SO(3): max(||W^T W - 1||_2, |det W - 1|).
double so3_defect(const Matrix3& w);

struct Segment {
  double r = 1.0;
  double p = 0.5;  ///< number of Bloch rotations; the duration is pi p / f
};

/// Piecewise-constant scenario starting at tau0 = 0.
class Scenario {
 public:
  Scenario(double lambda, double mass, std::vector<Segment> segments);

  const Mode& mode() const noexcept { return mode_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  double duration(std::size_t n) const;
  double total_duration() const;
  double r_max() const;
  std::vector<double> breakpoints() const;
  ScaleFunction scale() const;
  /// The same scenario with segment n's rotation count shifted by dp.
  Scenario perturbed(std::size_t n, double dp) const;

 private:
  Mode mode_;
  std::vector<Segment> segments_;
};

/// R pattern (R1,R2,R1,R2,R1,R2), p pattern (5.5,0.5,...), R1 = (lambda/m) cot 10deg,
/// R2 = (lambda/m) cot 70deg.
Scenario build_six_segment(double lambda = 1.5, double mass = 1.0);

/// The six-segment block followed by its mirror image.
Scenario build_twelve_segment(double lambda = 1.5, double mass = 1.0);

/// Frames at the (sorted) grid points, exact per-segment rotations.
std::vector<BlochState> propagate_bloch(const Scenario& scenario, const std::vector<double>& grid);

/// Frames for a smooth scale with w_alpha(tau0) = e_alpha, adaptive stepper plus SO(3)
/// re-projection after each accepted step.
std::vector<BlochState> propagate_bloch(const Mode& mode, const ScaleFunction& scale,
                                        const std::vector<double>& grid, double tol);

struct VRow {
  double tau = 0.0;
  Vec3 v = Vec3::Zero();         ///< trace-formula values
  Vec3 v_bloch = Vec3::Zero();   ///< <w_alpha, e3>
  Vec3 cum_int_vr = Vec3::Zero();  ///< int_{tau0}^{tau} v_alpha R
};

/// v_alpha = Tr(sigma_alpha U^dagger sigma_3 U)/2 and its Bloch counterpart; throws
/// ConventionMismatch if they differ by more than `agreement_tol` anywhere on the grid.
std::vector<VRow> v_components(const Scenario& scenario, const std::vector<double>& grid,
                               double agreement_tol = 1e-8);
std::vector<VRow> v_components(const Mode& mode, const ScaleFunction& scale, const std::vector<double>& grid,
                               double tol, double agreement_tol = 1e-8);

/// Uniform samples per segment including every breakpoint.
std::vector<double> scenario_grid(const Scenario& scenario, int samples_per_segment);

struct SignatureComponents {
  double s0 = 0.0;
  Vec3 s = Vec3::Zero();
};

/// Pauli components of the signature operator of a scenario (closed-form segment integrals).
SignatureComponents scenario_signature_components(const Scenario& scenario);

}  // namespace diracsea

#pragma once

#include <vector>

#include "diracsea/core.hpp"
#include "diracsea/evolution.hpp"
#include "diracsea/projector.hpp"

namespace diracsea {

/// A solution of one mode, fixed by its value at tau0.
struct Member {
  std::size_t mode_index = 0;
  Spinor psi0 = Spinor::Zero();
};

/// Finite family of negative-frequency solutions over a common scale function. Solutions of
/// different modes are orthogonal; within a mode (psi|chi) = 2 pi psi(tau0)^dagger chi(tau0).
class SolutionFamily {
 public:
  static constexpr double kSubspaceTolerance = 1e-8;

  /// Throws InvalidParameter if a member leaves the negative spectral subspace of its mode.
  SolutionFamily(std::vector<Mode> modes, ScaleFunction scale, std::vector<Member> members,
                 const Tolerances& tol = {});

  /// Same, reusing precomputed signature operators (one per mode).
  SolutionFamily(std::vector<Mode> modes, ScaleFunction scale, std::vector<Member> members,
                 std::vector<SignatureResult> signatures, const Tolerances& tol = {});

  /// One unit member per mode spanning its negative subspace.
  static SolutionFamily full_negative(std::vector<Mode> modes, ScaleFunction scale, const Tolerances& tol = {});

  const std::vector<Mode>& modes() const noexcept { return modes_; }
  const ScaleFunction& scale() const noexcept { return scale_; }
  const std::vector<Member>& members() const noexcept { return members_; }
  const std::vector<SignatureResult>& signatures() const noexcept { return signatures_; }
  const Tolerances& tolerances() const noexcept { return tol_; }
  std::size_t size() const noexcept { return members_.size(); }

  /// Gram matrix of the scalar products.
  const Eigen::MatrixXcd& gram() const noexcept { return gram_; }

  /// psi_j(tau) for every member.
  std::vector<Spinor> values_at(double tau) const;

 private:
  void validate();

  std::vector<Mode> modes_;
  ScaleFunction scale_;
  std::vector<Member> members_;
  std::vector<SignatureResult> signatures_;
  Tolerances tol_;
  Eigen::MatrixXcd gram_;
};

/// (psi|chi) for two members of the same mode family.
Complex scalar_product(const Member& a, const Member& b);

/// Gram-Schmidt within each mode; throws DegenerateFamily on a rank-deficient Gram matrix.
SolutionFamily orthonormalize(const SolutionFamily& family, double rank_tol = 1e-10);

struct CorrelationOperator {
  Eigen::MatrixXcd matrix;
  double tau = 0.0;
  std::vector<std::size_t> block;  ///< mode index of each row
};

/// F_jk = -psi_j(tau)^dagger sigma_3 psi_k(tau) within a mode, zero across modes.
CorrelationOperator local_correlation(const SolutionFamily& family, double tau);

/// P(x, y) = -sum_j psi_j(x) psi_j(y)^dagger sigma_3 per mode.
std::vector<Matrix2> regularized_kernel(const SolutionFamily& family, double tau_x, double tau_y);

/// int P(x, y) phi(y) R(y) dy for one mode block, by panel Gauss-Legendre quadrature over the
/// support of phi with the members evolved node by node.
Spinor kernel_apply(const SolutionFamily& family, std::size_t mode_index, double tau_x, const TestFunction& phi);

enum class CausalClass { Timelike, Spacelike, Lightlike };
const char* causal_class_name(CausalClass c);

/// Spectrum of fx fy: all real -> timelike; all non-real with equal modulus -> spacelike;
/// otherwise lightlike. An empty nontrivial spectrum counts as spacelike.
CausalClass causal_classify(const CorrelationOperator& fx, const CorrelationOperator& fy, double tol = 1e-8);

/// Nontrivial eigenvalues of fx fy (modulus above tol times ||fx|| ||fy||).
std::vector<Complex> nontrivial_spectrum(const Eigen::MatrixXcd& fx, const Eigen::MatrixXcd& fy, double tol = 1e-8);

}  // namespace diracsea

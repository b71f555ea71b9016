#include "diracsea/cfs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

namespace diracsea {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

std::vector<SignatureResult> compute_signatures(const std::vector<Mode>& modes, const ScaleFunction& scale,
                                                const Tolerances& tol) {
  std::vector<SignatureResult> out;
  out.reserve(modes.size());
  for (const auto& m : modes) out.push_back(signature_operator(m, scale, tol));
  return out;
}

// U^{tau, tau0} for every mode.
std::vector<Matrix2> propagators_at(const SolutionFamily& f, double tau) {
  std::vector<Matrix2> out;
  for (const auto& m : f.modes())
    out.push_back(evolve(m, f.scale(), m.tau0(), tau, f.tolerances().ode_tol).u.matrix());
  return out;
}

}  // namespace

SolutionFamily::SolutionFamily(std::vector<Mode> modes, ScaleFunction scale, std::vector<Member> members,
                               const Tolerances& tol)
    : modes_(std::move(modes)), scale_(std::move(scale)), members_(std::move(members)), tol_(tol) {
  signatures_ = compute_signatures(modes_, scale_, tol_);
  validate();
}

SolutionFamily::SolutionFamily(std::vector<Mode> modes, ScaleFunction scale, std::vector<Member> members,
                               std::vector<SignatureResult> signatures, const Tolerances& tol)
    : modes_(std::move(modes)),
      scale_(std::move(scale)),
      members_(std::move(members)),
      signatures_(std::move(signatures)),
      tol_(tol) {
  if (signatures_.size() != modes_.size())
    fail(ErrorKind::InvalidParameter, "one signature operator per mode is required");
  validate();
}

void SolutionFamily::validate() {
  if (modes_.empty()) fail(ErrorKind::InvalidParameter, "family needs at least one mode");
  const double tau0 = modes_.front().tau0();
  for (const auto& m : modes_)
    if (m.tau0() != tau0) fail(ErrorKind::InvalidParameter, "all modes must share tau0");
  std::vector<Hermitian2> negative;
  for (const auto& s : signatures_) negative.push_back(negative_projection(s, tol_.gap_tol));
  for (std::size_t j = 0; j < members_.size(); ++j) {
    const auto& mem = members_[j];
    if (mem.mode_index >= modes_.size()) fail(ErrorKind::InvalidParameter, "member refers to an unknown mode");
    const double norm = mem.psi0.norm();
    if (!(norm > 0.0) || !mem.psi0.allFinite()) fail(ErrorKind::InvalidParameter, "member spinor must be non-zero");
    const Spinor rest = mem.psi0 - negative[mem.mode_index].matrix() * mem.psi0;
    if (rest.norm() > kSubspaceTolerance * norm) {
      std::ostringstream os;
      os << "member " << j << " is not in the negative spectral subspace (residual " << rest.norm() / norm << ")";
      fail(ErrorKind::InvalidParameter, os.str());
    }
  }
  const auto n = static_cast<Eigen::Index>(members_.size());
  gram_ = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) gram_(j, k) = scalar_product(members_[j], members_[k]);
}

SolutionFamily SolutionFamily::full_negative(std::vector<Mode> modes, ScaleFunction scale, const Tolerances& tol) {
  auto sigs = compute_signatures(modes, scale, tol);
  std::vector<Member> members;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    negative_projection(sigs[i], tol.gap_tol);
    const Spinor v = sigs[i].eigvectors.matrix().col(0);
    members.push_back({i, v / std::sqrt(kTwoPi)});
  }
  return SolutionFamily(std::move(modes), std::move(scale), std::move(members), std::move(sigs), tol);
}

std::vector<Spinor> SolutionFamily::values_at(double tau) const {
  const auto u = propagators_at(*this, tau);
  std::vector<Spinor> out;
  for (const auto& m : members_) out.push_back(u[m.mode_index] * m.psi0);
  return out;
}

Complex scalar_product(const Member& a, const Member& b) {
  if (a.mode_index != b.mode_index) return 0.0;
  return kTwoPi * a.psi0.dot(b.psi0);
}

SolutionFamily orthonormalize(const SolutionFamily& family, double rank_tol) {
  std::vector<Member> out;
  for (const auto& mem : family.members()) {
    Member v = mem;
    const double scale = std::sqrt(scalar_product(mem, mem).real());
    // Two passes of modified Gram-Schmidt keep the result orthogonal to rounding.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : out) v.psi0 -= scalar_product(q, v) * q.psi0;
    const double norm = std::sqrt(scalar_product(v, v).real());
    if (!(norm > rank_tol * scale)) {
      fail(ErrorKind::DegenerateFamily, "Gram matrix is rank deficient");
    }
    v.psi0 /= norm;
    out.push_back(v);
  }
  return SolutionFamily(family.modes(), family.scale(), out, family.signatures(), family.tolerances());
}

CorrelationOperator local_correlation(const SolutionFamily& family, double tau) {
  const auto psi = family.values_at(tau);
  const auto n = static_cast<Eigen::Index>(psi.size());
  CorrelationOperator f;
  f.tau = tau;
  f.matrix = Eigen::MatrixXcd::Zero(n, n);
  const auto& members = family.members();
  for (Eigen::Index j = 0; j < n; ++j) {
    f.block.push_back(members[j].mode_index);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (members[j].mode_index != members[k].mode_index) continue;
      f.matrix(j, k) = -psi[j].dot(pauli::sigma3() * psi[k]);
    }
  }
  return f;
}

std::vector<Matrix2> regularized_kernel(const SolutionFamily& family, double tau_x, double tau_y) {
  const auto px = family.values_at(tau_x);
  const auto py = family.values_at(tau_y);
  std::vector<Matrix2> out(family.modes().size(), Matrix2::Zero());
  for (std::size_t j = 0; j < family.size(); ++j)
    out[family.members()[j].mode_index] -= px[j] * py[j].adjoint() * pauli::sigma3();
  return out;
}

Spinor kernel_apply(const SolutionFamily& family, std::size_t mode_index, double tau_x, const TestFunction& phi) {
  if (mode_index >= family.modes().size()) fail(ErrorKind::InvalidParameter, "unknown mode index");
  if (phi.is_zero()) return Spinor::Zero();
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const Mode& mode = family.modes()[mode_index];
  const ScaleFunction& scale = family.scale();
  const double tol = family.tolerances().ode_tol;
  const double a = phi.support_begin();
  const double b = phi.support_end();

  // Panels short enough that U varies by at most about half a radian across each.
  double f_max = 0.0;
  for (int i = 0; i <= 64; ++i) f_max = std::max(f_max, frequency(mode, scale, a + (b - a) * i / 64.0));
  const int panels = std::max(4, static_cast<int>(std::ceil(4.0 * f_max * (b - a))));
  std::vector<std::pair<double, double>> nodes;  // (tau, weight)
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  for (int p = 0; p < panels; ++p) {
    const double lo = a + (b - a) * p / panels;
    const double hi = a + (b - a) * (p + 1) / panels;
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < x.size(); ++i) {
      nodes.emplace_back(mid + half * x[i], w[i] * half);
      if (x[i] != 0.0) nodes.emplace_back(mid - half * x[i], w[i] * half);
    }
  }
  std::sort(nodes.begin(), nodes.end());

  std::vector<std::size_t> members;
  for (std::size_t j = 0; j < family.size(); ++j)
    if (family.members()[j].mode_index == mode_index) members.push_back(j);

  // c_j = int psi_j(y)^dagger sigma_3 phi(y) R(y) dy
  std::vector<Complex> c(members.size(), 0.0);
  Matrix2 u = evolve(mode, scale, mode.tau0(), nodes.front().first, tol).u.matrix();
  double t = nodes.front().first;
  for (const auto& [tau, weight] : nodes) {
    u = evolve(mode, scale, t, tau, tol).u.matrix() * u;
    t = tau;
    const Spinor g = pauli::sigma3() * phi(tau) * (scale(tau) * weight);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const Spinor psi = u * family.members()[members[i]].psi0;
      c[i] += psi.dot(g);
    }
  }
  const Matrix2 ux = evolve(mode, scale, mode.tau0(), tau_x, tol).u.matrix();
  Spinor out = Spinor::Zero();
  for (std::size_t i = 0; i < members.size(); ++i) out -= ux * family.members()[members[i]].psi0 * c[i];
  return out;
}

const char* causal_class_name(CausalClass c) {
  switch (c) {
    case CausalClass::Timelike: return "timelike";
    case CausalClass::Spacelike: return "spacelike";
    case CausalClass::Lightlike: return "lightlike";
  }
  return "unknown";
}

std::vector<Complex> nontrivial_spectrum(const Eigen::MatrixXcd& fx, const Eigen::MatrixXcd& fy, double tol) {
  if (fx.rows() != fy.rows() || fx.cols() != fy.cols() || fx.rows() != fx.cols())
    fail(ErrorKind::InvalidParameter, "correlation operators must have equal square shape");
  std::vector<Complex> out;
  if (fx.rows() == 0) return out;
  const double scale = spectral_norm(fx) * spectral_norm(fy);
  if (!(scale > 0.0)) return out;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(fx * fy, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) > tol * scale) out.push_back(es.eigenvalues()(i));
  return out;
}

CausalClass causal_classify(const CorrelationOperator& fx, const CorrelationOperator& fy, double tol) {
  const auto spec = nontrivial_spectrum(fx.matrix, fy.matrix, tol);
  if (spec.empty()) return CausalClass::Spacelike;
  const double scale = spectral_norm(fx.matrix) * spectral_norm(fy.matrix);
  const double cut = tol * scale;
  const bool all_real = std::all_of(spec.begin(), spec.end(), [&](Complex z) { return std::abs(z.imag()) <= cut; });
  if (all_real) return CausalClass::Timelike;
  const bool all_complex = std::all_of(spec.begin(), spec.end(), [&](Complex z) { return std::abs(z.imag()) > cut; });
  if (all_complex) {
    double lo = std::abs(spec.front());
    double hi = lo;
    for (const auto& z : spec) {
      lo = std::min(lo, std::abs(z));
      hi = std::max(hi, std::abs(z));
    }
    if (hi - lo <= cut) return CausalClass::Spacelike;
  }
  return CausalClass::Lightlike;
}

}  // namespace diracsea

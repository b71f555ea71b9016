#pragma once

// Embedded Dormand-Prince 5(4) stepper with error-per-unit-step control.
//
// The controller accepts a step when
//     max_i |err_i| / max(1, |y_i|) <= tol * |h|,
// so the accumulated local error over an interval of length L stays below tol * L.
// An optional step ceiling h_max(t) keeps the stepper resolving the oscillation
// period of the mode, and a post-step hook lets callers re-project onto the
// constraint manifold (unitary group, SO(3)) after every accepted step.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "diracsea/core.hpp"

namespace diracsea {

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  double last_step = 0.0;
};

template <typename Vec>
class DormandPrince {
 public:
  using Rhs = std::function<void(double, const Vec&, Vec&)>;
  using Ceiling = std::function<double(double)>;
  using Hook = std::function<void(double, Vec&)>;

  explicit DormandPrince(double tol, long max_steps = 50'000'000) : tol_(tol), max_steps_(max_steps) {}

  /// Integrates y from t0 to t1 (either direction). `h_init` may carry the last step of a
  /// previous call for a warm restart; 0 picks a default.
  IntegrationStats integrate(const Rhs& rhs, Vec& y, double t0, double t1, const Ceiling& ceiling = {},
                             const Hook& after_step = {}, double h_init = 0.0) const {
    IntegrationStats stats;
    if (t0 == t1) return stats;
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);

    double h = h_init > 0.0 ? h_init : std::min(span, 1e-2);
    double t = t0;
    const long n = y.size();
    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n), err(n);
    rhs(t, y, k1);

    while (dir * (t1 - t) > 0.0) {
      if (stats.accepted + stats.rejected > max_steps_)
        fail(ErrorKind::IntegrationFailure, "step budget exhausted");
      if (ceiling) h = std::min(h, ceiling(t));
      const double remaining = std::abs(t1 - t);
      bool last = false;
      if (h >= remaining) {
        h = remaining;
        last = true;
      }
      const double s = dir * h;

      tmp = y + s * (a21 * k1);
      rhs(t + c2 * s, tmp, k2);
      tmp = y + s * (a31 * k1 + a32 * k2);
      rhs(t + c3 * s, tmp, k3);
      tmp = y + s * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * s, tmp, k4);
      tmp = y + s * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * s, tmp, k5);
      tmp = y + s * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(t + s, tmp, k6);
      y5 = y + s * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      rhs(t + s, y5, k7);
      err = s * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double ratio = 0.0;
      for (long i = 0; i < n; ++i) {
        const double scale = std::max(1.0, std::max(std::abs(y[i]), std::abs(y5[i])));
        ratio = std::max(ratio, std::abs(err[i]) / scale);
      }
      if (!std::isfinite(ratio) || !y5.allFinite()) {
        std::ostringstream os;
        os << "non-finite state at tau = " << t;
        fail(ErrorKind::IntegrationFailure, os.str());
      }
      ratio /= tol_ * h;

      if (ratio <= 1.0) {
        t = last ? t1 : t + s;
        y = y5;
        if (after_step) {
          after_step(t, y);
          rhs(t, y, k1);
        } else {
          k1 = k7;
        }
        ++stats.accepted;
        stats.last_step = h;
        const double grow = ratio == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(ratio, -0.25));
        h *= std::max(0.2, grow);
      } else {
        ++stats.rejected;
        h *= std::max(0.1, 0.9 * std::pow(ratio, -0.25));
        if (h < 1e-15 * std::max(1.0, std::abs(t)))
          fail(ErrorKind::IntegrationFailure, "step size underflow");
      }
    }
    return stats;
  }

  double tolerance() const noexcept { return tol_; }

 private:
  double tol_;
  long max_steps_;

  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                          a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                          b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  // b - b_hat
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
};

}  // namespace diracsea

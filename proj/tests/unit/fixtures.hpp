#pragma once

#include <cmath>

#include "diracsea/core.hpp"

namespace fixtures {

/// R(tau) = r on the whole interval; WKB is exact for it.
inline diracsea::ScaleFunction constant_scale(double r) {
  diracsea::SmoothProfile p;
  p.g = [](double) { return 1.0; };
  p.dg = [](double) { return 0.0; };
  p.ddg = [](double) { return 0.0; };
  p.monotone_pieces = 1;
  p.name = "constant";
  return diracsea::ScaleFunction::smooth(p, r);
}

/// R(tau) = r sin(tau)^2, monotone on two pieces.
inline diracsea::ScaleFunction sine_squared_scale(double r) {
  diracsea::SmoothProfile p;
  p.g = [](double t) { return std::sin(t) * std::sin(t); };
  p.dg = [](double t) { return std::sin(2.0 * t); };
  p.ddg = [](double t) { return 2.0 * std::cos(2.0 * t); };
  p.monotone_pieces = 2;
  p.name = "sine_squared";
  return diracsea::ScaleFunction::smooth(p, r);
}

}  // namespace fixtures

#include "pso_escape/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pso_escape/error.hpp"

namespace pso_escape {

double TrapezoidDensity::pdf(double v) const {
  if (degenerate()) throw DegenerateError("velocity distribution is a point mass; use probability()");
  const auto& k = knots;
  if (v <= k[0] || v > k[3]) return 0.0;
  if (v <= k[1]) return height * (v - k[0]) / (k[1] - k[0]);
  if (v <= k[2]) return height;
  return height * (k[3] - v) / (k[3] - k[2]);
}

double TrapezoidDensity::cdf(double v) const noexcept {
  if (degenerate()) return v >= *point_mass ? 1.0 : 0.0;
  const auto& k = knots;
  if (v <= k[0]) return 0.0;
  if (v >= k[3]) return 1.0;
  const double rise = 0.5 * height * (k[1] - k[0]);
  const double before_fall = 1.0 - 0.5 * height * (k[3] - k[2]);
  if (v <= k[1]) {
    const double d = v - k[0];
    return 0.5 * height * d * d / (k[1] - k[0]);
  }
  if (v <= k[2]) return std::min(rise + height * (v - k[1]), before_fall);
  const double d = k[3] - v;
  return std::clamp(1.0 - 0.5 * height * d * d / (k[3] - k[2]), 0.0, 1.0);
}

double TrapezoidDensity::probability(double a, double b) const {
  if (std::isnan(a) || std::isnan(b) || a > b)
    throw std::invalid_argument("probability: need a <= b");
  if (degenerate()) return (a <= *point_mass && *point_mass <= b) ? 1.0 : 0.0;
  const auto& k = knots;
  double mass = 0.0;
  // Integrate each linear piece separately in product form; differencing the
  // cdf would lose all precision on narrow intervals.
  if (k[1] > k[0]) {
    const double p = std::max(a, k[0]);
    const double q = std::min(b, k[1]);
    if (q > p) mass += height / (2.0 * (k[1] - k[0])) * (q - p) * ((q - k[0]) + (p - k[0]));
  }
  {
    const double p = std::max(a, k[1]);
    const double q = std::min(b, k[2]);
    if (q > p) mass += height * (q - p);
  }
  if (k[3] > k[2]) {
    const double p = std::max(a, k[2]);
    const double q = std::min(b, k[3]);
    if (q > p) mass += height / (2.0 * (k[3] - k[2])) * (q - p) * ((k[3] - q) + (k[3] - p));
  }
  return std::clamp(mass, 0.0, 1.0);
}

double TrapezoidDensity::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0, 1]");
  if (degenerate()) return *point_mass;
  const auto& k = knots;
  const double rise = 0.5 * height * (k[1] - k[0]);
  const double fall = 0.5 * height * (k[3] - k[2]);
  if (p <= rise && k[1] > k[0]) return k[0] + std::sqrt(2.0 * p * (k[1] - k[0]) / height);
  if (p <= 1.0 - fall || k[3] == k[2])
    return std::min(k[1] + (p - rise) / height, k[2]);
  return k[3] - std::sqrt(2.0 * (1.0 - p) * (k[3] - k[2]) / height);
}

TrapezoidDensity velocity_support(const AgentState& s, const SwarmParams& p) {
  const double to_pb = p.c1 * (p.pb - s.x);
  const double to_gb = p.c2 * (p.gb - s.x);
  const double base = p.omega * s.v;
  TrapezoidDensity out;
  if (to_pb == 0.0 && to_gb == 0.0) {
    out.point_mass = base;
    return out;
  }
  const double lo = std::min(to_pb, to_gb);
  const double hi = std::max(to_pb, to_gb);
  std::array<double, 4> offsets;
  if (s.x <= p.pb) {
    offsets = {0.0, lo, hi, lo + hi};
  } else if (s.x >= p.gb) {
    offsets = {lo + hi, lo, hi, 0.0};
  } else if (lo + hi > 0.0) {
    offsets = {lo, 0.0, lo + hi, hi};
  } else {
    offsets = {lo, lo + hi, 0.0, hi};
  }
  for (std::size_t i = 0; i < 4; ++i) out.knots[i] = base + offsets[i];
  std::sort(out.knots.begin(), out.knots.end());
  const auto& k = out.knots;
  out.height = 2.0 / (k[3] + k[2] - k[1] - k[0]);
  return out;
}

double density(const AgentState& state, const SwarmParams& params, double v) {
  return velocity_support(state, params).pdf(v);
}

double cdf(const AgentState& state, const SwarmParams& params, double v) {
  return velocity_support(state, params).cdf(v);
}

double interval_prob(const AgentState& state, const SwarmParams& params, double a, double b) {
  return velocity_support(state, params).probability(a, b);
}

double min_support_width(const SwarmParams& p) noexcept {
  return std::min({p.c1, p.c2, 1.0}) * (p.gb - p.pb);
}

double mass_floor(const SwarmParams& p, double x) {
  if (!(x >= 0.0)) throw ValidationError("mass_floor: width must be nonnegative");
  const double w = p.width();
  const double linear = x / (2.0 * std::max(p.c1, p.c2) * w);
  const double quadratic = x * x / (2.0 * p.c1 * p.c2 * w * w);
  return std::min(linear, quadratic);
}

double velocity_cap(const SwarmParams& p) noexcept { return (p.c1 + p.c2 + 1.0) * p.width(); }

double kick_probability_floor(const SwarmParams& p) {
  if (!(p.pb < p.gb)) throw DegenerateError("pb == gb: minimum support width is zero");
  return mass_floor(p, min_support_width(p) / 4.0);
}

}  // namespace pso_escape

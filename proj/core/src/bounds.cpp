#include "pso_escape/bounds.hpp"

#include <cmath>
#include <limits>

#include "pso_escape/error.hpp"
#include "pso_escape/kernel.hpp"

namespace pso_escape {

namespace {

double checked_support_width(const SwarmParams& p) {
  p.validate();
  const double d = min_support_width(p);
  if (!(d > 1e-12 * p.width()))
    throw DegenerateError("pb == gb (or nearly): minimum support width is zero");
  return d;
}

std::int64_t ceil_count(double x) {
  if (!std::isfinite(x) || x > 9.0e18) throw DegenerateError("step count overflows");
  return static_cast<std::int64_t>(std::ceil(x));
}

double log_floor(const SwarmParams& p, double x) { return std::log(mass_floor(p, x)); }

}  // namespace

void OscillationWindow::validate() const {
  if (!(min_fraction > 0.0 && min_fraction < max_fraction && max_fraction <= 0.5))
    throw ValidationError("oscillation window needs 0 < min_fraction < max_fraction <= 1/2");
}

LegBound inertia_bound(const SwarmParams& p) {
  const double d = checked_support_width(p);
  const double w = p.width();
  LegBound out;
  out.steps = 13 * ceil_count(w / d);
  out.log_prob = static_cast<double>(out.steps) * log_floor(p, d * d / (128.0 * w));
  return out;
}

LegBound turnaround_bound(const SwarmParams& p, const OscillationWindow& window) {
  const double d = checked_support_width(p);
  if (!(window.min_fraction > 0.0 && window.min_fraction <= window.max_fraction &&
        window.max_fraction <= 0.5))
    throw ValidationError("oscillation window needs 0 < min_fraction <= max_fraction <= 1/2");
  LegBound out;
  out.steps = 2 * ceil_count(velocity_cap(p) / d);
  out.log_prob = log_floor(p, (window.max_fraction - window.min_fraction) * d) +
                 static_cast<double>(out.steps) * log_floor(p, d / 4.0);
  return out;
}

LegBound descent_bound(const SwarmParams& p, const GoalRegion& goal) {
  const double d = checked_support_width(p);
  goal.validate(p);
  const double w = p.width();
  LegBound out;
  out.steps = ceil_count(80.0 * w / d);
  out.log_prob = static_cast<double>(out.steps) * log_floor(p, 1e-5 * d * d * d / (w * w)) +
                 log_floor(p, goal.width());
  return out;
}

EscapeBounds escape_bounds(const SwarmParams& p, const GoalRegion& goal) {
  p.validate();
  if (p.omega != 1.0) throw NotApplicableError("bound not applicable: requires omega == 1");
  const double d = checked_support_width(p);
  goal.validate(p);
  const double w = p.width();
  EscapeBounds out;
  out.inertia = inertia_bound(p);
  out.turnaround = turnaround_bound(p, OscillationWindow{});
  out.descent = descent_bound(p, goal);
  out.total.steps = ceil_count((2.0 * (p.c1 + p.c2) + 100.0 * w) / d);
  out.total.log_prob =
      static_cast<double>(out.total.steps) * log_floor(p, 1e-5 * d * d * d / (w * w)) +
      log_floor(p, goal.width());
  return out;
}

double repeated_escape_log_prob(double log_p, std::uint64_t n) {
  if (n == 0) throw ValidationError("repeated_escape_log_prob: n must be at least 1");
  if (std::isnan(log_p) || log_p > 0.0) throw ValidationError("log probability must be <= 0");
  if (n == 1 || log_p == -std::numeric_limits<double>::infinity()) return log_p;
  if (log_p == 0.0) return 0.0;
  // a = -n log(1 - p) is the exponent of the survival probability; carry log a.
  const double p = std::exp(log_p);
  double log_a;
  if (p > 1e-8) {
    log_a = std::log(-std::log1p(-p));
  } else {
    log_a = log_p + p / 2.0;  // -log(1-p) = p (1 + p/2 + ...)
  }
  log_a += std::log(static_cast<double>(n));
  if (log_a < -20.0) {
    const double a = std::exp(log_a);
    return log_a + std::log1p(-a / 2.0);
  }
  const double a = std::exp(log_a);
  if (a <= std::log(2.0)) return std::log(-std::expm1(-a));
  return std::log1p(-std::exp(-a));
}

double repeated_escape_log_prob(const EscapeBounds& bounds, std::uint64_t n) {
  return repeated_escape_log_prob(bounds.total.log_prob, n);
}

bool in_turnaround_window(double prev_x, const AgentState& s, const SwarmParams& p,
                          const OscillationWindow& window) {
  if (std::abs(prev_x - p.ub) > 1e-12) return false;
  const double d = min_support_width(p);
  return -window.max_fraction * d < s.v && s.v < -window.min_fraction * d;
}

}  // namespace pso_escape

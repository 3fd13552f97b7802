#include "pso_escape/model.hpp"

#include <cmath>
#include <sstream>

#include "pso_escape/error.hpp"

namespace pso_escape {

namespace {

bool finite(double x) { return std::isfinite(x); }

[[noreturn]] void reject(const std::string& what) { throw ValidationError(what); }

}  // namespace

void SwarmParams::validate() const {
  if (!finite(omega) || !finite(c1) || !finite(c2) || !finite(lb) || !finite(ub) ||
      !finite(pb) || !finite(gb))
    reject("swarm parameters must be finite");
  if (!(omega > 0.0 && omega <= 1.0)) {
    std::ostringstream msg;
    msg << "omega must lie in (0, 1], got " << omega;
    reject(msg.str());
  }
  if (!(c1 > 0.0) || !(c2 > 0.0)) reject("learning factors c1, c2 must be positive");
  if (!(lb < ub)) reject("lb must be smaller than ub");
  if (!(lb <= pb && pb <= gb && gb <= ub)) reject("need lb <= pb <= gb <= ub");
}

void GoalRegion::validate(const SwarmParams& params) const {
  if (!finite(lower) || !finite(upper)) reject("goal endpoints must be finite");
  if (!(lower < upper)) reject("goal region must have positive width");
  if (!(params.lb <= lower && upper <= params.ub)) reject("goal region must lie inside [lb, ub]");
}

double clamp_position(double x_raw, double lb, double ub) noexcept {
  if (x_raw <= lb) return lb;
  if (x_raw >= ub) return ub;
  return x_raw;
}

AgentState step(const AgentState& s, const SwarmParams& p, double r1, double r2) noexcept {
  const double v = p.omega * s.v + p.c1 * r1 * (p.pb - s.x) + p.c2 * r2 * (p.gb - s.x);
  return {clamp_position(s.x + v, p.lb, p.ub), v};
}

void check_state(const AgentState& state, const SwarmParams& params) {
  if (!finite(state.x) || !finite(state.v)) reject("agent state must be finite");
  if (state.x < params.lb || state.x > params.ub) reject("agent position outside [lb, ub]");
}

}  // namespace pso_escape

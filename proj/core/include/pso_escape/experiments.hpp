#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "pso_escape/chains.hpp"
#include "pso_escape/model.hpp"
#include "pso_escape/rng.hpp"

namespace pso_escape {

/// Independent uniforms for x(0) and v(0); a zero-width range is a point mass.
struct InitialDistribution {
  Interval x;
  Interval v;

  void validate(const SwarmParams& params) const;
  AgentState sample(RandomStream& rng) const noexcept;
};

struct EscapeCurve {
  std::vector<std::size_t> t_values;
  std::vector<double> probs;   // P{T <= t}
  std::vector<double> std_errors;  // binomial standard error
  std::size_t n_runs = 0;
  SwarmParams params;
  GoalRegion goal;
  InitialDistribution init;
};

struct PeEstimate {
  double pe_hat = 0.0;
  double std_error = 0.0;
  std::size_t n_runs = 0;
  std::size_t iter_cap = 0;
};

struct PositionHistogram {
  std::size_t t = 0;
  std::vector<double> bin_edges;  // n_bins + 1 edges over (lb, ub)
  std::vector<double> masses;
  double atom_lb = 0.0;
  double atom_ub = 0.0;
  double goal_mass = 0.0;
};

enum class BehaviorKind { inertial_right, inertial_left, turn_left, turn_right, stationary };

struct BehaviorSegment {
  BehaviorKind kind;
  std::size_t start_iter;
  std::size_t end_iter;  // inclusive
  friend bool operator==(const BehaviorSegment&, const BehaviorSegment&) = default;
};

/// Replications run on `jobs` threads; results do not depend on it.
struct RunOptions {
  unsigned jobs = 1;
};

double binomial_stderr(double p, std::size_t n) noexcept;

EscapeCurve estimate_escape_curve(const SwarmParams& params, const GoalRegion& goal,
                                  const InitialDistribution& init, std::size_t n_runs,
                                  std::size_t max_iters, std::uint64_t seed, RunOptions opts = {});

PeEstimate estimate_pe(const SwarmParams& params, const GoalRegion& goal,
                       const InitialDistribution& init, std::size_t n_runs,
                       std::size_t iter_cap, std::uint64_t seed, RunOptions opts = {});

std::vector<PositionHistogram> position_distribution(const SwarmParams& params,
                                                     const AgentState& initial,
                                                     const GoalRegion& goal, std::size_t t_max,
                                                     std::size_t n_runs, std::size_t n_bins,
                                                     std::uint64_t seed, RunOptions opts = {});

std::vector<BehaviorSegment> segment_behavior(const Trajectory& traj);

const char* to_string(BehaviorKind kind) noexcept;

// ---- full swarm ------------------------------------------------------------

double rastrigin(std::span<const double> x) noexcept;

using Objective = std::function<double(std::span<const double>)>;

/// Defaults are the Clerc-Kennedy constriction-equivalent constants.
struct PsoSettings {
  double omega = 0.729;
  double c1 = 1.49445;
  double c2 = 1.49445;
};

/// Personal-best positions and values recorded for t = 0..t_max.
class PbestHistory {
 public:
  PbestHistory(std::size_t n_agents, std::size_t dims, std::size_t t_max);

  std::size_t agents() const noexcept { return n_agents_; }
  std::size_t dims() const noexcept { return dims_; }
  std::size_t t_max() const noexcept { return t_max_; }

  double& position(std::size_t t, std::size_t agent, std::size_t dim) {
    return positions_[(t * n_agents_ + agent) * dims_ + dim];
  }
  double position(std::size_t t, std::size_t agent, std::size_t dim) const {
    return positions_[(t * n_agents_ + agent) * dims_ + dim];
  }
  double& value(std::size_t t, std::size_t agent) { return values_[t * n_agents_ + agent]; }
  double value(std::size_t t, std::size_t agent) const { return values_[t * n_agents_ + agent]; }
  double& gbest_value(std::size_t t) { return gbest_[t]; }
  double gbest_value(std::size_t t) const { return gbest_[t]; }

 private:
  std::size_t n_agents_;
  std::size_t dims_;
  std::size_t t_max_;
  std::vector<double> positions_;
  std::vector<double> values_;
  std::vector<double> gbest_;
};

/// Synchronous global-best PSO with position clamping; velocities start at zero.
PbestHistory run_full_pso(const Objective& objective, std::span<const double> lb,
                          std::span<const double> ub, std::size_t n_agents, std::size_t dims,
                          std::size_t t_max, const PsoSettings& settings, std::uint64_t seed);

struct Plateau {
  std::size_t start;
  std::size_t end;  // inclusive
  double level;
  long nearest_integer;
  std::size_t length() const noexcept { return end - start + 1; }
};

struct StagnationEntry {
  std::size_t agent;
  std::size_t dim;
  std::vector<Plateau> plateaus;
};

std::vector<StagnationEntry> stagnation_report(const PbestHistory& history, double tolerance);

struct RastriginDemoConfig {
  std::size_t dims = 2;
  std::size_t agents = 5;
  std::size_t iters = 200;
  std::size_t runs = 50;
  double lower = -5.0;
  double upper = 5.0;
  PsoSettings settings;
  double tolerance = 0.1;
  std::size_t min_plateau = 10;
  double success_below = 1.0;  // final gbest objective counted as reaching the optimum
  std::uint64_t seed = 1;      // run r uses splitmix64(seed + r)
};

struct RastriginDemoRun {
  std::uint64_t seed = 0;
  double gbest = 0.0;
  std::size_t plateau_pairs = 0;  // agent-dimensions with a long enough plateau
  std::size_t pairs = 0;
  bool success = false;
  bool all_plateau() const noexcept { return plateau_pairs == pairs; }
};

std::vector<RastriginDemoRun> rastrigin_demo(const RastriginDemoConfig& config, RunOptions opts = {});

// ---- CSV -------------------------------------------------------------------

/// Columns omega,c1,c2,pb,gb identify the curve, then t,prob,stderr.
void write_curves_csv(std::ostream& out, std::span<const EscapeCurve> curves);
void write_histogram_csv(std::ostream& out, std::span<const PositionHistogram> hists);
void write_atoms_csv(std::ostream& out, std::span<const PositionHistogram> hists);

}  // namespace pso_escape

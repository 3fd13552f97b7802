#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pso_escape/chains.hpp"
#include "pso_escape/experiments.hpp"
#include "pso_escape/kernel.hpp"
#include "pso_escape/rng.hpp"

namespace pso_escape {

// ---- random instances ------------------------------------------------------

/// Valid parameters with pb < gb: lb in [-10, 10], width in [1, 50], c1, c2 in [0.3, 3].
SwarmParams random_params(RandomStream& rng, double omega = 1.0);

/// x uniform on [lb, ub], v uniform on [-width, width].
AgentState random_state(RandomStream& rng, const SwarmParams& params);

// ---- kernel suite ----------------------------------------------------------

/// Five-point Gauss-Legendre on every knot piece; exact for the trapezoid.
double density_mass(const TrapezoidDensity& density);

/// Kolmogorov-Smirnov distance between the sample and the density. Sorts `samples`.
double ks_statistic(std::vector<double>& samples, const TrapezoidDensity& density);

struct KernelCheckConfig {
  std::size_t cases = 10000;
  std::size_t ks_cases = 20;
  std::size_t ks_samples = 1000000;
  double omega = 1.0;
  std::uint64_t seed = 1;
};

struct KernelCheckRow {
  std::size_t index = 0;
  SwarmParams params;
  AgentState state;
  double mass_error = 0.0;          // |quadrature - 1|
  double width_margin = 0.0;        // support width - min_support_width
  double containment_margin = 0.0;  // distance of v inside the support, negative outside
  double floor_margin = 0.0;        // interval_prob - mass_floor on a random subinterval
  double ks = -1.0;                 // negative when not sampled
};

struct KernelThresholds {
  double mass_error = 1e-9;
  double ks = 0.005;
};

std::vector<KernelCheckRow> kernel_check(const KernelCheckConfig& config, RunOptions opts = {});

/// Rows that break a threshold. Containment is only enforced when omega == 1.
std::size_t kernel_check_failures(const std::vector<KernelCheckRow>& rows,
                                  const KernelThresholds& limits = {});

// ---- chain fuzz ------------------------------------------------------------

enum class ChainStep { inertia, turnaround, descent };

const char* to_string(ChainStep step) noexcept;

struct ChainFuzzConfig {
  std::size_t cases = 10000;  // per step
  std::uint64_t seed = 1;
  double widen = 1.0;  // fault injection when > 1
};

struct ChainFuzzStats {
  ChainStep step = ChainStep::inertia;
  std::size_t cases = 0;
  std::size_t feasible = 0;
  std::size_t over_cap = 0;  // longer than the step's iteration bound
  std::size_t errors = 0;    // builder threw
  double worst_slack = 0.0;
  double max_length_ratio = 0.0;  // chain length / iteration bound
  std::map<std::string, std::size_t> failures;  // first failing condition -> count

  bool all_pass() const noexcept { return feasible == cases && over_cap == 0 && errors == 0; }
};

/// Builds a random instance for the step from case stream `index`.
ChainSpec random_chain(ChainStep step, std::uint64_t seed, std::size_t index, SwarmParams& params,
                       std::int64_t& cap);

std::array<ChainFuzzStats, 3> fuzz_chains(const ChainFuzzConfig& config, RunOptions opts = {});

}  // namespace pso_escape

#include <algorithm>
#include <cmath>
#include <limits>

#include "pso_escape/error.hpp"
#include "pso_escape/experiments.hpp"
#include "parallel.hpp"

namespace pso_escape {

PbestHistory::PbestHistory(std::size_t n_agents, std::size_t dims, std::size_t t_max)
    : n_agents_(n_agents),
      dims_(dims),
      t_max_(t_max),
      positions_((t_max + 1) * n_agents * dims, 0.0),
      values_((t_max + 1) * n_agents, 0.0),
      gbest_(t_max + 1, 0.0) {}

PbestHistory run_full_pso(const Objective& objective, std::span<const double> lb,
                          std::span<const double> ub, std::size_t n_agents, std::size_t dims,
                          std::size_t t_max, const PsoSettings& settings, std::uint64_t seed) {
  if (n_agents == 0 || dims == 0) throw ValidationError("need at least one agent and one dimension");
  if (lb.size() != dims || ub.size() != dims) throw ValidationError("bound vectors must have length dims");
  for (std::size_t j = 0; j < dims; ++j)
    if (!(lb[j] < ub[j])) throw ValidationError("need lb < ub in every dimension");
  if (!(settings.omega > 0.0 && settings.omega <= 1.0) || !(settings.c1 > 0.0) ||
      !(settings.c2 > 0.0))
    throw ValidationError("need 0 < omega <= 1 and positive learning factors");

  RandomStream rng(seed, 0);
  PbestHistory hist(n_agents, dims, t_max);
  std::vector<double> x(n_agents * dims), v(n_agents * dims, 0.0), pbest(n_agents * dims);
  std::vector<double> pbest_value(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i)
    for (std::size_t j = 0; j < dims; ++j) x[i * dims + j] = rng.uniform(lb[j], ub[j]);
  pbest = x;

  std::size_t best = 0;
  for (std::size_t i = 0; i < n_agents; ++i) {
    pbest_value[i] = objective(std::span<const double>(&x[i * dims], dims));
    if (pbest_value[i] < pbest_value[best]) best = i;
  }
  std::vector<double> gbest(pbest.begin() + best * dims, pbest.begin() + (best + 1) * dims);
  double gbest_value = pbest_value[best];

  auto snapshot = [&](std::size_t t) {
    for (std::size_t i = 0; i < n_agents; ++i) {
      for (std::size_t j = 0; j < dims; ++j) hist.position(t, i, j) = pbest[i * dims + j];
      hist.value(t, i) = pbest_value[i];
    }
    hist.gbest_value(t) = gbest_value;
  };
  snapshot(0);

  for (std::size_t t = 1; t <= t_max; ++t) {
    for (std::size_t i = 0; i < n_agents; ++i) {
      for (std::size_t j = 0; j < dims; ++j) {
        const std::size_t k = i * dims + j;
        const double r1 = rng();
        const double r2 = rng();
        v[k] = settings.omega * v[k] + settings.c1 * r1 * (pbest[k] - x[k]) +
               settings.c2 * r2 * (gbest[j] - x[k]);
        x[k] = std::clamp(x[k] + v[k], lb[j], ub[j]);
      }
      const double f = objective(std::span<const double>(&x[i * dims], dims));
      if (f < pbest_value[i]) {
        pbest_value[i] = f;
        std::copy_n(&x[i * dims], dims, &pbest[i * dims]);
      }
    }
    // gbest moves only once every agent has moved.
    for (std::size_t i = 0; i < n_agents; ++i) {
      if (pbest_value[i] < gbest_value) {
        gbest_value = pbest_value[i];
        std::copy_n(&pbest[i * dims], dims, gbest.begin());
      }
    }
    snapshot(t);
  }
  return hist;
}

std::vector<StagnationEntry> stagnation_report(const PbestHistory& history, double tolerance) {
  if (!(tolerance > 0.0)) throw ValidationError("stagnation tolerance must be positive");
  std::vector<StagnationEntry> out;
  const std::size_t steps = history.t_max() + 1;
  for (std::size_t i = 0; i < history.agents(); ++i) {
    for (std::size_t j = 0; j < history.dims(); ++j) {
      StagnationEntry entry{i, j, {}};
      std::size_t start = 0;
      double lo = history.position(0, i, j);
      double hi = lo;
      auto close = [&](std::size_t end) {
        const double level = 0.5 * (lo + hi);
        entry.plateaus.push_back({start, end, level, std::lround(level)});
      };
      for (std::size_t t = 1; t < steps; ++t) {
        const double x = history.position(t, i, j);
        const double new_lo = std::min(lo, x);
        const double new_hi = std::max(hi, x);
        if (new_hi - new_lo <= 2.0 * tolerance) {
          lo = new_lo;
          hi = new_hi;
          continue;
        }
        close(t - 1);
        start = t;
        lo = hi = x;
      }
      close(steps - 1);
      out.push_back(std::move(entry));
    }
  }
  return out;
}

std::vector<RastriginDemoRun> rastrigin_demo(const RastriginDemoConfig& config, RunOptions opts) {
  if (config.runs == 0) throw ValidationError("rastrigin demo needs at least one run");
  if (!(config.lower < config.upper)) throw ValidationError("rastrigin demo needs lower < upper");
  const std::vector<double> lb(config.dims, config.lower);
  const std::vector<double> ub(config.dims, config.upper);
  std::vector<RastriginDemoRun> runs(config.runs);
  detail::for_each_chunk(config.runs, opts.jobs, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t r = begin; r < end; ++r) {
      auto& run = runs[r];
      run.seed = splitmix64(config.seed + r);
      const auto hist = run_full_pso([](std::span<const double> x) { return rastrigin(x); }, lb, ub,
                                     config.agents, config.dims, config.iters, config.settings,
                                     run.seed);
      run.gbest = hist.gbest_value(config.iters);
      run.success = run.gbest < config.success_below;
      for (const auto& entry : stagnation_report(hist, config.tolerance)) {
        ++run.pairs;
        const bool long_enough = std::any_of(entry.plateaus.begin(), entry.plateaus.end(),
                                             [&](const Plateau& p) { return p.length() >= config.min_plateau; });
        run.plateau_pairs += long_enough;
      }
    }
  });
  return runs;
}

}  // namespace pso_escape

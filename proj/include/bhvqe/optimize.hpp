#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bhvqe {

enum class OptimizerKind { QuasiNewton, CmaEs };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::QuasiNewton;
  int max_evaluations = 1000;
  double init_range = 0.05;  // symmetric interval for init_params
  double fd_step = 1e-6;     // central-difference step (quasi-Newton)
  double sigma0 = 0.05;      // initial step size (CMA-ES)
  double tolerance = 1e-12;  // quasi-Newton |delta cost| stop
  std::uint64_t seed = 0;

  // Throws optimize_error on non-positive budget, steps, ranges, or a
  // negative tolerance.
  void validate() const;
};

struct Evaluation {
  std::uint64_t params_hash;  // FNV-1a over the raw parameter bytes
  double cost;
};

struct OptimizationTrace {
  std::vector<Evaluation> evaluations;  // one entry per cost call, in order
  std::vector<double> best_params;
  double best_cost = 0.0;  // minimum recorded cost
  int evaluation_count = 0;
  std::string terminated_reason;  // budget | tolerance | sigma_collapse | stalled
};

using CostFunction = std::function<double(std::span<const double>)>;

std::uint64_t params_hash(std::span<const double> params);

// Uniform i.i.d. draw from [-range, +range]^dim. Throws std::domain_error
// for range <= 0 or dim < 1.
std::vector<double> init_params(int dim, double range, std::uint64_t seed);

// Minimize starting from the given point. Every cost call is budgeted and
// recorded; the budget is never exceeded, mid-step or not. Evaluation is
// sequential, so the trace order is the budget accounting order. A
// non-finite cost value aborts with optimize_error.
OptimizationTrace minimize_from(const CostFunction& cost,
                                std::vector<double> initial,
                                const OptimizerConfig& config);

// Like minimize_from, starting from init_params(dim, config.init_range,
// config.seed).
OptimizationTrace minimize(const CostFunction& cost, int dim,
                           const OptimizerConfig& config);

// One row per evaluation: eval,cost.
void write_trace_csv(const OptimizationTrace& trace, std::ostream& os);

}  // namespace bhvqe

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bhvqe/ansatz.hpp"
#include "bhvqe/bh_model.hpp"
#include "bhvqe/measure.hpp"
#include "bhvqe/optimize.hpp"
#include "bhvqe/state_vector.hpp"

namespace bhvqe {

enum class PrepKind { Monomodal, Bimodal, Explicit };

// MONOMODAL parks every boson in mode 0. BIMODAL splits them across two
// designated modes: (0,1) on two sites, (0,2) otherwise; an odd total puts
// the extra boson on the first designated mode. EXPLICIT is a caller-chosen
// Fock configuration.
struct InitialStatePrep {
  PrepKind kind = PrepKind::Monomodal;
  Configuration explicit_config;  // EXPLICIT only
};

StateVector prepare_initial_state(const InitialStatePrep& prep,
                                  std::shared_ptr<const FockBasis> basis);

// |<a|b>|^2. Throws on a basis mismatch or unnormalized arguments.
double fidelity(const StateVector& a, const StateVector& b);

// Single-vector fidelity against the ground state, except when ED flagged a
// near-degenerate pair: then the squared projection onto the two-dimensional
// ground subspace, so either cat branch scores fairly.
double graded_fidelity(const StateVector& psi, const GroundState& gs);

enum class CostKind { Infidelity, EnergyExact, EnergySampled };

struct ExperimentSpec {
  BHModel model;
  AnsatzSpec ansatz;
  InitialStatePrep prep;
  CostKind cost = CostKind::Infidelity;
  std::int64_t shots = 0;       // EnergySampled: shots per cost evaluation
  bool infinite_shots = false;  // EnergySampled: analytic-expectation switch
  bool colored_plan = false;    // EnergySampled: pack disjoint edges
  OptimizerConfig optimizer;
  int restarts = 5;
  double success_threshold = 0.99;  // scan_layers acceptance level
  std::uint64_t seed = 0;           // master seed; per-restart streams derive

  void validate() const;
};

struct RunResult {
  std::vector<double> best_params;
  double fidelity = 0.0;     // graded, recomputed exactly from best_params
  double energy = 0.0;       // exact <H> at best_params
  double delta_e = 0.0;      // energy - ground_energy
  double ground_energy = 0.0;
  OptimizationTrace trace;   // the winning restart's trace
  std::uint64_t seed = 0;
  int winning_restart = 0;
  double wall_seconds = 0.0;
};

std::string run_result_to_json(const RunResult& result);

// Minimizes 1 - |<ground|U(theta)|initial>|^2, best of spec.restarts.
RunResult run_vqa_infidelity(const ExperimentSpec& spec);
// Same, but with a caller-supplied initial state (any normalized vector).
RunResult run_vqa_infidelity_from(const ExperimentSpec& spec,
                                  const StateVector& initial);

// Minimizes the analytically evaluated energy estimator.
RunResult run_vqe_exact(const ExperimentSpec& spec);

// Minimizes the sampled energy estimator: every cost evaluation draws a
// fresh finite-shot estimate from the restart's own stream. Fidelity and
// energy in the result are always recomputed exactly from the best
// parameters. With infinite_shots the run matches run_vqe_exact
// trace-for-trace at equal seed.
RunResult run_vqe_sampled(const ExperimentSpec& spec);

// Dispatch on spec.cost.
RunResult run_experiment(const ExperimentSpec& spec);

// Smallest layer count in [1, max_layers] whose best-of-restarts fidelity
// reaches spec.success_threshold, or nullopt if none does.
std::optional<int> scan_layers(const ExperimentSpec& spec, int max_layers);

struct GridCell {
  int n_bosons = 0;
  int n_layers = 0;
  double lambda = 0.0;
  double fidelity = 0.0;
  double delta_e = 0.0;
  std::int64_t shots = 0;
  std::uint64_t seed = 0;
};

void write_grid_csv(const std::vector<GridCell>& cells, std::ostream& os);

}  // namespace bhvqe

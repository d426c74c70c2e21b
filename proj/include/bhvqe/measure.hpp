#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bhvqe/bh_model.hpp"
#include "bhvqe/gates.hpp"
#include "bhvqe/rng.hpp"
#include "bhvqe/state_vector.hpp"

namespace bhvqe {

// Photon-number-resolved counts. Detection is lossless, so every key has the
// basis boson total.
struct CountsHistogram {
  std::map<Configuration, std::int64_t> counts;
  std::int64_t shots = 0;
};

// Born-rule sampling: i.i.d. draws from |amplitude|^2, deterministic given
// the generator state. Runs in O(dim) via conditional binomial splits rather
// than per-shot inversion.
CountsHistogram sample_counts(const StateVector& state, std::int64_t shots,
                              Rng& rng);

// One row per observed configuration: n0,n1,...,count.
void write_histogram_csv(const CountsHistogram& hist, std::ostream& os);

struct TermEstimate {
  std::string label;  // "hopping(p,q)", "interaction(p)", "chemical", "pair"
  double value = 0.0;
  double std_error = 0.0;
};

struct EnergyEstimate {
  double value = 0.0;      // always the exact sum of the term values
  double std_error = 0.0;  // per-setting std errors combined in quadrature
  std::vector<TermEstimate> terms;
};

std::string energy_estimate_to_json(const EnergyEstimate& estimate);

// Hopping readout for one edge: a 50/50 beam-splitter across (p, q) turns
// b_p+ b_q + b_q+ b_p into the occupation difference n_q - n_p, so counting
// photons after the splitter estimates the hopping expectation.
struct EdgeEstimate {
  int p = 0;
  int q = 1;
  double mean = 0.0;       // estimate of <b_p+ b_q + b_q+ b_p>
  double std_error = 0.0;  // std error of `mean`; scale by |J| for `energy`
  double energy = 0.0;     // -J * mean, the edge's contribution to <H>
};

EdgeEstimate estimate_hopping(const StateVector& state, int p, int q,
                              std::int64_t shots, Rng& rng, double J = 1.0);
EdgeEstimate exact_hopping(const StateVector& state, int p, int q,
                           double J = 1.0);

// Per-site -(U/2) <n_p (n_p - 1)> from plain-basis counts. The sample mean of
// n(n-1) is used directly; it equals the photon-number variance form
// Var(n) + <n>^2 - <n> identically on any histogram.
struct InteractionEstimate {
  std::vector<double> per_site;
  std::vector<double> std_error;
  double total = 0.0;
};

InteractionEstimate estimate_interaction(const CountsHistogram& hist, double U);
InteractionEstimate exact_interaction(const StateVector& state, double U);

// Chemical-potential and pair-coupling readout from plain-basis counts:
// sum_p mu_p <n_p> and sum_{p<q} V_pq <n_p n_q>.
struct ExtendedEstimate {
  double chemical = 0.0;
  double pair = 0.0;
  double std_error = 0.0;  // of chemical + pair combined
};

ExtendedEstimate estimate_extended_terms(const CountsHistogram& hist,
                                         const std::vector<double>& mu,
                                         const Eigen::MatrixXd& V);
ExtendedEstimate exact_extended_terms(const StateVector& state,
                                      const std::vector<double>& mu,
                                      const Eigen::MatrixXd& V);

// One detector setting: a rotation applied before counting, the hopping
// edges read from that setting, and whether the plain-basis terms
// (interaction, chemical potential, pair couplings) are read from it.
// A plain group has an empty rotation and no edges; a rotated group carries
// one pi/4 beam-splitter per edge, and its edges must be mode-disjoint.
struct MeasurementGroup {
  Circuit rotation;
  std::vector<std::pair<int, int>> hop_edges;
  bool plain = false;
  std::int64_t shots = 0;
};

struct ShotPlan {
  std::int64_t total_shots = 0;
  std::vector<MeasurementGroup> groups;
};

// One plain setting plus one setting per edge; shots split as evenly as
// possible, with the first (total mod n_groups) groups taking one extra.
ShotPlan default_shot_plan(const BHModel& model, std::int64_t total_shots);

// Same split policy, but mode-disjoint edges are greedily packed into shared
// settings, reducing the setting count on larger lattices.
ShotPlan colored_shot_plan(const BHModel& model, std::int64_t total_shots);

// Throws plan_error unless: shares sum to total_shots with every share
// positive, exactly one group is plain, every model edge is read by exactly
// one group and no group reads an edge the model lacks, edges within a group
// are mode-disjoint, and each rotation is exactly one pi/4 beam-splitter per
// edge of its group.
void validate_plan(const ShotPlan& plan, const BHModel& model);

EnergyEstimate estimate_energy(const StateVector& state, const BHModel& model,
                               const ShotPlan& plan, Rng& rng);

// Zero-shot-noise limit: the same term-by-term estimators fed with analytic
// expectations instead of samples. Matches <state|H|state> to float
// precision; all std errors are zero.
EnergyEstimate estimate_energy_exact(const StateVector& state,
                                     const BHModel& model);

}  // namespace bhvqe

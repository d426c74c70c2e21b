#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bhvqe/state_vector.hpp"

namespace bhvqe {

// Attractive Bose-Hubbard model on an explicit edge list,
//   H = -J sum_<p,q> (b_p+ b_q + b_q+ b_p) - (U/2) sum_p n_p (n_p - 1),
// optionally extended by chemical potentials mu_p n_p and pair couplings
// V_pq n_p n_q (each unordered pair counted once).
struct BHModel {
  int n_sites = 0;
  int n_bosons = 0;
  double J = 1.0;
  double U = 0.0;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> mu;  // empty = no chemical potential term
  Eigen::MatrixXd V;       // 0x0 = no pair term; symmetric otherwise

  // Interaction strength per boson in units of J.
  double lambda() const { return n_bosons * U / J; }

  // Throws std::domain_error on malformed fields (self-edges, duplicate
  // edges, out-of-range modes, J <= 0, U < 0, wrong-sized mu or V).
  void validate() const;

  static BHModel dimer(int n_bosons, double lambda, double J = 1.0);
  // Periodic chain 0-1-...-(n_sites-1)-0; n_sites = 2 degenerates to the
  // dimer's single edge.
  static BHModel ring(int n_sites, int n_bosons, double lambda, double J = 1.0);
};

// Real symmetric Hamiltonian over a fixed-N basis, kept both in coordinate
// form (for inspection and export) and compressed (for mat-vecs).
struct SparseHamiltonian {
  struct Entry {
    std::int64_t row;
    std::int64_t col;
    double value;
  };

  std::shared_ptr<const FockBasis> basis;
  std::vector<Entry> entries;            // both triangles present
  Eigen::SparseMatrix<double> compressed;

  std::int64_t dim() const { return basis->dim(); }
};

SparseHamiltonian build_hamiltonian(const BHModel& model,
                                    std::shared_ptr<const FockBasis> basis);

// <state| H |state> (always real for a real symmetric H).
double expectation(const SparseHamiltonian& h, const StateVector& state);

struct EdOptions {
  std::int64_t dense_threshold = 512;  // use a dense solver strictly below
  double tol = 1e-10;                  // residual tolerance, iterative path
  int max_basis = 120;                 // Krylov vectors per restart
  int max_restarts = 60;
};

struct GroundState {
  double energy = 0.0;
  StateVector vector;
  std::optional<double> second_energy;       // absent only for dim-1 spaces
  std::optional<StateVector> second_vector;  // present iff near_degenerate
  double residual = 0.0;

  // Two lowest eigenvalues closer than 1e-12 * max(|E0|, 1).
  bool near_degenerate() const { return second_vector.has_value(); }
};

// Lowest eigenpair (plus the second where near-degenerate); eigenvector sign
// fixed so its largest-magnitude amplitude is real positive.
// Throws solver_error if the iterative path fails to reach tolerance.
GroundState ground_state(const SparseHamiltonian& h,
                         const EdOptions& opts = {});

// Inverse participation ratio (sum_c |a_c|^4)^{-1} of a normalized state.
double ipr(const StateVector& state);

// Eigenvalues of the one-mode reduced density matrix: lambda_k is the total
// probability of finding k bosons on mode p. Length n_bosons + 1.
std::vector<double> mode_occupation_spectrum(const StateVector& state, int p);

// Von Neumann entropy -sum_k lambda_k ln(lambda_k) of one mode.
double entropy(const StateVector& state, int p);

// {"energy": ..., "amplitudes": [[[n_0, ...], re, im], ...]}
std::string ground_state_to_json(const GroundState& gs);

}  // namespace bhvqe

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bhvqe/state_vector.hpp"

namespace bhvqe {

enum class GateKind { BeamSplitter, Rotation, Kerr };

// Number-preserving photonic gate descriptor.
//   BeamSplitter: exp(theta (e^{i phi} a_q+ a_p - e^{-i phi} a_p+ a_q))
//   Rotation:     exp(i theta n_p)
//   Kerr:         exp(i theta n_p^2)
struct Gate {
  GateKind kind = GateKind::Rotation;
  int p = 0;
  int q = -1;        // beam-splitter only
  double theta = 0.0;
  double phi = 0.0;  // beam-splitter only
};

Gate beamsplitter(int p, int q, double theta, double phi = 0.0);
Gate rotation(int p, double theta);
Gate kerr(int p, double theta);

using Circuit = std::vector<Gate>;

void apply_rotation(StateVector& state, int p, double theta);
void apply_kerr(StateVector& state, int p, double theta);
void apply_beamsplitter(StateVector& state, int p, int q, double theta,
                        double phi = 0.0);
void apply_gate(StateVector& state, const Gate& gate);
void apply_circuit(StateVector& state, const Circuit& circuit);

// Beam-splitter restricted to the subspace n_p + n_q = n_total, in the
// ordered sub-basis n_p = n_total ... 0 (row/column index j holds n_q = j).
Eigen::MatrixXcd bs_block(int n_total, double theta, double phi);

// Exact inverse: gates reversed, every theta negated, phi kept.
Circuit inverse_circuit(const Circuit& circuit);

std::string circuit_to_json(const Circuit& circuit);
Circuit circuit_from_json(const std::string& text);

}  // namespace bhvqe

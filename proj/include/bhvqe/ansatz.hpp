#pragma once

#include <span>
#include <vector>

#include "bhvqe/gates.hpp"

namespace bhvqe {

enum class AnsatzFamily { BsKerr, InterferometerKerr };

// Structural description of a layered ansatz circuit.
// BsKerr: each layer is a stair of n_sites-1 beam-splitters (descending on
// the first layer, direction alternating per layer, all phases fixed to 0)
// followed by one Kerr gate per mode.
// InterferometerKerr: each layer is a rectangular mesh of n_sites(n_sites-1)/2
// beam-splitters in alternating nearest-neighbor columns, then one rotation
// per mode (unless include_rotations is off), then one Kerr per mode.
struct AnsatzSpec {
  AnsatzFamily family = AnsatzFamily::BsKerr;
  int n_sites = 2;
  int n_layers = 1;
  bool zero_bs_phases = false;    // InterferometerKerr only: fix all phi = 0
  bool include_rotations = true;  // InterferometerKerr only

  int gate_count() const;
  int parameter_count() const;
};

// One gate of a template; slot index -1 means the angle is fixed.
struct TemplateGate {
  GateKind kind = GateKind::Rotation;
  int p = 0;
  int q = -1;
  int theta_slot = -1;
  int phi_slot = -1;
  double theta_fixed = 0.0;
  double phi_fixed = 0.0;
};

class CircuitTemplate {
 public:
  CircuitTemplate(AnsatzSpec spec, std::vector<TemplateGate> gates,
                  int parameter_count);

  const AnsatzSpec& spec() const { return spec_; }
  const std::vector<TemplateGate>& gates() const { return gates_; }
  int parameter_count() const { return parameter_count_; }

  // Concrete circuit with the free angles filled in slot order.
  // Throws std::invalid_argument on length mismatch.
  Circuit bind(std::span<const double> params) const;

 private:
  AnsatzSpec spec_;
  std::vector<TemplateGate> gates_;
  int parameter_count_;
};

// Throws std::domain_error for n_sites < 2, n_layers < 0 or wrong family.
CircuitTemplate build_bs_kerr(const AnsatzSpec& spec);
CircuitTemplate build_interferometer_kerr(const AnsatzSpec& spec);
CircuitTemplate build_ansatz(const AnsatzSpec& spec);

// Stair angles theta_k = arccos(1/sqrt(n_sites - k)) that spread a monomodal
// input uniformly over all modes: one descending beam-splitter stair with
// these angles maps |N,0,...,0> onto the state built from the equal-weight
// single-particle orbital, the ground state of the non-interacting model.
std::vector<double> uniform_spread_stair_angles(int n_sites);

}  // namespace bhvqe

#include "bhvqe/ansatz.hpp"

#include <cmath>
#include <stdexcept>

namespace bhvqe {

namespace {

void check_spec(const AnsatzSpec& spec, AnsatzFamily expected) {
  if (spec.family != expected)
    throw std::domain_error("ansatz: wrong family for this builder");
  if (spec.n_sites < 2)
    throw std::domain_error("ansatz: need at least two modes");
  if (spec.n_layers < 0)
    throw std::domain_error("ansatz: negative layer count");
}

}  // namespace

int AnsatzSpec::gate_count() const {
  const int s = n_sites;
  switch (family) {
    case AnsatzFamily::BsKerr:
      return n_layers * (2 * s - 1);
    case AnsatzFamily::InterferometerKerr:
      return n_layers * (s * (s - 1) / 2 + (include_rotations ? s : 0) + s);
  }
  return 0;
}

int AnsatzSpec::parameter_count() const {
  const int s = n_sites;
  switch (family) {
    case AnsatzFamily::BsKerr:
      return n_layers * (2 * s - 1);
    case AnsatzFamily::InterferometerKerr:
      return n_layers * (s * (s - 1) / 2 * (zero_bs_phases ? 1 : 2) +
                         (include_rotations ? s : 0) + s);
  }
  return 0;
}

CircuitTemplate::CircuitTemplate(AnsatzSpec spec,
                                 std::vector<TemplateGate> gates,
                                 int parameter_count)
    : spec_(spec), gates_(std::move(gates)), parameter_count_(parameter_count) {}

Circuit CircuitTemplate::bind(std::span<const double> params) const {
  if (static_cast<int>(params.size()) != parameter_count_)
    throw std::invalid_argument(
        "CircuitTemplate::bind: expected " + std::to_string(parameter_count_) +
        " parameters, got " + std::to_string(params.size()));
  Circuit circuit;
  circuit.reserve(gates_.size());
  for (const TemplateGate& g : gates_) {
    Gate out;
    out.kind = g.kind;
    out.p = g.p;
    out.q = g.q;
    out.theta = g.theta_slot >= 0 ? params[g.theta_slot] : g.theta_fixed;
    out.phi = g.phi_slot >= 0 ? params[g.phi_slot] : g.phi_fixed;
    circuit.push_back(out);
  }
  return circuit;
}

CircuitTemplate build_bs_kerr(const AnsatzSpec& spec) {
  check_spec(spec, AnsatzFamily::BsKerr);
  const int s = spec.n_sites;
  std::vector<TemplateGate> gates;
  int slot = 0;
  for (int layer = 0; layer < spec.n_layers; ++layer) {
    const bool descending = layer % 2 == 0;
    for (int k = 0; k + 1 < s; ++k) {
      const int p = descending ? k : s - 2 - k;
      TemplateGate g;
      g.kind = GateKind::BeamSplitter;
      g.p = p;
      g.q = p + 1;
      g.theta_slot = slot++;
      gates.push_back(g);
    }
    for (int m = 0; m < s; ++m) {
      TemplateGate g;
      g.kind = GateKind::Kerr;
      g.p = m;
      g.theta_slot = slot++;
      gates.push_back(g);
    }
  }
  return CircuitTemplate(spec, std::move(gates), slot);
}

CircuitTemplate build_interferometer_kerr(const AnsatzSpec& spec) {
  check_spec(spec, AnsatzFamily::InterferometerKerr);
  const int s = spec.n_sites;
  std::vector<TemplateGate> gates;
  int slot = 0;
  for (int layer = 0; layer < spec.n_layers; ++layer) {
    for (int col = 0; col < s; ++col) {
      for (int p = col % 2; p + 1 < s; p += 2) {
        TemplateGate g;
        g.kind = GateKind::BeamSplitter;
        g.p = p;
        g.q = p + 1;
        g.theta_slot = slot++;
        if (!spec.zero_bs_phases) g.phi_slot = slot++;
        gates.push_back(g);
      }
    }
    if (spec.include_rotations) {
      for (int m = 0; m < s; ++m) {
        TemplateGate g;
        g.kind = GateKind::Rotation;
        g.p = m;
        g.theta_slot = slot++;
        gates.push_back(g);
      }
    }
    for (int m = 0; m < s; ++m) {
      TemplateGate g;
      g.kind = GateKind::Kerr;
      g.p = m;
      g.theta_slot = slot++;
      gates.push_back(g);
    }
  }
  return CircuitTemplate(spec, std::move(gates), slot);
}

CircuitTemplate build_ansatz(const AnsatzSpec& spec) {
  return spec.family == AnsatzFamily::BsKerr ? build_bs_kerr(spec)
                                             : build_interferometer_kerr(spec);
}

std::vector<double> uniform_spread_stair_angles(int n_sites) {
  if (n_sites < 2)
    throw std::domain_error("uniform_spread_stair_angles: need >= 2 modes");
  std::vector<double> angles;
  for (int k = 0; k + 1 < n_sites; ++k)
    angles.push_back(std::acos(1.0 / std::sqrt(double(n_sites - k))));
  return angles;
}

}  // namespace bhvqe

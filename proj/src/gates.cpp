#include "bhvqe/gates.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include <json.hpp>

namespace bhvqe {

namespace {

void check_mode(const StateVector& state, int p, const char* who) {
  if (p < 0 || p >= state.basis().n_sites())
    throw std::domain_error(std::string(who) + ": mode index out of range");
}

// The beam-splitter generator on a pair-total block is similar to i*T with
// T real symmetric tridiagonal, T(j, j+1) = sqrt((n-j)(j+1)). Conjugating by
// D = diag((i e^{-i phi})^j) removes theta and phi from the eigenproblem, so
// one decomposition per pair total serves every angle.
struct BlockEig {
  Eigen::MatrixXcd v;      // eigenvectors of T (real, stored complex)
  Eigen::VectorXd lambda;  // eigenvalues of T
};

const BlockEig& block_eig(int n_total) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<BlockEig>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n_total);
  if (it != cache.end()) return *it->second;

  const int m = n_total + 1;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j + 1 < m; ++j) {
    const double c = std::sqrt(static_cast<double>(n_total - j) * (j + 1));
    t(j, j + 1) = c;
    t(j + 1, j) = c;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("block_eig: eigensolver failed");
  auto be = std::make_unique<BlockEig>();
  be->v = es.eigenvectors().cast<Complex>();
  be->lambda = es.eigenvalues();
  const BlockEig& ref = *be;
  cache.emplace(n_total, std::move(be));
  return ref;
}

// In-place block transform of the amplitudes listed in indices:
// out = D^{-1} V e^{i theta L} V^T D in, with D_j = (i e^{-i phi})^j.
void transform_fiber(Vector& amps, const std::vector<std::int64_t>& indices,
                     const BlockEig& be, double theta, double phi) {
  const int m = static_cast<int>(indices.size());
  Eigen::VectorXcd g(m);
  const Complex w = Complex(0.0, 1.0) * std::polar(1.0, -phi);
  Complex d = 1.0;
  for (int j = 0; j < m; ++j) {
    g[j] = d * amps[indices[j]];
    d *= w;
  }
  Eigen::VectorXcd t = be.v.transpose() * g;
  for (int k = 0; k < m; ++k) t[k] *= std::polar(1.0, theta * be.lambda[k]);
  g.noalias() = be.v * t;
  const Complex wc = std::conj(w);
  d = 1.0;
  for (int j = 0; j < m; ++j) {
    amps[indices[j]] = g[j] * d;
    d *= wc;
  }
}

}  // namespace

Gate beamsplitter(int p, int q, double theta, double phi) {
  Gate g;
  g.kind = GateKind::BeamSplitter;
  g.p = p;
  g.q = q;
  g.theta = theta;
  g.phi = phi;
  return g;
}

Gate rotation(int p, double theta) {
  Gate g;
  g.kind = GateKind::Rotation;
  g.p = p;
  g.theta = theta;
  return g;
}

Gate kerr(int p, double theta) {
  Gate g;
  g.kind = GateKind::Kerr;
  g.p = p;
  g.theta = theta;
  return g;
}

void apply_rotation(StateVector& state, int p, double theta) {
  check_mode(state, p, "apply_rotation");
  const FockBasis& basis = state.basis();
  std::vector<Complex> phase(basis.n_bosons() + 1);
  for (int n = 0; n <= basis.n_bosons(); ++n)
    phase[n] = std::polar(1.0, theta * n);
  Vector& amps = state.amplitudes();
  for (std::int64_t i = 0; i < basis.dim(); ++i)
    amps[i] *= phase[basis.config(i)[p]];
}

void apply_kerr(StateVector& state, int p, double theta) {
  check_mode(state, p, "apply_kerr");
  const FockBasis& basis = state.basis();
  std::vector<Complex> phase(basis.n_bosons() + 1);
  for (int n = 0; n <= basis.n_bosons(); ++n)
    phase[n] = std::polar(1.0, theta * static_cast<double>(n) * n);
  Vector& amps = state.amplitudes();
  for (std::int64_t i = 0; i < basis.dim(); ++i)
    amps[i] *= phase[basis.config(i)[p]];
}

void apply_beamsplitter(StateVector& state, int p, int q, double theta,
                        double phi) {
  check_mode(state, p, "apply_beamsplitter");
  check_mode(state, q, "apply_beamsplitter");
  if (p == q)
    throw std::domain_error("apply_beamsplitter: modes must differ");
  const PairFibers& plan = state.basis().fibers(p, q);
  Vector& amps = state.amplitudes();
  for (const PairFiber& fiber : plan.fibers)
    transform_fiber(amps, fiber.indices, block_eig(fiber.pair_total), theta,
                    phi);
}

void apply_gate(StateVector& state, const Gate& gate) {
  switch (gate.kind) {
    case GateKind::BeamSplitter:
      apply_beamsplitter(state, gate.p, gate.q, gate.theta, gate.phi);
      break;
    case GateKind::Rotation:
      apply_rotation(state, gate.p, gate.theta);
      break;
    case GateKind::Kerr:
      apply_kerr(state, gate.p, gate.theta);
      break;
  }
}

void apply_circuit(StateVector& state, const Circuit& circuit) {
  for (const Gate& g : circuit) apply_gate(state, g);
}

Eigen::MatrixXcd bs_block(int n_total, double theta, double phi) {
  if (n_total < 0) throw std::domain_error("bs_block: negative pair total");
  const BlockEig& be = block_eig(n_total);
  const int m = n_total + 1;
  Eigen::VectorXcd ph(m);
  for (int k = 0; k < m; ++k) ph[k] = std::polar(1.0, theta * be.lambda[k]);
  Eigen::MatrixXcd w = be.v * ph.asDiagonal() * be.v.transpose();
  const Complex iu(0.0, 1.0);
  Eigen::MatrixXcd u(m, m);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      // D^{-1} W D with D_j = (i e^{-i phi})^j
      const int k = c - r;
      Complex f = std::polar(1.0, -phi * k);
      switch (((k % 4) + 4) % 4) {
        case 1: f *= iu; break;
        case 2: f = -f; break;
        case 3: f *= -iu; break;
        default: break;
      }
      u(r, c) = f * w(r, c);
    }
  }
  return u;
}

Circuit inverse_circuit(const Circuit& circuit) {
  Circuit inv(circuit.rbegin(), circuit.rend());
  for (Gate& g : inv) g.theta = -g.theta;
  return inv;
}

std::string circuit_to_json(const Circuit& circuit) {
  nlohmann::json list = nlohmann::json::array();
  for (const Gate& g : circuit) {
    nlohmann::json item;
    switch (g.kind) {
      case GateKind::BeamSplitter:
        item["gate"] = "bs";
        item["modes"] = {g.p, g.q};
        item["theta"] = g.theta;
        item["phi"] = g.phi;
        break;
      case GateKind::Rotation:
        item["gate"] = "rot";
        item["modes"] = {g.p};
        item["theta"] = g.theta;
        break;
      case GateKind::Kerr:
        item["gate"] = "kerr";
        item["modes"] = {g.p};
        item["theta"] = g.theta;
        break;
    }
    list.push_back(std::move(item));
  }
  return list.dump(2);
}

Circuit circuit_from_json(const std::string& text) {
  const nlohmann::json list = nlohmann::json::parse(text);
  if (!list.is_array())
    throw std::invalid_argument("circuit_from_json: expected a JSON array");
  Circuit circuit;
  for (const auto& item : list) {
    const std::string kind = item.at("gate").get<std::string>();
    const auto modes = item.at("modes").get<std::vector<int>>();
    const double theta = item.at("theta").get<double>();
    if (kind == "bs") {
      if (modes.size() != 2)
        throw std::invalid_argument("circuit_from_json: bs needs two modes");
      circuit.push_back(beamsplitter(modes[0], modes[1], theta,
                                     item.value("phi", 0.0)));
    } else if (kind == "rot" || kind == "kerr") {
      if (modes.size() != 1)
        throw std::invalid_argument("circuit_from_json: " + kind +
                                    " needs one mode");
      circuit.push_back(kind == "rot" ? rotation(modes[0], theta)
                                      : kerr(modes[0], theta));
    } else {
      throw std::invalid_argument("circuit_from_json: unknown gate " + kind);
    }
  }
  return circuit;
}

}  // namespace bhvqe

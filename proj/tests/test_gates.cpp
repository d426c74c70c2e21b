#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "bhvqe/gates.hpp"
#include "bhvqe/rng.hpp"
#include "bhvqe/state_vector.hpp"

using bhvqe::Circuit;
using bhvqe::Complex;
using bhvqe::Configuration;
using bhvqe::FockBasis;
using bhvqe::StateVector;

namespace {

constexpr double kPi = std::numbers::pi;

StateVector random_state(std::shared_ptr<const FockBasis> basis,
                         bhvqe::Rng& rng) {
  StateVector psi(std::move(basis));
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    psi[i] = Complex(rng.normal(), rng.normal());
  psi.normalize();
  return psi;
}

// Direct matrix exponential of the beam-splitter generator restricted to the
// pair-total block, built independently of the production code path.
Eigen::MatrixXcd bs_block_oracle(int n, double theta, double phi) {
  const int m = n + 1;
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(m, m);
  for (int j = 0; j + 1 < m; ++j) {
    const double c = std::sqrt(static_cast<double>(n - j) * (j + 1));
    // row index j holds n_q = j; a_q+ a_p raises j
    g(j + 1, j) += theta * std::polar(c, phi);
    g(j, j + 1) -= theta * std::polar(c, -phi);
  }
  return g.exp();
}

// Matrix of a_p restricted to fixed particle number: maps the N-boson basis
// into the (N-1)-boson basis.
Eigen::MatrixXcd ladder_down(const FockBasis& to, const FockBasis& from,
                             int p) {
  Eigen::MatrixXcd a =
      Eigen::MatrixXcd::Zero(to.dim(), from.dim());
  for (std::int64_t i = 0; i < from.dim(); ++i) {
    Configuration c = from.config_copy(i);
    if (c[p] == 0) continue;
    const double amp = std::sqrt(static_cast<double>(c[p]));
    --c[p];
    a(to.index_of(c), i) = amp;
  }
  return a;
}

std::vector<double> occupation_spectrum(const StateVector& psi, int p) {
  std::vector<double> lam(psi.basis().n_bosons() + 1, 0.0);
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    lam[psi.basis().config(i)[p]] += std::norm(psi[i]);
  return lam;
}

}  // namespace

TEST_CASE("bs_block matches a dense matrix exponential oracle") {
  bhvqe::Rng rng(42);
  for (int n : {0, 1, 2, 3, 5, 8}) {
    for (int trial = 0; trial < 6; ++trial) {
      const double theta = 4.0 * kPi * (rng.uniform() - 0.5);
      const double phi = 2.0 * kPi * rng.uniform();
      const Eigen::MatrixXcd got = bhvqe::bs_block(n, theta, phi);
      const Eigen::MatrixXcd want = bs_block_oracle(n, theta, phi);
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("bs_block is unitary and the identity at theta=0") {
  for (int n : {0, 1, 2, 4, 8}) {
    const Eigen::MatrixXcd id = bhvqe::bs_block(n, 0.0, 1.3);
    CHECK((id - Eigen::MatrixXcd::Identity(n + 1, n + 1)).cwiseAbs().maxCoeff()
          < 1e-12);
    const Eigen::MatrixXcd u = bhvqe::bs_block(n, 0.7, 0.4);
    CHECK((u * u.adjoint() - Eigen::MatrixXcd::Identity(n + 1, n + 1))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("single photon block reproduces the two-mode rotation") {
  const Eigen::MatrixXcd u = bhvqe::bs_block(1, kPi / 4, 0.0);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(u(0, 0) - Complex(r, 0)) < 1e-14);
  CHECK(std::abs(u(1, 0) - Complex(r, 0)) < 1e-14);
  CHECK(std::abs(u(0, 1) - Complex(-r, 0)) < 1e-14);
  CHECK(std::abs(u(1, 1) - Complex(r, 0)) < 1e-14);

  // theta = pi/2 swaps the modes: |1,0> -> +|0,1>, |0,1> -> -|1,0>
  const Eigen::MatrixXcd v = bhvqe::bs_block(1, kPi / 2, 0.0);
  CHECK(std::abs(v(1, 0) - Complex(1, 0)) < 1e-14);
  CHECK(std::abs(v(0, 1) - Complex(-1, 0)) < 1e-14);
  CHECK(std::abs(v(0, 0)) < 1e-14);
  CHECK(std::abs(v(1, 1)) < 1e-14);
}

TEST_CASE("bs_block phase convention: off-diagonals carry e^{+-i phi}") {
  const double theta = 0.3, phi = 0.9;
  const Eigen::MatrixXcd u = bhvqe::bs_block(1, theta, phi);
  CHECK(std::abs(u(1, 0) - std::polar(std::sin(theta), phi)) < 1e-14);
  CHECK(std::abs(u(0, 1) + std::polar(std::sin(theta), -phi)) < 1e-14);
}

TEST_CASE("bs_block angle additivity and 2-pi periodicity") {
  for (int n : {1, 3, 6}) {
    const double phi = 0.7;
    const Eigen::MatrixXcd a = bhvqe::bs_block(n, 0.5, phi);
    const Eigen::MatrixXcd b = bhvqe::bs_block(n, 1.1, phi);
    const Eigen::MatrixXcd ab = bhvqe::bs_block(n, 1.6, phi);
    CHECK((a * b - ab).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXcd p0 = bhvqe::bs_block(n, 0.4, phi);
    const Eigen::MatrixXcd p1 = bhvqe::bs_block(n, 0.4 + 2.0 * kPi, phi);
    CHECK((p0 - p1).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("splitting a monomodal state gives binomial amplitudes") {
  const int n = 8;
  auto basis = FockBasis::create(2, n);
  for (double theta : {0.3, kPi / 4, 1.2}) {
    StateVector psi = StateVector::fock(basis, {n, 0});
    bhvqe::apply_beamsplitter(psi, 0, 1, theta, 0.0);
    for (int k = 0; k <= n; ++k) {
      double binom = 1.0;
      for (int i = 1; i <= k; ++i) binom *= static_cast<double>(n - i + 1) / i;
      const double want = std::sqrt(binom) * std::pow(std::cos(theta), n - k) *
                          std::pow(std::sin(theta), k);
      Configuration c(2);
      c[0] = n - k;
      c[1] = k;
      CHECK(std::abs(psi[basis->index_of(c)] - Complex(want, 0)) < 1e-12);
    }
  }
}

TEST_CASE("apply_beamsplitter matches the full-space generator exponential") {
  auto basis = FockBasis::create(3, 3);
  const std::int64_t d = basis->dim();
  bhvqe::Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const int p = trial % 2 == 0 ? 0 : 1;
    const int q = trial % 2 == 0 ? 1 : 2;
    const double theta = 3.0 * (rng.uniform() - 0.5);
    const double phi = 2.0 * kPi * rng.uniform();

    // hopping matrix for a_q+ a_p within the fixed-N sector
    Eigen::MatrixXcd hop = Eigen::MatrixXcd::Zero(d, d);
    for (std::int64_t i = 0; i < d; ++i) {
      Configuration c = basis->config_copy(i);
      if (c[p] == 0) continue;
      const double amp = std::sqrt(static_cast<double>(c[p] * (c[q] + 1)));
      --c[p];
      ++c[q];
      hop(basis->index_of(c), i) = amp;
    }
    const Eigen::MatrixXcd gen =
        theta * (std::polar(1.0, phi) * hop -
                 std::polar(1.0, -phi) * hop.adjoint());
    const Eigen::MatrixXcd u = gen.exp();

    StateVector psi = random_state(basis, rng);
    const Eigen::VectorXcd want = u * psi.amplitudes();
    bhvqe::apply_beamsplitter(psi, p, q, theta, phi);
    CHECK((psi.amplitudes() - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("beam-splitter conjugation transforms ladder operators") {
  // B+ a_p B = a_p cos(theta) - a_q sin(theta) e^{-i phi}, checked through
  // matrix elements between random states of adjacent particle sectors.
  auto upper = FockBasis::create(3, 3);
  auto lower = FockBasis::create(3, 2);
  bhvqe::Rng rng(11);
  const double theta = 0.83, phi = 1.21;
  const int p = 0, q = 2;
  const Eigen::MatrixXcd ap = ladder_down(*lower, *upper, p);
  const Eigen::MatrixXcd aq = ladder_down(*lower, *upper, q);

  for (int trial = 0; trial < 3; ++trial) {
    StateVector psi = random_state(upper, rng);

    StateVector bpsi = psi;
    bhvqe::apply_beamsplitter(bpsi, p, q, theta, phi);
    StateVector lhs(lower, ap * bpsi.amplitudes());
    bhvqe::apply_beamsplitter(lhs, p, q, -theta, phi);  // B+ on the lower sector

    const Eigen::VectorXcd rhs =
        std::cos(theta) * (ap * psi.amplitudes()) -
        std::sin(theta) * std::polar(1.0, -phi) * (aq * psi.amplitudes());
    CHECK((lhs.amplitudes() - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("rotation multiplies each config by exp(i theta n_p)") {
  auto basis = FockBasis::create(2, 2);
  bhvqe::Rng rng(3);
  StateVector psi = random_state(basis, rng);
  const StateVector before = psi;
  bhvqe::apply_rotation(psi, 0, 0.0);
  CHECK((psi.amplitudes() - before.amplitudes()).cwiseAbs().maxCoeff() == 0.0);

  bhvqe::apply_rotation(psi, 0, kPi);
  // |2,0> gets e^{2 pi i} = +1, |1,1> gets e^{i pi} = -1, |0,2> gets +1
  CHECK(std::abs(psi[0] - before[0]) < 1e-14);
  CHECK(std::abs(psi[1] + before[1]) < 1e-14);
  CHECK(std::abs(psi[2] - before[2]) < 1e-14);

  // diagonal unitary: norm and per-config magnitude unchanged
  bhvqe::apply_rotation(psi, 1, 0.4321);
  CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(psi[i]) == doctest::Approx(std::abs(before[i])).epsilon(1e-12));
}

TEST_CASE("kerr multiplies each config by exp(i theta n_p^2)") {
  auto basis = FockBasis::create(2, 2);
  StateVector psi(basis);
  psi[0] = 1.0;  // |2,0>
  bhvqe::apply_kerr(psi, 0, 0.37);
  CHECK(std::abs(psi[0] - std::polar(1.0, 4 * 0.37)) < 1e-14);

  bhvqe::Rng rng(5);
  StateVector chi = random_state(basis, rng);
  StateVector before = chi;
  bhvqe::apply_kerr(chi, 0, 2.0 * kPi);  // e^{2 pi i n^2} = 1 for integer n
  CHECK((chi.amplitudes() - before.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);

  bhvqe::apply_kerr(chi, 1, 0.77);
  bhvqe::apply_kerr(chi, 1, -0.77);
  CHECK((chi.amplitudes() - before.amplitudes()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("every gate preserves the L2 norm on random states") {
  bhvqe::Rng rng(19);
  for (auto [sites, bosons] : {std::pair{2, 5}, {3, 4}, {4, 3}}) {
    auto basis = FockBasis::create(sites, bosons);
    StateVector psi = random_state(basis, rng);
    for (int step = 0; step < 20; ++step) {
      const double theta = 6.0 * (rng.uniform() - 0.5);
      const int p = static_cast<int>(rng.uniform() * sites) % sites;
      switch (step % 3) {
        case 0: {
          int q = (p + 1 + static_cast<int>(rng.uniform() * (sites - 1))) % sites;
          if (q == p) q = (p + 1) % sites;
          bhvqe::apply_beamsplitter(psi, p, q, theta, 2.0 * kPi * rng.uniform());
          break;
        }
        case 1:
          bhvqe::apply_rotation(psi, p, theta);
          break;
        default:
          bhvqe::apply_kerr(psi, p, theta);
          break;
      }
      CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("beam-splitter on one pair leaves other modes' spectra invariant") {
  auto basis = FockBasis::create(3, 4);
  bhvqe::Rng rng(23);
  StateVector psi = random_state(basis, rng);
  const std::vector<double> before = occupation_spectrum(psi, 2);
  bhvqe::apply_beamsplitter(psi, 0, 1, 1.234, 0.56);
  const std::vector<double> after = occupation_spectrum(psi, 2);
  for (size_t k = 0; k < before.size(); ++k)
    CHECK(after[k] == doctest::Approx(before[k]).epsilon(1e-12));
}

TEST_CASE("gate application rejects invalid modes") {
  auto basis = FockBasis::create(3, 2);
  StateVector psi = StateVector::fock(basis, {2, 0, 0});
  CHECK_THROWS_AS(bhvqe::apply_rotation(psi, 3, 0.1), std::domain_error);
  CHECK_THROWS_AS(bhvqe::apply_kerr(psi, -1, 0.1), std::domain_error);
  CHECK_THROWS_AS(bhvqe::apply_beamsplitter(psi, 0, 0, 0.1, 0.0),
                  std::domain_error);
  CHECK_THROWS_AS(bhvqe::apply_beamsplitter(psi, 0, 5, 0.1, 0.0),
                  std::domain_error);
}

TEST_CASE("apply_circuit composes gates left to right") {
  auto basis = FockBasis::create(2, 3);
  bhvqe::Rng rng(31);
  StateVector psi = random_state(basis, rng);

  const StateVector before = psi;
  bhvqe::apply_circuit(psi, {});
  CHECK((psi.amplitudes() - before.amplitudes()).cwiseAbs().maxCoeff() == 0.0);

  const Circuit layer = {bhvqe::beamsplitter(0, 1, 0.62, 0.0),
                         bhvqe::kerr(0, 0.41), bhvqe::kerr(1, -0.17)};
  StateVector via_circuit = psi;
  bhvqe::apply_circuit(via_circuit, layer);
  StateVector manual = psi;
  bhvqe::apply_beamsplitter(manual, 0, 1, 0.62, 0.0);
  bhvqe::apply_kerr(manual, 0, 0.41);
  bhvqe::apply_kerr(manual, 1, -0.17);
  CHECK((via_circuit.amplitudes() - manual.amplitudes()).cwiseAbs().maxCoeff()
        < 1e-14);
}

TEST_CASE("a circuit followed by its inverse is the identity") {
  auto basis = FockBasis::create(3, 3);
  bhvqe::Rng rng(37);
  StateVector psi = random_state(basis, rng);
  const StateVector before = psi;
  const Circuit circuit = {
      bhvqe::beamsplitter(0, 1, 0.9, 1.1), bhvqe::kerr(1, 0.3),
      bhvqe::rotation(2, -0.8), bhvqe::beamsplitter(1, 2, -0.45, 0.2),
      bhvqe::kerr(0, 1.7)};
  bhvqe::apply_circuit(psi, circuit);
  bhvqe::apply_circuit(psi, bhvqe::inverse_circuit(circuit));
  CHECK((psi.amplitudes() - before.amplitudes()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("circuits round-trip through JSON") {
  const Circuit circuit = {bhvqe::beamsplitter(0, 2, 0.25, -0.5),
                           bhvqe::rotation(1, 1.5), bhvqe::kerr(2, -2.25)};
  const std::string text = bhvqe::circuit_to_json(circuit);
  const Circuit back = bhvqe::circuit_from_json(text);
  REQUIRE(back.size() == circuit.size());
  for (size_t i = 0; i < circuit.size(); ++i) {
    CHECK(back[i].kind == circuit[i].kind);
    CHECK(back[i].p == circuit[i].p);
    CHECK(back[i].theta == circuit[i].theta);
    if (back[i].kind == bhvqe::GateKind::BeamSplitter) {
      CHECK(back[i].q == circuit[i].q);
      CHECK(back[i].phi == circuit[i].phi);
    }
  }
  CHECK_THROWS(bhvqe::circuit_from_json(R"([{"gate":"squeeze","modes":[0],"theta":1}])"));
  CHECK_THROWS(bhvqe::circuit_from_json(R"([{"gate":"bs","modes":[0],"theta":1}])"));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include <json.hpp>

#include "bhvqe/bh_model.hpp"
#include "bhvqe/errors.hpp"
#include "bhvqe/rng.hpp"
#include "bhvqe/state_vector.hpp"

using bhvqe::BHModel;
using bhvqe::Complex;
using bhvqe::Configuration;
using bhvqe::FockBasis;
using bhvqe::StateVector;

namespace {

StateVector random_state(std::shared_ptr<const FockBasis> basis,
                         bhvqe::Rng& rng) {
  StateVector psi(std::move(basis));
  for (Eigen::Index i = 0; i < psi.size(); ++i)
    psi[i] = Complex(rng.normal(), rng.normal());
  psi.normalize();
  return psi;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Single-mode annihilation operator truncated at n_max bosons.
Eigen::MatrixXd annihilation(int n_max) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) b(n - 1, n) = std::sqrt(n);
  return b;
}

// Operator m acting on mode p of an s-mode register, mode 0 leftmost.
Eigen::MatrixXd on_mode(const Eigen::MatrixXd& m, int p, int s) {
  const Eigen::Index l = m.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
  for (int k = 0; k < s; ++k)
    out = kron(out, k == p ? m : Eigen::MatrixXd::Identity(l, l));
  return out;
}

// Tensor-space index of a configuration with local dimension n_max+1.
std::int64_t tensor_index(std::span<const int> c, int n_max) {
  std::int64_t t = 0;
  for (int v : c) t = t * (n_max + 1) + v;
  return t;
}

// Assemble the model Hamiltonian mode-by-mode on the full tensor space and
// project onto the fixed-N sector. Fully independent of build_hamiltonian.
Eigen::MatrixXd oracle_hamiltonian(const BHModel& model,
                                   const FockBasis& basis) {
  const int nmax = model.n_bosons;
  const int s = model.n_sites;
  const Eigen::MatrixXd b = annihilation(nmax);
  const Eigen::MatrixXd bdag = b.transpose();
  const Eigen::MatrixXd num = bdag * b;

  const Eigen::Index full = Eigen::Index(std::pow(nmax + 1.0, s) + 0.5);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(full, full);
  for (auto [p, q] : model.edges) {
    h -= model.J * (on_mode(bdag, p, s) * on_mode(b, q, s) +
                    on_mode(bdag, q, s) * on_mode(b, p, s));
  }
  for (int p = 0; p < s; ++p) {
    const Eigen::MatrixXd np = on_mode(num, p, s);
    h -= 0.5 * model.U * (np * np - np);
    if (!model.mu.empty()) h += model.mu[p] * np;
  }
  if (model.V.size() != 0)
    for (int p = 0; p < s; ++p)
      for (int q = p + 1; q < s; ++q)
        h += model.V(p, q) * on_mode(num, p, s) * on_mode(num, q, s);

  Eigen::MatrixXd sector(basis.dim(), basis.dim());
  for (std::int64_t i = 0; i < basis.dim(); ++i)
    for (std::int64_t j = 0; j < basis.dim(); ++j)
      sector(i, j) = h(tensor_index(basis.config(i), nmax),
                       tensor_index(basis.config(j), nmax));
  return sector;
}

// Textbook one-mode partial trace of the embedded pure state.
Eigen::MatrixXcd oracle_mode_rdm(const StateVector& psi, int p) {
  const FockBasis& basis = psi.basis();
  const int nmax = basis.n_bosons();
  const int s = basis.n_sites();
  const std::int64_t l = nmax + 1;
  std::int64_t full = 1;
  for (int k = 0; k < s; ++k) full *= l;

  Eigen::VectorXcd embedded = Eigen::VectorXcd::Zero(full);
  for (std::int64_t i = 0; i < basis.dim(); ++i)
    embedded[tensor_index(basis.config(i), nmax)] = psi[i];

  std::int64_t stride = 1;
  for (int k = p + 1; k < s; ++k) stride *= l;

  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(l, l);
  for (std::int64_t t = 0; t < full; ++t) {
    const std::int64_t a = (t / stride) % l;
    for (std::int64_t b = 0; b < l; ++b)
      rho(a, b) += embedded[t] * std::conj(embedded[t + (b - a) * stride]);
  }
  return rho;
}

bhvqe::SparseHamiltonian build(const BHModel& m) {
  return bhvqe::build_hamiltonian(m, FockBasis::create(m.n_sites, m.n_bosons));
}

}  // namespace

TEST_CASE("model factories and validation") {
  const BHModel dimer = BHModel::dimer(8, 10.0);
  CHECK(dimer.n_sites == 2);
  CHECK(dimer.U == doctest::Approx(1.25));
  CHECK(dimer.lambda() == doctest::Approx(10.0));
  CHECK(dimer.edges == std::vector<std::pair<int, int>>{{0, 1}});

  const BHModel ring3 = BHModel::ring(3, 4, 3.0);
  CHECK(ring3.edges ==
        std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 0}});
  const BHModel ring4 = BHModel::ring(4, 3, 3.0);
  CHECK(ring4.edges ==
        std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  CHECK(BHModel::ring(2, 2, 1.0).edges ==
        std::vector<std::pair<int, int>>{{0, 1}});

  CHECK_THROWS_AS(BHModel::dimer(0, 5.0), std::domain_error);

  BHModel bad = BHModel::dimer(2, 1.0);
  bad.edges.push_back({1, 0});
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad.edges = {{0, 0}};
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad.edges = {{0, 2}};
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad.edges = {{0, 1}};
  bad.J = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad.J = 1.0;
  bad.mu = {0.1};
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad.mu.clear();
  bad.V = Eigen::MatrixXd::Zero(2, 2);
  bad.V(0, 1) = 1.0;  // asymmetric
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad.V(1, 0) = 1.0;
  CHECK_NOTHROW(bad.validate());
  bad.V(0, 0) = 2.0;  // self-pair
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("single-particle dimer matrix is [[0,-J],[-J,0]]") {
  const auto h = build(BHModel::dimer(1, 0.0, 2.0));
  const Eigen::MatrixXd dense(h.compressed);
  Eigen::MatrixXd want(2, 2);
  want << 0, -2, -2, 0;
  CHECK((dense - want).cwiseAbs().maxCoeff() == 0.0);

  const auto gs = bhvqe::ground_state(h);
  CHECK(gs.energy == doctest::Approx(-2.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(gs.vector[0] - Complex(r, 0)) < 1e-12);
  CHECK(std::abs(gs.vector[1] - Complex(r, 0)) < 1e-12);
}

TEST_CASE("two-boson dimer diagonal carries -U per doubly occupied site") {
  BHModel m = BHModel::dimer(2, 4.0);  // U = 2
  const auto h = build(m);
  const Eigen::MatrixXd dense(h.compressed);
  auto basis = h.basis;
  const auto i20 = basis->index_of(Configuration{2, 0});
  const auto i11 = basis->index_of(Configuration{1, 1});
  const auto i02 = basis->index_of(Configuration{0, 2});
  CHECK(dense(i20, i20) == doctest::Approx(-m.U));
  CHECK(dense(i02, i02) == doctest::Approx(-m.U));
  CHECK(dense(i11, i11) == 0.0);
  CHECK(dense(i20, i11) == doctest::Approx(-std::sqrt(2.0)));
}

TEST_CASE("hamiltonian matches the operator-algebra oracle") {
  BHModel m = BHModel::ring(3, 2, 2.5);
  auto basis = FockBasis::create(3, 2);
  const auto h = bhvqe::build_hamiltonian(m, basis);
  const Eigen::MatrixXd dense(h.compressed);
  const Eigen::MatrixXd want = oracle_hamiltonian(m, *basis);
  REQUIRE(dense.rows() == 6);
  CHECK((dense - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("extended terms match the operator-algebra oracle") {
  BHModel m = BHModel::ring(3, 2, 1.5);
  m.mu = {0.1, -0.2, 0.3};
  m.V = Eigen::MatrixXd::Zero(3, 3);
  m.V(0, 1) = m.V(1, 0) = 0.5;
  m.V(1, 2) = m.V(2, 1) = -0.25;
  m.V(0, 2) = m.V(2, 0) = 0.125;
  m.validate();
  auto basis = FockBasis::create(3, 2);
  const auto h = bhvqe::build_hamiltonian(m, basis);
  const Eigen::MatrixXd dense(h.compressed);
  const Eigen::MatrixXd want = oracle_hamiltonian(m, *basis);
  CHECK((dense - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("assembled hamiltonian is exactly symmetric") {
  for (auto m : {BHModel::dimer(5, 3.0), BHModel::ring(4, 3, 7.0)}) {
    const auto h = build(m);
    const Eigen::MatrixXd dense(h.compressed);
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (const auto& e : h.entries) {
      CHECK(e.row < h.dim());
      CHECK(e.col < h.dim());
    }
  }
}

TEST_CASE("build_hamiltonian rejects a mismatched basis") {
  CHECK_THROWS_AS(
      bhvqe::build_hamiltonian(BHModel::dimer(2, 1.0), FockBasis::create(2, 3)),
      std::domain_error);
  CHECK_THROWS_AS(
      bhvqe::build_hamiltonian(BHModel::ring(3, 2, 1.0), FockBasis::create(2, 2)),
      std::domain_error);
}

TEST_CASE("non-interacting dimer ground energy is -N_B J") {
  const auto gs = bhvqe::ground_state(build(BHModel::dimer(8, 0.0)));
  CHECK(gs.energy == doctest::Approx(-8.0).epsilon(1e-10));
}

TEST_CASE("strong attraction forms a two-config cat state") {
  auto basis = FockBasis::create(2, 8);
  auto cat_weight = [&](double lambda) {
    const auto gs = bhvqe::ground_state(build(BHModel::dimer(8, lambda)));
    const double p80 =
        std::norm(gs.vector[basis->index_of(Configuration{8, 0})]);
    const double p08 =
        std::norm(gs.vector[basis->index_of(Configuration{0, 8})]);
    CHECK(p80 == doctest::Approx(p08).epsilon(1e-8));  // mirror symmetry
    return std::pair{p80 + p08, bhvqe::ipr(gs.vector)};
  };

  const auto [p10, ipr10] = cat_weight(10.0);
  CHECK(p10 > 0.85);
  CHECK(ipr10 == doctest::Approx(2.446).epsilon(1e-3));

  // deep in the localized regime the two branches carry almost everything
  const auto [p20, ipr20] = cat_weight(20.0);
  CHECK(p20 > 0.95);
  CHECK(ipr20 > 1.9);
  CHECK(ipr20 < 2.2);
}

TEST_CASE("ipr on closed-form states") {
  auto basis = FockBasis::create(2, 8);
  CHECK(bhvqe::ipr(StateVector::fock(basis, {8, 0})) == doctest::Approx(1.0));

  StateVector uniform(basis);
  for (Eigen::Index i = 0; i < uniform.size(); ++i) uniform[i] = 1.0;
  uniform.normalize();
  CHECK(bhvqe::ipr(uniform) == doctest::Approx(9.0));

  StateVector cat(basis);
  cat[basis->index_of(Configuration{8, 0})] = 1.0 / std::sqrt(2.0);
  cat[basis->index_of(Configuration{0, 8})] = 1.0 / std::sqrt(2.0);
  CHECK(bhvqe::ipr(cat) == doctest::Approx(2.0));

  StateVector zero(basis);
  CHECK_THROWS_AS(bhvqe::ipr(zero), std::domain_error);
}

TEST_CASE("spread indicators peak at intermediate interaction") {
  const auto weak = bhvqe::ground_state(build(BHModel::dimer(8, 0.01)));
  const auto mid = bhvqe::ground_state(build(BHModel::dimer(8, 3.0)));
  const auto strong = bhvqe::ground_state(build(BHModel::dimer(8, 10.0)));

  CHECK(bhvqe::ipr(mid.vector) > bhvqe::ipr(weak.vector));
  CHECK(bhvqe::ipr(mid.vector) > bhvqe::ipr(strong.vector));
  // near the peak almost the whole 9-dim basis participates
  CHECK(bhvqe::ipr(mid.vector) > 8.0);
  // by lambda = 10 the IPR has decayed back toward its cat value of 2
  CHECK(bhvqe::ipr(strong.vector) > 2.0);
  CHECK(bhvqe::ipr(strong.vector) < 2.5);

  CHECK(bhvqe::entropy(mid.vector, 0) > bhvqe::entropy(weak.vector, 0));
  CHECK(bhvqe::entropy(mid.vector, 0) > bhvqe::entropy(strong.vector, 0));
}

TEST_CASE("ring symmetry makes single-site entropy site-independent") {
  const auto gs = bhvqe::ground_state(build(BHModel::ring(3, 4, 3.0)));
  const double s0 = bhvqe::entropy(gs.vector, 0);
  CHECK(bhvqe::entropy(gs.vector, 1) == doctest::Approx(s0).epsilon(1e-9));
  CHECK(bhvqe::entropy(gs.vector, 2) == doctest::Approx(s0).epsilon(1e-9));
}

TEST_CASE("mode occupation spectrum on closed-form states") {
  auto basis = FockBasis::create(2, 3);
  const auto full = bhvqe::mode_occupation_spectrum(
      StateVector::fock(basis, {3, 0}), 0);
  CHECK(full == std::vector<double>{0, 0, 0, 1});

  auto one = FockBasis::create(2, 1);
  StateVector plus(one);
  plus[0] = plus[1] = 1.0 / std::sqrt(2.0);
  const auto lam = bhvqe::mode_occupation_spectrum(plus, 0);
  CHECK(lam[0] == doctest::Approx(0.5));
  CHECK(lam[1] == doctest::Approx(0.5));
  CHECK(bhvqe::entropy(plus, 0) == doctest::Approx(std::log(2.0)));
  CHECK(bhvqe::entropy(StateVector::fock(one, {1, 0}), 0) ==
        doctest::Approx(0.0));

  CHECK_THROWS_AS(bhvqe::mode_occupation_spectrum(plus, 2), std::domain_error);
}

TEST_CASE("occupation spectrum equals the dense partial-trace oracle") {
  bhvqe::Rng rng(101);
  const auto gs = bhvqe::ground_state(build(BHModel::dimer(8, 3.0)));
  const StateVector rnd = random_state(FockBasis::create(3, 4), rng);
  for (const StateVector* psi : {&gs.vector, &rnd}) {
    for (int p = 0; p < psi->basis().n_sites(); ++p) {
      const auto lam = bhvqe::mode_occupation_spectrum(*psi, p);
      const Eigen::MatrixXcd rho = oracle_mode_rdm(*psi, p);
      double offdiag = 0.0;
      for (Eigen::Index a = 0; a < rho.rows(); ++a)
        for (Eigen::Index b = 0; b < rho.cols(); ++b)
          if (a != b) offdiag = std::max(offdiag, std::abs(rho(a, b)));
      CHECK(offdiag < 1e-12);  // fixed-N one-mode RDM is number-diagonal
      double sum = 0.0;
      for (size_t k = 0; k < lam.size(); ++k) {
        CHECK(lam[k] == doctest::Approx(rho(k, k).real()).epsilon(1e-10));
        sum += lam[k];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("any normalized state stays above the ground energy") {
  bhvqe::Rng rng(55);
  for (auto m : {BHModel::dimer(6, 2.0), BHModel::ring(3, 4, 5.0),
                 BHModel::ring(4, 3, 0.5)}) {
    const auto h = build(m);
    const auto gs = bhvqe::ground_state(h);
    for (int trial = 0; trial < 10; ++trial) {
      StateVector v = random_state(h.basis, rng);
      CHECK(bhvqe::expectation(h, v) >= gs.energy - 1e-10);
    }
    CHECK(bhvqe::expectation(h, gs.vector) ==
          doctest::Approx(gs.energy).epsilon(1e-10));
  }
}

TEST_CASE("pair-correlation identity reduces to the local-interaction form") {
  // <n(n-1)> = Var(n) + <n>^2 - <n> on any state, the p = q case of the
  // covariance identity.
  bhvqe::Rng rng(77);
  StateVector psi = random_state(FockBasis::create(3, 5), rng);
  for (int p = 0; p < 3; ++p) {
    const auto lam = bhvqe::mode_occupation_spectrum(psi, p);
    double m1 = 0.0, m2 = 0.0, loc = 0.0;
    for (size_t k = 0; k < lam.size(); ++k) {
      m1 += lam[k] * k;
      m2 += lam[k] * k * k;
      loc += lam[k] * k * (k - 1.0);
    }
    const double var = m2 - m1 * m1;
    CHECK(loc == doctest::Approx(var + m1 * m1 - m1).epsilon(1e-12));
  }
}

TEST_CASE("iterative and dense solvers agree") {
  const BHModel m = BHModel::ring(5, 8, 3.0);
  const auto h = build(m);
  REQUIRE(h.dim() == 495);

  bhvqe::EdOptions dense_opts;
  dense_opts.dense_threshold = 1000;
  const auto dense = bhvqe::ground_state(h, dense_opts);

  bhvqe::EdOptions lanczos_opts;
  lanczos_opts.dense_threshold = 2;
  const auto iter = bhvqe::ground_state(h, lanczos_opts);

  CHECK(iter.energy == doctest::Approx(dense.energy).epsilon(1e-10));
  CHECK(iter.residual <= lanczos_opts.tol);
  REQUIRE(iter.second_energy.has_value());
  REQUIRE(dense.second_energy.has_value());
  CHECK(*iter.second_energy ==
        doctest::Approx(*dense.second_energy).epsilon(1e-9));
  const double overlap =
      std::abs(inner(iter.vector, dense.vector));
  CHECK(overlap == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("eight-site ring at dimension 6435 solves iteratively") {
  const auto h = build(BHModel::ring(8, 8, 1.0));
  REQUIRE(h.dim() == 6435);
  const auto gs = bhvqe::ground_state(h);
  CHECK(gs.residual <= 1e-10);
  // eight non-interacting bosons on an 8-ring sit at -2J each; attraction
  // only lowers the energy
  CHECK(gs.energy < -16.0);
  CHECK(gs.vector.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ground_state is deterministic and sign-fixed") {
  const auto h = build(BHModel::ring(3, 3, 2.0));
  const auto a = bhvqe::ground_state(h);
  const auto b = bhvqe::ground_state(h);
  CHECK((a.vector.amplitudes() - b.vector.amplitudes()).cwiseAbs().maxCoeff()
        == 0.0);
  // largest amplitude real positive
  Eigen::Index imax = 0;
  a.vector.amplitudes().cwiseAbs().maxCoeff(&imax);
  CHECK(a.vector[imax].real() > 0.0);
  CHECK(std::abs(a.vector[imax].imag()) < 1e-15);
}

TEST_CASE("exact two-fold degeneracy is reported with both vectors") {
  // two disconnected single-particle dimers share E0 = -J exactly
  BHModel m;
  m.n_sites = 4;
  m.n_bosons = 1;
  m.edges = {{0, 1}, {2, 3}};
  const auto h = build(m);
  const auto gs = bhvqe::ground_state(h);
  REQUIRE(gs.second_energy.has_value());
  CHECK(*gs.second_energy == doctest::Approx(gs.energy).epsilon(1e-14));
  CHECK(gs.near_degenerate());
  REQUIRE(gs.second_vector.has_value());
  CHECK(std::abs(inner(gs.vector, *gs.second_vector)) < 1e-10);

  // generic spectra are not flagged
  CHECK_FALSE(
      bhvqe::ground_state(build(BHModel::dimer(2, 1.0))).near_degenerate());
}

TEST_CASE("ground state exports to JSON") {
  const auto gs = bhvqe::ground_state(build(BHModel::dimer(1, 0.0)));
  const auto parsed = nlohmann::json::parse(bhvqe::ground_state_to_json(gs));
  CHECK(parsed.at("energy").get<double>() == doctest::Approx(-1.0));
  const auto& amps = parsed.at("amplitudes");
  REQUIRE(amps.size() == 2);
  CHECK(amps[0][0].get<std::vector<int>>() == std::vector<int>{1, 0});
  CHECK(amps[0][1].get<double>() == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(amps[0][2].get<double>() == 0.0);
  CHECK_FALSE(parsed.at("near_degenerate").get<bool>());
}

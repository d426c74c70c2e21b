#include "bhvqe/bh_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "bhvqe/errors.hpp"
#include "bhvqe/rng.hpp"

namespace bhvqe {

void BHModel::validate() const {
  if (n_sites < 1) throw std::domain_error("BHModel: n_sites must be >= 1");
  if (n_bosons < 0) throw std::domain_error("BHModel: n_bosons must be >= 0");
  if (!(J > 0.0)) throw std::domain_error("BHModel: J must be positive");
  if (U < 0.0) throw std::domain_error("BHModel: U must be non-negative");
  std::set<std::pair<int, int>> seen;
  for (auto [p, q] : edges) {
    if (p < 0 || q < 0 || p >= n_sites || q >= n_sites)
      throw std::domain_error("BHModel: edge mode out of range");
    if (p == q) throw std::domain_error("BHModel: self-edge not allowed");
    auto key = std::minmax(p, q);
    if (!seen.insert(key).second)
      throw std::domain_error("BHModel: duplicate edge");
  }
  if (!mu.empty() && static_cast<int>(mu.size()) != n_sites)
    throw std::domain_error("BHModel: mu must have one entry per site");
  if (V.size() != 0) {
    if (V.rows() != n_sites || V.cols() != n_sites)
      throw std::domain_error("BHModel: V must be n_sites x n_sites");
    if ((V - V.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::domain_error("BHModel: V must be symmetric");
    if (V.diagonal().cwiseAbs().maxCoeff() > 0.0)
      throw std::domain_error("BHModel: V couples site pairs only; "
                              "use U for on-site terms");
  }
}

namespace {

BHModel from_lambda(int n_sites, int n_bosons, double lambda, double J,
                    std::vector<std::pair<int, int>> edges) {
  if (n_bosons <= 0 && lambda != 0.0)
    throw std::domain_error("BHModel: lambda needs n_bosons >= 1");
  BHModel m;
  m.n_sites = n_sites;
  m.n_bosons = n_bosons;
  m.J = J;
  m.U = n_bosons > 0 ? lambda * J / n_bosons : 0.0;
  m.edges = std::move(edges);
  m.validate();
  return m;
}

}  // namespace

BHModel BHModel::dimer(int n_bosons, double lambda, double J) {
  return from_lambda(2, n_bosons, lambda, J, {{0, 1}});
}

BHModel BHModel::ring(int n_sites, int n_bosons, double lambda, double J) {
  if (n_sites < 2) throw std::domain_error("BHModel::ring: needs >= 2 sites");
  std::vector<std::pair<int, int>> edges;
  for (int p = 0; p + 1 < n_sites; ++p) edges.emplace_back(p, p + 1);
  if (n_sites > 2) edges.emplace_back(n_sites - 1, 0);
  return from_lambda(n_sites, n_bosons, lambda, J, std::move(edges));
}

SparseHamiltonian build_hamiltonian(const BHModel& model,
                                    std::shared_ptr<const FockBasis> basis) {
  model.validate();
  if (basis->n_sites() != model.n_sites ||
      basis->n_bosons() != model.n_bosons)
    throw std::domain_error("build_hamiltonian: basis does not match model");

  SparseHamiltonian h;
  h.basis = basis;
  const std::int64_t d = basis->dim();
  const bool has_mu = !model.mu.empty();
  const bool has_v = model.V.size() != 0;

  Configuration scratch(model.n_sites);
  for (std::int64_t i = 0; i < d; ++i) {
    const auto c = basis->config(i);

    double diag = 0.0;
    for (int p = 0; p < model.n_sites; ++p) {
      diag -= 0.5 * model.U * c[p] * (c[p] - 1);
      if (has_mu) diag += model.mu[p] * c[p];
    }
    if (has_v)
      for (int p = 0; p < model.n_sites; ++p)
        for (int q = p + 1; q < model.n_sites; ++q)
          diag += model.V(p, q) * c[p] * c[q];
    if (diag != 0.0) h.entries.push_back({i, i, diag});

    // -J b_p+ b_q moves one boson q -> p; the reverse move emits the
    // symmetric partner when the destination configuration is visited.
    for (auto [e0, e1] : model.edges) {
      for (auto [p, q] : {std::pair{e0, e1}, std::pair{e1, e0}}) {
        if (c[q] == 0) continue;
        std::copy(c.begin(), c.end(), scratch.begin());
        ++scratch[p];
        --scratch[q];
        const double amp =
            -model.J * std::sqrt(static_cast<double>((c[p] + 1) * c[q]));
        h.entries.push_back({basis->index_of(scratch), i, amp});
      }
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(h.entries.size());
  for (const auto& e : h.entries)
    triplets.emplace_back(static_cast<int>(e.row), static_cast<int>(e.col),
                          e.value);
  h.compressed.resize(d, d);
  h.compressed.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

double expectation(const SparseHamiltonian& h, const StateVector& state) {
  if (!state.basis().same_space(*h.basis))
    throw std::invalid_argument("expectation: state basis mismatch");
  const Eigen::VectorXd re = state.amplitudes().real();
  const Eigen::VectorXd im = state.amplitudes().imag();
  return re.dot(h.compressed * re) + im.dot(h.compressed * im);
}

namespace {

struct RitzPair {
  double theta = 0.0;
  Eigen::VectorXd y;
  double residual = 0.0;
};

// Lowest eigenpair of h restricted to the complement of the guard vectors,
// by restarted Lanczos with full reorthogonalization.
RitzPair lanczos_lowest(const Eigen::SparseMatrix<double>& h,
                        const std::vector<Eigen::VectorXd>& guards,
                        const EdOptions& opts) {
  const Eigen::Index n = h.rows();
  Rng rng(0x1a5cb0bULL);

  auto project_out_guards = [&guards](Eigen::VectorXd& v) {
    for (const auto& g : guards) v -= g.dot(v) * g;
  };
  auto fresh_start = [&]() {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    project_out_guards(v);
    const double nv = v.norm();
    if (nv < 1e-12)
      throw solver_error("lanczos: cannot build a start vector");
    return Eigen::VectorXd(v / nv);
  };

  Eigen::VectorXd q = fresh_start();
  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    std::vector<Eigen::VectorXd> basis{q};
    std::vector<double> alpha, beta;
    bool exhausted = false;

    while (static_cast<int>(basis.size()) <= opts.max_basis) {
      const Eigen::VectorXd& v = basis.back();
      Eigen::VectorXd w = h * v;
      alpha.push_back(v.dot(w));
      w -= alpha.back() * v;
      if (!beta.empty()) w -= beta.back() * basis[basis.size() - 2];
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : basis) w -= b.dot(w) * b;
        project_out_guards(w);
      }
      const double nb = w.norm();
      if (nb < 1e-13) {
        exhausted = true;  // invariant subspace found
        break;
      }
      if (static_cast<int>(basis.size()) == opts.max_basis) break;
      beta.push_back(nb);
      basis.push_back(w / nb);
    }

    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) {
        t(i, i + 1) = beta[i];
        t(i + 1, i) = beta[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    if (es.info() != Eigen::Success)
      throw solver_error("lanczos: tridiagonal eigensolver failed");

    RitzPair out;
    out.theta = es.eigenvalues()[0];
    out.y = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
      out.y += es.eigenvectors()(i, 0) * basis[i];
    project_out_guards(out.y);
    out.y.normalize();
    out.residual = (h * out.y - out.theta * out.y).norm();
    if (out.residual <= opts.tol) return out;
    if (exhausted) {
      // Krylov space closed before reaching tolerance: restart afresh but
      // keep the best direction in the mix.
      q = fresh_start();
      q += out.y;
      project_out_guards(q);
      q.normalize();
    } else {
      q = out.y;
    }
  }
  throw solver_error("lanczos: residual did not reach tolerance after " +
                     std::to_string(opts.max_restarts) + " restarts");
}

StateVector to_state(std::shared_ptr<const FockBasis> basis,
                     const Eigen::VectorXd& v) {
  StateVector s(std::move(basis), v.cast<Complex>());
  s.phase_fix();
  return s;
}

}  // namespace

GroundState ground_state(const SparseHamiltonian& h, const EdOptions& opts) {
  const std::int64_t d = h.dim();
  if (d < 1) throw std::domain_error("ground_state: empty basis");

  double e0 = 0.0, e1 = 0.0, res0 = 0.0, res1 = 0.0;
  Eigen::VectorXd v0, v1;
  bool have_second = false;

  if (d < opts.dense_threshold) {
    const Eigen::MatrixXd dense(h.compressed);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    if (es.info() != Eigen::Success)
      throw solver_error("ground_state: dense eigensolver failed");
    e0 = es.eigenvalues()[0];
    v0 = es.eigenvectors().col(0);
    res0 = (h.compressed * v0 - e0 * v0).norm();
    if (d > 1) {
      e1 = es.eigenvalues()[1];
      v1 = es.eigenvectors().col(1);
      res1 = (h.compressed * v1 - e1 * v1).norm();
      have_second = true;
    }
  } else {
    RitzPair lo = lanczos_lowest(h.compressed, {}, opts);
    e0 = lo.theta;
    v0 = lo.y;
    res0 = lo.residual;
    RitzPair hi = lanczos_lowest(h.compressed, {v0}, opts);
    e1 = hi.theta;
    v1 = hi.y;
    res1 = hi.residual;
    have_second = true;
  }

  GroundState gs{e0, to_state(h.basis, v0), std::nullopt, std::nullopt, res0};
  if (have_second) {
    gs.second_energy = e1;
    if (std::abs(e1 - e0) < 1e-12 * std::abs(e0)) {
      gs.second_vector = to_state(h.basis, v1);
      gs.residual = std::max(res0, res1);
    }
  }
  return gs;
}

double ipr(const StateVector& state) {
  const double n = state.norm();
  if (std::abs(n - 1.0) > 1e-9)
    throw std::domain_error("ipr: state must be normalized");
  double s4 = 0.0;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double p = std::norm(state[i]);
    s4 += p * p;
  }
  return 1.0 / s4;
}

std::vector<double> mode_occupation_spectrum(const StateVector& state, int p) {
  const FockBasis& basis = state.basis();
  if (p < 0 || p >= basis.n_sites())
    throw std::domain_error("mode_occupation_spectrum: invalid mode");
  std::vector<double> lam(basis.n_bosons() + 1, 0.0);
  for (std::int64_t i = 0; i < basis.dim(); ++i)
    lam[basis.config(i)[p]] += std::norm(state[i]);
  return lam;
}

double entropy(const StateVector& state, int p) {
  double s = 0.0;
  for (double lam : mode_occupation_spectrum(state, p))
    if (lam > 0.0) s -= lam * std::log(lam);
  return s;
}

std::string ground_state_to_json(const GroundState& gs) {
  nlohmann::json out;
  out["energy"] = gs.energy;
  nlohmann::json amps = nlohmann::json::array();
  const FockBasis& basis = gs.vector.basis();
  for (std::int64_t i = 0; i < basis.dim(); ++i) {
    const auto c = basis.config(i);
    amps.push_back({std::vector<int>(c.begin(), c.end()),
                    gs.vector[i].real(), gs.vector[i].imag()});
  }
  out["amplitudes"] = std::move(amps);
  if (gs.second_energy) out["second_energy"] = *gs.second_energy;
  out["near_degenerate"] = gs.near_degenerate();
  return out.dump(2);
}

}  // namespace bhvqe

#include "bhvqe/engine.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "bhvqe/gates.hpp"
#include "bhvqe/rng.hpp"

namespace bhvqe {

namespace {

void check_normalized(const StateVector& v, const char* who) {
  if (std::abs(v.norm() - 1.0) > 1e-9)
    throw std::domain_error(std::string(who) + ": state is not normalized");
}

struct Problem {
  std::shared_ptr<const FockBasis> basis;
  SparseHamiltonian ham;
  GroundState gs;
  CircuitTemplate tpl;
  StateVector initial;
};

Problem make_problem(const ExperimentSpec& spec,
                     const StateVector* explicit_initial) {
  auto basis =
      std::make_shared<FockBasis>(spec.model.n_sites, spec.model.n_bosons);
  SparseHamiltonian ham = build_hamiltonian(spec.model, basis);
  GroundState gs = ground_state(ham);
  CircuitTemplate tpl = build_ansatz(spec.ansatz);
  StateVector initial = explicit_initial
                            ? *explicit_initial
                            : prepare_initial_state(spec.prep, basis);
  if (!initial.basis().same_space(*basis))
    throw std::invalid_argument(
        "experiment: initial state lives on a different basis");
  check_normalized(initial, "experiment initial state");
  return Problem{std::move(basis), std::move(ham), std::move(gs),
                 std::move(tpl), std::move(initial)};
}

StateVector apply_params(const Problem& pb, std::span<const double> params) {
  StateVector psi = pb.initial;
  apply_circuit(psi, pb.tpl.bind(params));
  return psi;
}

CostFunction make_cost(const Problem& pb, const ExperimentSpec& spec,
                       const ShotPlan* plan, Rng& sample_rng) {
  if (spec.cost == CostKind::Infidelity)
    return [&pb](std::span<const double> th) {
      return 1.0 - fidelity(pb.gs.vector, apply_params(pb, th));
    };
  if (spec.cost == CostKind::EnergyExact ||
      (spec.cost == CostKind::EnergySampled && spec.infinite_shots))
    return [&pb, &spec](std::span<const double> th) {
      return estimate_energy_exact(apply_params(pb, th), spec.model).value;
    };
  return [&pb, &spec, plan, &sample_rng](std::span<const double> th) {
    return estimate_energy(apply_params(pb, th), spec.model, *plan, sample_rng)
        .value;
  };
}

RunResult run_generic(const ExperimentSpec& spec,
                      const StateVector* explicit_initial) {
  const auto t0 = std::chrono::steady_clock::now();
  spec.validate();
  const Problem pb = make_problem(spec, explicit_initial);

  std::optional<ShotPlan> plan;
  if (spec.cost == CostKind::EnergySampled && !spec.infinite_shots)
    plan = spec.colored_plan ? colored_shot_plan(spec.model, spec.shots)
                             : default_shot_plan(spec.model, spec.shots);

  const int dim = pb.tpl.parameter_count();
  const Rng master(spec.seed);
  const int restarts = dim == 0 ? 1 : spec.restarts;

  std::optional<RunResult> best;
  double best_metric = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    OptimizerConfig oc = spec.optimizer;
    oc.seed = master.split(2 * r).seed();
    Rng sample_rng = master.split(2 * r + 1);
    const CostFunction cost =
        make_cost(pb, spec, plan ? &*plan : nullptr, sample_rng);

    OptimizationTrace trace;
    if (dim == 0) {
      const double c = cost(std::span<const double>{});
      trace.evaluations.push_back({params_hash(std::span<const double>{}), c});
      trace.evaluation_count = 1;
      trace.best_cost = c;
      trace.terminated_reason = "no_parameters";
    } else {
      trace = minimize(cost, dim, oc);
    }

    const StateVector psi = apply_params(pb, trace.best_params);
    const double energy = expectation(pb.ham, psi);
    const double fid = graded_fidelity(psi, pb.gs);
    const double metric =
        spec.cost == CostKind::Infidelity ? 1.0 - fid : energy;
    if (!best || metric < best_metric) {
      best_metric = metric;
      RunResult res;
      res.best_params = trace.best_params;
      res.fidelity = fid;
      res.energy = energy;
      res.ground_energy = pb.gs.energy;
      res.delta_e = energy - pb.gs.energy;
      res.trace = std::move(trace);
      res.seed = spec.seed;
      res.winning_restart = r;
      best.emplace(std::move(res));
    }
  }

  best->wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return std::move(*best);
}

void require_cost(const ExperimentSpec& spec, CostKind kind,
                  const char* who) {
  if (spec.cost != kind)
    throw std::invalid_argument(std::string(who) +
                                ": experiment has the wrong cost kind");
}

}  // namespace

void ExperimentSpec::validate() const {
  model.validate();
  if (ansatz.n_sites != model.n_sites)
    throw std::invalid_argument(
        "experiment: ansatz and model disagree on the mode count");
  optimizer.validate();
  if (restarts < 1)
    throw std::invalid_argument("experiment: restarts must be >= 1");
  if (!(success_threshold > 0.0 && success_threshold <= 1.0))
    throw std::invalid_argument(
        "experiment: success_threshold must be in (0, 1]");
  if (cost == CostKind::EnergySampled && !infinite_shots && shots <= 0)
    throw std::invalid_argument(
        "experiment: sampled cost needs a positive shot count");
}

StateVector prepare_initial_state(const InitialStatePrep& prep,
                                  std::shared_ptr<const FockBasis> basis) {
  const int sites = basis->n_sites();
  const int bosons = basis->n_bosons();
  switch (prep.kind) {
    case PrepKind::Monomodal: {
      Configuration cfg(sites, 0);
      cfg[0] = bosons;
      return StateVector::fock(std::move(basis), cfg);
    }
    case PrepKind::Bimodal: {
      if (sites < 2)
        throw std::domain_error("bimodal preparation needs two modes");
      const int first = 0;
      const int second = sites == 2 ? 1 : 2;
      const int hi = (bosons + 1) / 2;
      Configuration cfg(sites, 0);
      cfg[first] = hi;
      cfg[second] = bosons - hi;
      return StateVector::fock(std::move(basis), cfg);
    }
    case PrepKind::Explicit:
      return StateVector::fock(std::move(basis), prep.explicit_config);
  }
  throw std::logic_error("unreachable preparation kind");
}

double fidelity(const StateVector& a, const StateVector& b) {
  check_normalized(a, "fidelity");
  check_normalized(b, "fidelity");
  return std::norm(inner(a, b));
}

double graded_fidelity(const StateVector& psi, const GroundState& gs) {
  if (gs.near_degenerate() && gs.second_vector) {
    check_normalized(psi, "graded_fidelity");
    const Complex c0 = inner(gs.vector, psi);
    StateVector w = *gs.second_vector;
    const Complex mix = inner(gs.vector, w);
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] -= mix * gs.vector[i];
    const double rest = w.norm();
    if (rest < 1e-12) return std::norm(c0);
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] /= rest;
    return std::norm(c0) + std::norm(inner(w, psi));
  }
  return fidelity(gs.vector, psi);
}

RunResult run_vqa_infidelity(const ExperimentSpec& spec) {
  require_cost(spec, CostKind::Infidelity, "run_vqa_infidelity");
  return run_generic(spec, nullptr);
}

RunResult run_vqa_infidelity_from(const ExperimentSpec& spec,
                                  const StateVector& initial) {
  require_cost(spec, CostKind::Infidelity, "run_vqa_infidelity");
  return run_generic(spec, &initial);
}

RunResult run_vqe_exact(const ExperimentSpec& spec) {
  require_cost(spec, CostKind::EnergyExact, "run_vqe_exact");
  return run_generic(spec, nullptr);
}

RunResult run_vqe_sampled(const ExperimentSpec& spec) {
  require_cost(spec, CostKind::EnergySampled, "run_vqe_sampled");
  return run_generic(spec, nullptr);
}

RunResult run_experiment(const ExperimentSpec& spec) {
  switch (spec.cost) {
    case CostKind::Infidelity:
      return run_vqa_infidelity(spec);
    case CostKind::EnergyExact:
      return run_vqe_exact(spec);
    case CostKind::EnergySampled:
      return run_vqe_sampled(spec);
  }
  throw std::logic_error("unreachable cost kind");
}

std::optional<int> scan_layers(const ExperimentSpec& spec, int max_layers) {
  if (max_layers < 1)
    throw std::domain_error("scan_layers: max_layers must be >= 1");
  spec.validate();
  for (int layers = 1; layers <= max_layers; ++layers) {
    ExperimentSpec cell = spec;
    cell.ansatz.n_layers = layers;
    cell.seed = Rng(spec.seed).split(layers).seed();
    const RunResult result = run_experiment(cell);
    if (result.fidelity >= spec.success_threshold) return layers;
  }
  return std::nullopt;
}

std::string run_result_to_json(const RunResult& result) {
  nlohmann::json j;
  j["seed"] = result.seed;
  j["winning_restart"] = result.winning_restart;
  j["fidelity"] = result.fidelity;
  j["energy"] = result.energy;
  j["delta_e"] = result.delta_e;
  j["ground_energy"] = result.ground_energy;
  j["wall_seconds"] = result.wall_seconds;
  j["best_params"] = result.best_params;
  nlohmann::json trace;
  trace["terminated_reason"] = result.trace.terminated_reason;
  trace["evaluation_count"] = result.trace.evaluation_count;
  trace["best_cost"] = result.trace.best_cost;
  auto costs = nlohmann::json::array();
  auto hashes = nlohmann::json::array();
  for (const Evaluation& e : result.trace.evaluations) {
    costs.push_back(e.cost);
    hashes.push_back(e.params_hash);
  }
  trace["costs"] = std::move(costs);
  trace["params_hashes"] = std::move(hashes);
  j["trace"] = std::move(trace);
  return j.dump(2);
}

void write_grid_csv(const std::vector<GridCell>& cells, std::ostream& os) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(17);
  os << "n_bosons,n_layers,lambda,fidelity,delta_e,shots,seed\n";
  for (const GridCell& c : cells)
    os << c.n_bosons << "," << c.n_layers << "," << c.lambda << ","
       << c.fidelity << "," << c.delta_e << "," << c.shots << "," << c.seed
       << "\n";
  os.flags(flags);
  os.precision(precision);
}

}  // namespace bhvqe

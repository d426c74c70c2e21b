#include "bhvqe/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>

#include <json.hpp>

#include "bhvqe/errors.hpp"

namespace bhvqe {

namespace {

constexpr double kQuarterPi = std::numbers::pi / 4.0;

template <typename Fn>
void for_each_outcome(const CountsHistogram& hist, Fn&& fn) {
  const double inv = 1.0 / static_cast<double>(hist.shots);
  for (const auto& [config, count] : hist.counts)
    fn(std::span<const int>(config), static_cast<double>(count) * inv);
}

template <typename Fn>
void for_each_outcome(const StateVector& state, Fn&& fn) {
  const FockBasis& basis = state.basis();
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double w = std::norm(state[i]);
    if (w > 0.0) fn(basis.config(i), w);
  }
}

// Mean and std error of a per-shot scalar over weighted outcomes.
// shots <= 0 marks the analytic view, whose std error is exactly zero.
template <typename Source, typename Fn>
std::pair<double, double> weighted_mean(const Source& src, std::int64_t shots,
                                        Fn&& f) {
  double m1 = 0.0;
  double m2 = 0.0;
  for_each_outcome(src, [&](std::span<const int> c, double w) {
    const double x = f(c);
    m1 += w * x;
    m2 += w * x * x;
  });
  if (shots <= 0) return {m1, 0.0};
  const double var = std::max(0.0, m2 - m1 * m1);
  return {m1, std::sqrt(var / static_cast<double>(shots))};
}

template <typename Source>
InteractionEstimate interaction_impl(const Source& src, std::int64_t shots,
                                     int n_sites, double U) {
  InteractionEstimate out;
  out.per_site.resize(n_sites);
  out.std_error.resize(n_sites);
  for (int p = 0; p < n_sites; ++p) {
    const auto [m, se] = weighted_mean(src, shots, [&](std::span<const int> c) {
      return -0.5 * U * c[p] * (c[p] - 1.0);
    });
    out.per_site[p] = m;
    out.std_error[p] = se;
    out.total += m;
  }
  return out;
}

void check_extended_shapes(int n_sites, const std::vector<double>& mu,
                           const Eigen::MatrixXd& V) {
  if (!mu.empty() && static_cast<int>(mu.size()) != n_sites)
    throw std::invalid_argument("extended terms: mu length != site count");
  if (V.size() != 0 && (V.rows() != n_sites || V.cols() != n_sites))
    throw std::invalid_argument("extended terms: V shape != site count");
}

double chemical_of(std::span<const int> c, const std::vector<double>& mu) {
  double x = 0.0;
  for (size_t p = 0; p < mu.size(); ++p) x += mu[p] * c[p];
  return x;
}

double pair_of(std::span<const int> c, const Eigen::MatrixXd& V) {
  double x = 0.0;
  for (int p = 0; p < V.rows(); ++p)
    for (int q = p + 1; q < V.cols(); ++q) x += V(p, q) * c[p] * c[q];
  return x;
}

template <typename Source>
ExtendedEstimate extended_impl(const Source& src, std::int64_t shots,
                               int n_sites, const std::vector<double>& mu,
                               const Eigen::MatrixXd& V) {
  check_extended_shapes(n_sites, mu, V);
  ExtendedEstimate out;
  out.chemical = weighted_mean(src, shots, [&](std::span<const int> c) {
                   return chemical_of(c, mu);
                 }).first;
  out.pair = weighted_mean(src, shots, [&](std::span<const int> c) {
               return pair_of(c, V);
             }).first;
  out.std_error = weighted_mean(src, shots, [&](std::span<const int> c) {
                    return chemical_of(c, mu) + pair_of(c, V);
                  }).second;
  return out;
}

int histogram_sites(const CountsHistogram& hist) {
  if (hist.shots <= 0 || hist.counts.empty())
    throw std::domain_error("estimator needs a non-empty histogram");
  return static_cast<int>(hist.counts.begin()->first.size());
}

// Appends interaction (and, when present, chemical/pair) terms read from one
// plain-basis source, and accumulates that setting's variance contribution.
template <typename Source>
void append_plain_terms(const Source& src, std::int64_t shots,
                        const BHModel& model, EnergyEstimate& out,
                        double& variance) {
  for (int p = 0; p < model.n_sites; ++p) {
    const auto [m, se] = weighted_mean(src, shots, [&](std::span<const int> c) {
      return -0.5 * model.U * c[p] * (c[p] - 1.0);
    });
    out.terms.push_back({"interaction(" + std::to_string(p) + ")", m, se});
  }
  if (!model.mu.empty()) {
    const auto [m, se] = weighted_mean(src, shots, [&](std::span<const int> c) {
      return chemical_of(c, model.mu);
    });
    out.terms.push_back({"chemical", m, se});
  }
  if (model.V.size() != 0) {
    const auto [m, se] = weighted_mean(src, shots, [&](std::span<const int> c) {
      return pair_of(c, model.V);
    });
    out.terms.push_back({"pair", m, se});
  }
  const auto [total, se] = weighted_mean(src, shots, [&](std::span<const int> c) {
    double x = 0.0;
    for (int p = 0; p < model.n_sites; ++p)
      x += -0.5 * model.U * c[p] * (c[p] - 1.0);
    x += chemical_of(c, model.mu) + pair_of(c, model.V);
    return x;
  });
  (void)total;
  variance += se * se;
}

template <typename Source>
void append_hop_terms(const Source& src, std::int64_t shots, double J,
                      const std::vector<std::pair<int, int>>& edges,
                      EnergyEstimate& out, double& variance) {
  for (const auto& [p, q] : edges) {
    const auto [m, se] = weighted_mean(src, shots, [&](std::span<const int> c) {
      return static_cast<double>(c[q] - c[p]);
    });
    out.terms.push_back({"hopping(" + std::to_string(p) + "," +
                             std::to_string(q) + ")",
                         -J * m, std::abs(J) * se});
  }
  const auto [total, se] = weighted_mean(src, shots, [&](std::span<const int> c) {
    double x = 0.0;
    for (const auto& [p, q] : edges) x += -J * (c[q] - c[p]);
    return x;
  });
  (void)total;
  variance += se * se;
}

void check_state_model(const StateVector& state, const BHModel& model) {
  if (state.basis().n_sites() != model.n_sites ||
      state.basis().n_bosons() != model.n_bosons)
    throw std::invalid_argument("state basis does not match the model");
}

void finish_estimate(EnergyEstimate& out, double variance) {
  out.value = 0.0;
  for (const TermEstimate& t : out.terms) out.value += t.value;
  out.std_error = std::sqrt(variance);
}

}  // namespace

CountsHistogram sample_counts(const StateVector& state, std::int64_t shots,
                              Rng& rng) {
  if (shots <= 0)
    throw std::domain_error("sample_counts: shots must be positive");
  if (std::abs(state.norm() - 1.0) > 1e-9)
    throw std::domain_error("sample_counts: state is not normalized");

  const FockBasis& basis = state.basis();
  std::vector<std::pair<Eigen::Index, double>> support;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    const double p = std::norm(state[i]);
    if (p > 0.0) support.push_back({i, p});
  }

  CountsHistogram hist;
  hist.shots = shots;
  std::int64_t remaining = shots;
  double rest = 0.0;
  for (const auto& [i, p] : support) rest += p;
  for (size_t k = 0; k < support.size() && remaining > 0; ++k) {
    const auto& [i, p] = support[k];
    // The last supported outcome absorbs the rounding residue.
    const double ratio =
        (k + 1 == support.size() || rest <= p) ? 1.0 : p / rest;
    const std::int64_t draw = rng.binomial(remaining, ratio);
    if (draw > 0) hist.counts[basis.config_copy(i)] += draw;
    remaining -= draw;
    rest -= p;
  }
  return hist;
}

void write_histogram_csv(const CountsHistogram& hist, std::ostream& os) {
  const int sites =
      hist.counts.empty() ? 0 : static_cast<int>(hist.counts.begin()->first.size());
  for (int i = 0; i < sites; ++i) os << "n" << i << ",";
  os << "count\n";
  for (const auto& [config, count] : hist.counts) {
    for (int n : config) os << n << ",";
    os << count << "\n";
  }
}

std::string energy_estimate_to_json(const EnergyEstimate& estimate) {
  nlohmann::json j;
  j["value"] = estimate.value;
  j["std_error"] = estimate.std_error;
  j["terms"] = nlohmann::json::array();
  for (const TermEstimate& t : estimate.terms)
    j["terms"].push_back(
        {{"label", t.label}, {"value", t.value}, {"std_error", t.std_error}});
  return j.dump(2);
}

EdgeEstimate estimate_hopping(const StateVector& state, int p, int q,
                              std::int64_t shots, Rng& rng, double J) {
  StateVector rotated = state;
  apply_beamsplitter(rotated, p, q, kQuarterPi, 0.0);
  const CountsHistogram hist = sample_counts(rotated, shots, rng);
  const auto [m, se] = weighted_mean(hist, shots, [&](std::span<const int> c) {
    return static_cast<double>(c[q] - c[p]);
  });
  return {p, q, m, se, -J * m};
}

EdgeEstimate exact_hopping(const StateVector& state, int p, int q, double J) {
  StateVector rotated = state;
  apply_beamsplitter(rotated, p, q, kQuarterPi, 0.0);
  const auto [m, se] = weighted_mean(rotated, 0, [&](std::span<const int> c) {
    return static_cast<double>(c[q] - c[p]);
  });
  (void)se;
  return {p, q, m, 0.0, -J * m};
}

InteractionEstimate estimate_interaction(const CountsHistogram& hist,
                                         double U) {
  return interaction_impl(hist, hist.shots, histogram_sites(hist), U);
}

InteractionEstimate exact_interaction(const StateVector& state, double U) {
  return interaction_impl(state, 0, state.basis().n_sites(), U);
}

ExtendedEstimate estimate_extended_terms(const CountsHistogram& hist,
                                         const std::vector<double>& mu,
                                         const Eigen::MatrixXd& V) {
  return extended_impl(hist, hist.shots, histogram_sites(hist), mu, V);
}

ExtendedEstimate exact_extended_terms(const StateVector& state,
                                      const std::vector<double>& mu,
                                      const Eigen::MatrixXd& V) {
  return extended_impl(state, 0, state.basis().n_sites(), mu, V);
}

ShotPlan default_shot_plan(const BHModel& model, std::int64_t total_shots) {
  model.validate();
  const auto n_groups = static_cast<std::int64_t>(1 + model.edges.size());
  if (total_shots < n_groups)
    throw plan_error("default_shot_plan: fewer shots than settings");

  ShotPlan plan;
  plan.total_shots = total_shots;
  const std::int64_t base = total_shots / n_groups;
  std::int64_t extra = total_shots % n_groups;
  const auto take = [&] { return base + (extra-- > 0 ? 1 : 0); };

  MeasurementGroup plain;
  plain.plain = true;
  plain.shots = take();
  plan.groups.push_back(std::move(plain));
  for (const auto& [p, q] : model.edges) {
    MeasurementGroup g;
    g.rotation.push_back(beamsplitter(p, q, kQuarterPi, 0.0));
    g.hop_edges.push_back({p, q});
    g.shots = take();
    plan.groups.push_back(std::move(g));
  }
  return plan;
}

ShotPlan colored_shot_plan(const BHModel& model, std::int64_t total_shots) {
  model.validate();
  std::vector<std::vector<std::pair<int, int>>> colors;
  for (const auto& edge : model.edges) {
    bool placed = false;
    for (auto& color : colors) {
      const bool clash = std::any_of(
          color.begin(), color.end(), [&](const std::pair<int, int>& e) {
            return e.first == edge.first || e.first == edge.second ||
                   e.second == edge.first || e.second == edge.second;
          });
      if (!clash) {
        color.push_back(edge);
        placed = true;
        break;
      }
    }
    if (!placed) colors.push_back({edge});
  }

  const auto n_groups = static_cast<std::int64_t>(1 + colors.size());
  if (total_shots < n_groups)
    throw plan_error("colored_shot_plan: fewer shots than settings");

  ShotPlan plan;
  plan.total_shots = total_shots;
  const std::int64_t base = total_shots / n_groups;
  std::int64_t extra = total_shots % n_groups;
  const auto take = [&] { return base + (extra-- > 0 ? 1 : 0); };

  MeasurementGroup plain;
  plain.plain = true;
  plain.shots = take();
  plan.groups.push_back(std::move(plain));
  for (const auto& color : colors) {
    MeasurementGroup g;
    for (const auto& [p, q] : color) {
      g.rotation.push_back(beamsplitter(p, q, kQuarterPi, 0.0));
      g.hop_edges.push_back({p, q});
    }
    g.shots = take();
    plan.groups.push_back(std::move(g));
  }
  return plan;
}

void validate_plan(const ShotPlan& plan, const BHModel& model) {
  model.validate();
  if (plan.total_shots <= 0)
    throw plan_error("plan: total_shots must be positive");

  std::int64_t sum = 0;
  int plain_groups = 0;
  std::map<std::pair<int, int>, int> reads;  // canonical edge -> read count
  for (const MeasurementGroup& g : plan.groups) {
    if (g.shots <= 0)
      throw plan_error("plan: every group needs a positive shot share");
    sum += g.shots;
    if (g.plain) {
      ++plain_groups;
      if (!g.rotation.empty() || !g.hop_edges.empty())
        throw plan_error("plan: plain group must carry no rotation or edges");
      continue;
    }
    if (g.hop_edges.empty())
      throw plan_error("plan: rotated group reads no edge");
    std::set<int> used;
    for (const auto& [p, q] : g.hop_edges) {
      if (!used.insert(p).second || !used.insert(q).second)
        throw plan_error("plan: edges within one setting share a mode");
      ++reads[std::minmax(p, q)];
    }
    if (g.rotation.size() != g.hop_edges.size())
      throw plan_error("plan: rotation size does not match the edge list");
    std::multiset<std::pair<int, int>> rotated, listed;
    for (const Gate& gate : g.rotation) {
      if (gate.kind != GateKind::BeamSplitter ||
          std::abs(gate.theta - kQuarterPi) > 1e-12 ||
          std::abs(gate.phi) > 1e-12)
        throw plan_error("plan: rotation gate is not a pi/4 beam-splitter");
      rotated.insert({gate.p, gate.q});
    }
    for (const auto& e : g.hop_edges) listed.insert(e);
    if (rotated != listed)
      throw plan_error("plan: rotation pairs do not match the group's edges");
  }
  if (sum != plan.total_shots)
    throw plan_error("plan: shot shares do not sum to total_shots");
  if (plain_groups != 1)
    throw plan_error("plan: need exactly one plain-basis group");

  std::set<std::pair<int, int>> model_edges;
  for (const auto& [p, q] : model.edges) model_edges.insert(std::minmax(p, q));
  for (const auto& [edge, times] : reads) {
    if (!model_edges.count(edge))
      throw plan_error("plan: reads an edge the model lacks");
    if (times != 1) throw plan_error("plan: edge read more than once");
  }
  for (const auto& edge : model_edges)
    if (!reads.count(edge))
      throw plan_error("plan: model edge not covered");
}

EnergyEstimate estimate_energy(const StateVector& state, const BHModel& model,
                               const ShotPlan& plan, Rng& rng) {
  check_state_model(state, model);
  validate_plan(plan, model);

  EnergyEstimate out;
  double variance = 0.0;
  for (const MeasurementGroup& g : plan.groups) {
    if (g.plain) {
      const CountsHistogram hist = sample_counts(state, g.shots, rng);
      append_plain_terms(hist, g.shots, model, out, variance);
    } else {
      StateVector rotated = state;
      apply_circuit(rotated, g.rotation);
      const CountsHistogram hist = sample_counts(rotated, g.shots, rng);
      append_hop_terms(hist, g.shots, model.J, g.hop_edges, out, variance);
    }
  }
  finish_estimate(out, variance);
  return out;
}

EnergyEstimate estimate_energy_exact(const StateVector& state,
                                     const BHModel& model) {
  check_state_model(state, model);
  model.validate();

  EnergyEstimate out;
  double variance = 0.0;
  append_plain_terms(state, 0, model, out, variance);
  for (const auto& [p, q] : model.edges) {
    StateVector rotated = state;
    apply_beamsplitter(rotated, p, q, kQuarterPi, 0.0);
    append_hop_terms(rotated, 0, model.J, {{p, q}}, out, variance);
  }
  finish_estimate(out, variance);
  return out;
}

}  // namespace bhvqe

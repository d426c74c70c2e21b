#include "bhvqe/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

#include <Eigen/Dense>

#include "bhvqe/errors.hpp"
#include "bhvqe/rng.hpp"

namespace bhvqe {

namespace {

// Counts every cost call against the budget and keeps the running best.
class BudgetedCost {
 public:
  BudgetedCost(const CostFunction& cost, int limit, OptimizationTrace& trace)
      : cost_(cost), limit_(limit), trace_(trace) {}

  bool exhausted() const { return trace_.evaluation_count >= limit_; }

  std::optional<double> operator()(std::span<const double> x) {
    if (exhausted()) return std::nullopt;
    const double f = cost_(x);
    ++trace_.evaluation_count;
    if (!std::isfinite(f))
      throw optimize_error("cost returned a non-finite value (" +
                           std::to_string(f) + ") at evaluation " +
                           std::to_string(trace_.evaluation_count));
    trace_.evaluations.push_back({params_hash(x), f});
    if (trace_.best_params.empty() || f < trace_.best_cost) {
      trace_.best_cost = f;
      trace_.best_params.assign(x.begin(), x.end());
    }
    return f;
  }

 private:
  const CostFunction& cost_;
  int limit_;
  OptimizationTrace& trace_;
};

void quasi_newton(BudgetedCost& eval, std::vector<double> x,
                  const OptimizerConfig& config, OptimizationTrace& trace) {
  const int n = static_cast<int>(x.size());
  const double h = config.fd_step;

  const auto f0 = eval(x);
  if (!f0) {
    trace.terminated_reason = "budget";
    return;
  }
  double f = *f0;

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g_prev(n), s_prev(n);
  bool have_prev = false;

  while (true) {
    // Central-difference gradient.
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
      x[i] += h;
      const auto fp = eval(x);
      x[i] -= 2 * h;
      const auto fm = eval(x);
      x[i] += h;
      if (!fp || !fm) {
        trace.terminated_reason = "budget";
        return;
      }
      g[i] = (*fp - *fm) / (2 * h);
    }

    if (g.lpNorm<Eigen::Infinity>() < 1e-14) {
      trace.terminated_reason = "tolerance";
      return;
    }

    if (have_prev) {
      const Eigen::VectorXd y = g - g_prev;
      const double ys = y.dot(s_prev);
      if (ys > 1e-12) {
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
        const double rho = 1.0 / ys;
        H = (I - rho * s_prev * y.transpose()) * H *
                (I - rho * y * s_prev.transpose()) +
            rho * s_prev * s_prev.transpose();
      }
    }

    Eigen::VectorXd d = -H * g;
    if (d.dot(g) >= 0.0) {  // not a descent direction: reset
      H = Eigen::MatrixXd::Identity(n, n);
      d = -g;
    }

    // Armijo backtracking.
    const double slope = d.dot(g);
    double t = 1.0;
    std::vector<double> candidate(x.size());
    double f_new = f;
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings) {
      for (int i = 0; i < n; ++i) candidate[i] = x[i] + t * d[i];
      const auto ft = eval(candidate);
      if (!ft) {
        trace.terminated_reason = "budget";
        return;
      }
      if (*ft <= f + 1e-4 * t * slope) {
        f_new = *ft;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      trace.terminated_reason = "stalled";
      return;
    }

    s_prev = t * d;
    g_prev = g;
    have_prev = true;
    for (int i = 0; i < n; ++i) x[i] += s_prev[i];

    const double delta = std::abs(f - f_new);
    f = f_new;
    if (delta < config.tolerance) {
      trace.terminated_reason = "tolerance";
      return;
    }
  }
}

void cma_es(BudgetedCost& eval, std::vector<double> x0,
            const OptimizerConfig& config, OptimizationTrace& trace) {
  const int n = static_cast<int>(x0.size());
  Rng rng = Rng(config.seed).split(1);

  // Standard (mu/mu_w, lambda) strategy constants.
  const int lambda = 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
  const int mu = lambda / 2;
  Eigen::VectorXd weights(mu);
  for (int i = 0; i < mu; ++i)
    weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mu_eff = 1.0 / weights.squaredNorm();

  const double c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
  const double d_sigma =
      1.0 +
      2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) +
      c_sigma;
  const double c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
  const double c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
  const double c_mu =
      std::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) /
                              ((n + 2.0) * (n + 2.0) + mu_eff));
  const double chi_n =
      std::sqrt(static_cast<double>(n)) *
      (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  Eigen::VectorXd mean = Eigen::Map<Eigen::VectorXd>(x0.data(), n);
  double sigma = config.sigma0;
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd p_sigma = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p_c = Eigen::VectorXd::Zero(n);
  std::int64_t generation = 0;

  std::vector<Eigen::VectorXd> xs(lambda);
  std::vector<double> costs(lambda);
  std::vector<double> scratch(n);

  while (true) {
    // C = B diag(D^2) B^T; the sampler and C^{-1/2} both come from it.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    if (eig.info() != Eigen::Success ||
        eig.eigenvalues().minCoeff() <= 0.0)
      throw optimize_error(
          "CMA-ES covariance lost positive-definiteness at generation " +
          std::to_string(generation));
    const Eigen::MatrixXd& B = eig.eigenvectors();
    const Eigen::VectorXd D = eig.eigenvalues().cwiseSqrt();
    const Eigen::MatrixXd C_inv_sqrt =
        B * D.cwiseInverse().asDiagonal() * B.transpose();

    int evaluated = 0;
    for (int k = 0; k < lambda; ++k) {
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
      xs[k] = mean + sigma * (B * (D.asDiagonal() * z));
      Eigen::Map<Eigen::VectorXd>(scratch.data(), n) = xs[k];
      const auto f = eval(scratch);
      if (!f) break;
      costs[k] = *f;
      ++evaluated;
    }
    if (evaluated < lambda) {
      trace.terminated_reason = "budget";
      return;
    }
    ++generation;

    std::vector<int> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return costs[a] < costs[b]; });

    const Eigen::VectorXd mean_old = mean;
    mean.setZero();
    for (int i = 0; i < mu; ++i) mean += weights[i] * xs[order[i]];

    const Eigen::VectorXd shift = (mean - mean_old) / sigma;
    p_sigma = (1.0 - c_sigma) * p_sigma +
              std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) *
                  (C_inv_sqrt * shift);
    const double expected_decay =
        std::sqrt(1.0 - std::pow(1.0 - c_sigma, 2.0 * generation));
    const bool h_sigma =
        p_sigma.norm() / expected_decay < (1.4 + 2.0 / (n + 1.0)) * chi_n;

    p_c = (1.0 - c_c) * p_c;
    if (h_sigma)
      p_c += std::sqrt(c_c * (2.0 - c_c) * mu_eff) * shift;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const Eigen::VectorXd y = (xs[order[i]] - mean_old) / sigma;
      rank_mu += weights[i] * y * y.transpose();
    }
    C = (1.0 - c_1 - c_mu) * C +
        c_1 * (p_c * p_c.transpose() +
               (h_sigma ? 0.0 : c_c * (2.0 - c_c)) * C) +
        c_mu * rank_mu;
    C = 0.5 * (C + C.transpose());

    sigma *= std::exp((c_sigma / d_sigma) * (p_sigma.norm() / chi_n - 1.0));
    if (sigma < 1e-12) {
      trace.terminated_reason = "sigma_collapse";
      return;
    }
  }
}

}  // namespace

void OptimizerConfig::validate() const {
  if (max_evaluations < 1)
    throw optimize_error("optimizer: max_evaluations must be positive");
  if (init_range <= 0.0)
    throw optimize_error("optimizer: init_range must be positive");
  if (fd_step <= 0.0)
    throw optimize_error("optimizer: fd_step must be positive");
  if (sigma0 <= 0.0)
    throw optimize_error("optimizer: sigma0 must be positive");
  if (tolerance < 0.0)
    throw optimize_error("optimizer: tolerance must be non-negative");
}

std::uint64_t params_hash(std::span<const double> params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const double v : params) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffULL;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::vector<double> init_params(int dim, double range, std::uint64_t seed) {
  if (dim < 1) throw std::domain_error("init_params: dim must be >= 1");
  if (range <= 0.0)
    throw std::domain_error("init_params: range must be positive");
  Rng rng(seed);
  std::vector<double> out(dim);
  for (double& v : out) v = (2.0 * rng.uniform() - 1.0) * range;
  return out;
}

OptimizationTrace minimize_from(const CostFunction& cost,
                                std::vector<double> initial,
                                const OptimizerConfig& config) {
  config.validate();
  if (initial.empty())
    throw optimize_error("minimize: need at least one parameter");

  OptimizationTrace trace;
  BudgetedCost eval(cost, config.max_evaluations, trace);
  if (config.kind == OptimizerKind::QuasiNewton)
    quasi_newton(eval, std::move(initial), config, trace);
  else
    cma_es(eval, std::move(initial), config, trace);
  return trace;
}

OptimizationTrace minimize(const CostFunction& cost, int dim,
                           const OptimizerConfig& config) {
  config.validate();
  return minimize_from(cost, init_params(dim, config.init_range, config.seed),
                       config);
}

void write_trace_csv(const OptimizationTrace& trace, std::ostream& os) {
  os << "eval,cost\n";
  for (size_t i = 0; i < trace.evaluations.size(); ++i)
    os << i << "," << trace.evaluations[i].cost << "\n";
}

}  // namespace bhvqe

#pragma once

#include "superstat/state_evolution.hpp"

#include <optional>

namespace superstat {

struct ErrorReport {
    double eps_g = 0.0;
    double eps_t = 0.0;
    double eps_l = 0.0;
    std::optional<double> eps_bayes;
    std::optional<double> mse_g; ///< may be +inf
};

struct TrainingMetrics {
    double eps_t = 0.0;
    double eps_l = 0.0;
};

/// Test error of sign(w.x/sqrt(d) + b), with zeta integrated in closed form.
double generalisation_error(const OrderParams& p, const ProblemSpec& spec);
double generalisation_error(const OrderParams& p, const ProblemSpec& spec, const DeltaRule& rule);

/// Training error and loss. The error uses the prox threshold in closed form
/// in zeta; the loss is integrated with Gauss-Hermite nodes.
TrainingMetrics training_metrics(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg);
TrainingMetrics training_metrics(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg,
                                 const SEContext& ctx);

/// Requires finite E[Delta] and E[1/Delta^2]. Unbalanced values are experimental.
double bayes_optimal_error(const VarianceModel& model, double rho_plus, double alpha,
                           const ExpectMethod& method = Quadrature{});

/// Bayes error when each training and test point's Delta is known. In high
/// dimension Delta is read off |x|^2 / d, so this is the achievable optimum;
/// it is attained by the 1/Delta-weighted class mean. Needs E[1/Delta] < inf only.
double bayes_error_known_variance(const VarianceModel& model, double rho_plus, double alpha,
                                  const ExpectMethod& method = Quadrature{});

/// (1 - 1/alpha) / 2 for alpha > 1, else 0.
double rl_training_loss(double alpha);

/// 1 + E[Delta] q, +inf when E[Delta] diverges and q > 0.
double rl_mse(double q, const VarianceModel& model);

/// Training loss of the random-labels square-loss solution.
double rl_training_loss_theory(const RLResult& rl);

ErrorReport error_report(const SEResult& res, const ProblemSpec& spec, const SolverConfig& cfg,
                         const SEContext& ctx, bool with_bayes);

} // namespace superstat

#include "superstat/metrics.hpp"

#include "superstat/errors.hpp"
#include "superstat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace superstat {

namespace {

// P(center + s * zeta < threshold) for s >= 0.
double below(double threshold, double center, double s)
{
    if (s > 0.0) return normal_cdf((threshold - center) / s);
    return center < threshold ? 1.0 : 0.0;
}

double clamp01(double x)
{
    return std::clamp(x, 0.0, 1.0);
}

} // namespace

double generalisation_error(const OrderParams& p, const ProblemSpec& spec)
{
    return generalisation_error(p, spec, DeltaRule::quadrature(spec.variance));
}

double generalisation_error(const OrderParams& p, const ProblemSpec& spec, const DeltaRule& rule)
{
    if (!(p.q > 0.0)) throw DomainError("generalisation_error: q must be positive");
    const double cp = p.m_plus + p.b;
    const double cm = p.m_minus + p.b;
    const double e = rule.expect([&](double delta) {
        const double s = std::sqrt(p.q * delta);
        return spec.rho(1) * normal_cdf(-cp / s) + spec.rho(-1) * normal_cdf(cm / s);
    });
    return clamp01(e);
}

TrainingMetrics training_metrics(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg)
{
    return training_metrics(p, spec, cfg, SEContext::make(spec, cfg));
}

TrainingMetrics training_metrics(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg,
                                 const SEContext& ctx)
{
    if (!(p.v > 0.0)) throw DomainError("training_metrics: v must be positive");
    if (!(p.q >= 0.0)) throw DomainError("training_metrics: q must be non-negative");

    const auto deltas = ctx.delta.deltas();
    const auto dw = ctx.delta.weights();
    const auto& zn = ctx.zeta.nodes;
    const auto& zw = ctx.zeta.weights;

    TrainingMetrics out;
    for (int y : {1, -1}) {
        const double rho = spec.rho(y);
        const double center = p.m(y) + p.b;
        // h(omega) is increasing and crosses 0 at omega = kappa * l'_y(0).
        const double slope0 = loss_derivative(spec.loss, y, 0.0);
        double err = 0.0;
        double lss = 0.0;
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            const double kappa = p.v * deltas[i];
            const double s = std::sqrt(p.q * deltas[i]);
            const double p_below = below(kappa * slope0, center, s);
            err += dw[i] * (y > 0 ? p_below : 1.0 - p_below);
            double l = 0.0;
            for (std::size_t j = 0; j < zn.size(); ++j) {
                const ProxResult r = prox(spec.loss, y, center + s * zn[j], kappa, cfg.prox_tol);
                l += zw[j] * loss(spec.loss, y, r.h);
            }
            lss += dw[i] * l;
        }
        out.eps_t += rho * err;
        out.eps_l += rho * lss;
    }
    out.eps_t = clamp01(out.eps_t);
    return out;
}

double bayes_optimal_error(const VarianceModel& model, double rho_plus, double alpha, const ExpectMethod& method)
{
    if (!(rho_plus > 0.0 && rho_plus < 1.0)) throw ConfigError("bayes_optimal_error: rho_plus must lie in (0, 1)");
    if (!(alpha > 0.0)) throw ConfigError("bayes_optimal_error: alpha must be positive");
    const MomentReport mom = moments(model);
    if (!mom.mean_finite) throw MomentConditionError("E[Delta]", "bayes_optimal_error: E[Delta] is infinite");
    if (!mom.inv_sq_mean_finite) throw MomentConditionError("E[Delta^-2]", "bayes_optimal_error: E[Delta^-2] is infinite");

    const double spread = 1.0 + mom.mean_delta * mom.inv_sq_mean / (alpha * mom.inv_mean * mom.inv_mean);
    const double tilt = 0.5 * (1.0 + 1.0 / (alpha * mom.inv_mean)) * std::log(rho_plus / (1.0 - rho_plus));
    const DeltaRule rule = DeltaRule::build(model, method);

    const auto nodes = rule.deltas();
    const auto weights = rule.weights();
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double shift = nodes[i] * tilt;
        double inner = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double scale = 1.0 / std::sqrt(nodes[j] * spread);
            inner += weights[j] * (rho_plus * normal_tail((1.0 + shift) * scale) +
                                   (1.0 - rho_plus) * normal_tail((1.0 - shift) * scale));
        }
        total += weights[i] * inner;
    }
    return clamp01(total);
}

double bayes_error_known_variance(const VarianceModel& model, double rho_plus, double alpha,
                                  const ExpectMethod& method)
{
    if (!(rho_plus > 0.0 && rho_plus < 1.0)) throw ConfigError("bayes_error_known_variance: rho_plus must lie in (0, 1)");
    if (!(alpha > 0.0)) throw ConfigError("bayes_error_known_variance: alpha must be positive");
    const MomentReport mom = moments(model);
    if (!mom.inv_mean_finite) throw MomentConditionError("E[Delta^-1]", "bayes_error_known_variance: E[1/Delta] is infinite");

    const double spread = 1.0 + 1.0 / (alpha * mom.inv_mean);
    const double log_odds = std::log(rho_plus / (1.0 - rho_plus));
    const DeltaRule rule = DeltaRule::build(model, method);
    const double total = rule.expect([&](double delta) {
        const double s = std::sqrt(delta * spread);
        const double shift = 0.5 * delta * spread * log_odds;
        return rho_plus * normal_tail((1.0 + shift) / s) + (1.0 - rho_plus) * normal_tail((1.0 - shift) / s);
    });
    return clamp01(total);
}

double rl_training_loss(double alpha)
{
    if (!(alpha > 0.0)) throw DomainError("rl_training_loss: alpha must be positive");
    return alpha > 1.0 ? 0.5 * (1.0 - 1.0 / alpha) : 0.0;
}

double rl_mse(double q, const VarianceModel& model)
{
    if (!(q >= 0.0)) throw DomainError("rl_mse: q must be non-negative");
    if (q == 0.0) return 1.0;
    const MomentReport mom = moments(model);
    if (!mom.mean_finite) return std::numeric_limits<double>::infinity();
    return 1.0 + mom.mean_delta * q;
}

double rl_training_loss_theory(const RLResult& rl)
{
    return 0.5 * (rl.delta2 + rl.q * (rl.delta1 - rl.delta2) / rl.v);
}

ErrorReport error_report(const SEResult& res, const ProblemSpec& spec, const SolverConfig& cfg,
                         const SEContext& ctx, bool with_bayes)
{
    ErrorReport rep;
    rep.eps_g = generalisation_error(res.params, spec, ctx.delta);
    const TrainingMetrics tm = training_metrics(res.params, spec, cfg, ctx);
    rep.eps_t = tm.eps_t;
    rep.eps_l = tm.eps_l;
    if (with_bayes) {
        const MomentReport mom = moments(spec.variance);
        if (mom.mean_finite && mom.inv_sq_mean_finite) {
            rep.eps_bayes = bayes_optimal_error(spec.variance, spec.rho_plus, spec.alpha);
        }
    }
    return rep;
}

} // namespace superstat

#include "superstat/state_evolution.hpp"

#include "superstat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace superstat {

namespace {

constexpr double kMinV = 1e-12;

struct HatParams {
    double q = 0.0;
    double v = 0.0;
    double m_plus = 0.0;
    double m_minus = 0.0;
    double b = 0.0;
};

// Ridge prior: closed-form overlaps from the conjugates.
OrderParams close_ridge(const HatParams& hat, const ProblemSpec& spec, double lambda)
{
    const auto& G = spec.geometry.gram;
    const double denom = lambda + hat.v;
    if (!(denom > 0.0)) throw SolverError("state evolution: lambda + hat_v must be positive");
    const double mh[2] = {hat.m_plus, hat.m_minus};
    const double signal = mh[0] * mh[0] * G[0][0] + 2.0 * mh[0] * mh[1] * G[0][1] + mh[1] * mh[1] * G[1][1];

    OrderParams out;
    out.hat_q = hat.q;
    out.hat_v = hat.v;
    out.hat_m_plus = hat.m_plus;
    out.hat_m_minus = hat.m_minus;
    out.m_plus = (mh[0] * G[0][0] + mh[1] * G[1][0]) / denom;
    out.m_minus = (mh[0] * G[0][1] + mh[1] * G[1][1]) / denom;
    out.q = (signal + hat.q) / (denom * denom);
    out.v = 1.0 / denom;
    out.b = hat.b;
    return out;
}

HatParams hats_ridge_square(const OrderParams& p, const ProblemSpec& spec, const DeltaRule& rule)
{
    if (!(p.v > 0.0)) throw SolverError("se_update_ridge_square: v must be positive");
    const double v = p.v;
    const double d1 = rule.delta_k(v, 1);
    const double d2 = rule.delta_k(v, 2);
    // E[D/(1+vD)], E[D/(1+vD)^2], E[D^2/(1+vD)^2] written through delta_1, delta_2.
    const double e1 = (1.0 - d1) / v;
    const double e2 = (d1 - d2) / v;
    const double e3 = (1.0 - 2.0 * d1 + d2) / (v * v);

    const double rp = spec.rho(1);
    const double rm = spec.rho(-1);
    const double rp_res = 1.0 - p.m_plus - p.b;
    const double rm_res = -1.0 - p.m_minus - p.b;

    HatParams hat;
    hat.q = spec.alpha * (rp * rp_res * rp_res + rm * rm_res * rm_res) * e2 + spec.alpha * p.q * e3;
    hat.v = spec.alpha * e1;
    hat.m_plus = spec.alpha * rp * rp_res * d1;
    hat.m_minus = spec.alpha * rm * rm_res * d1;
    hat.b = rp * (1.0 - p.m_plus) + rm * (-1.0 - p.m_minus);
    return hat;
}

HatParams hats_general(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg,
                       const SEContext& ctx)
{
    if (!(p.v > 0.0)) throw SolverError("se_update_general: v must be positive");
    if (!(p.q >= 0.0)) throw SolverError("se_update_general: q must be non-negative");

    const auto deltas = ctx.delta.deltas();
    const auto dw = ctx.delta.weights();
    const auto& zn = ctx.zeta.nodes;
    const auto& zw = ctx.zeta.weights;

    double acc_q = 0.0;
    double acc_v = 0.0;
    double acc_m[2] = {0.0, 0.0};
    double acc_f = 0.0;
    double acc_slope = 0.0;
    for (int cls = 0; cls < 2; ++cls) {
        const int y = cls == 0 ? 1 : -1;
        const double rho = spec.rho(y);
        const double center = p.m(y) + p.b;
        double cls_f = 0.0;
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            const double delta = deltas[i];
            const double kappa = p.v * delta;
            const double spread = std::sqrt(p.q * delta);
            double sf = 0.0;
            double sf2 = 0.0;
            double sc = 0.0;
            for (std::size_t j = 0; j < zn.size(); ++j) {
                const ProxResult r = prox(spec.loss, y, center + spread * zn[j], kappa, cfg.prox_tol);
                const double curv = loss_curvature(spec.loss, r.h);
                sf += zw[j] * r.f;
                sf2 += zw[j] * r.f * r.f;
                sc += zw[j] * curv / (1.0 + kappa * curv);
            }
            acc_q += rho * dw[i] * delta * sf2;
            acc_v += rho * dw[i] * delta * sc;
            acc_slope += rho * dw[i] * sc;
            cls_f += dw[i] * sf;
        }
        acc_m[cls] = cls_f;
        acc_f += rho * cls_f;
    }

    HatParams hat;
    hat.q = spec.alpha * acc_q;
    hat.v = spec.alpha * acc_v;
    hat.m_plus = spec.alpha * spec.rho(1) * acc_m[0];
    hat.m_minus = spec.alpha * spec.rho(-1) * acc_m[1];
    // Newton step on the bias stationarity condition E[f] = 0.
    hat.b = acc_slope > 0.0 ? p.b + acc_f / acc_slope : p.b;
    return hat;
}

double effective_lambda(const ProblemSpec& spec, const SolverConfig& cfg)
{
    if (spec.loss == LossKind::Logistic) return std::max(spec.lambda, cfg.lambda_floor);
    return spec.lambda;
}

ProblemSpec with_lambda(ProblemSpec spec, double lambda)
{
    spec.lambda = lambda;
    return spec;
}

OrderParams update(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg, const SEContext& ctx)
{
    if (spec.loss == LossKind::Square && !cfg.force_general) return se_update_ridge_square(p, spec, ctx.delta);
    return se_update_general(p, spec, cfg, ctx);
}

std::array<double, 9> as_array(const OrderParams& p)
{
    return {p.m_plus, p.m_minus, p.q, p.v, p.b, p.hat_q, p.hat_v, p.hat_m_plus, p.hat_m_minus};
}

OrderParams from_array(const std::array<double, 9>& a)
{
    OrderParams p;
    p.m_plus = a[0];
    p.m_minus = a[1];
    p.q = a[2];
    p.v = a[3];
    p.b = a[4];
    p.hat_q = a[5];
    p.hat_v = a[6];
    p.hat_m_plus = a[7];
    p.hat_m_minus = a[8];
    return p;
}

bool all_finite(const std::array<double, 9>& a)
{
    return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

} // namespace

void CentroidGeometry::validate() const
{
    const double a = gram[0][0];
    const double b = gram[0][1];
    const double d = gram[1][1];
    if (gram[0][1] != gram[1][0]) throw ConfigError("centroid Gram matrix must be symmetric");
    const double tol = 1e-12 * std::max({1.0, std::abs(a), std::abs(d)});
    if (a < -tol || d < -tol || a * d - b * b < -tol) {
        throw ConfigError("centroid Gram matrix must be positive semidefinite");
    }
}

void ProblemSpec::validate() const
{
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive and finite");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be non-negative and finite");
    if (!(rho_plus > 0.0 && rho_plus < 1.0)) throw ConfigError("rho_plus must lie in (0, 1)");
    geometry.validate();
}

void SolverConfig::validate() const
{
    if (!(damping >= 0.0 && damping < 1.0)) throw ConfigError("damping must lie in [0, 1)");
    if (!(tol > 0.0)) throw ConfigError("tol must be positive");
    if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
    if (zeta_quadrature_nodes < 1) throw ConfigError("zeta_quadrature_nodes must be at least 1");
    if (!(prox_tol > 0.0)) throw ConfigError("prox_tol must be positive");
    if (!(lambda_floor >= 0.0)) throw ConfigError("lambda_floor must be non-negative");
}

SEContext SEContext::make(const ProblemSpec& spec, const SolverConfig& cfg)
{
    return {DeltaRule::build(spec.variance, cfg.delta_method), gauss_hermite(cfg.zeta_quadrature_nodes)};
}

OrderParams se_update_ridge_square(const OrderParams& p, const ProblemSpec& spec)
{
    return se_update_ridge_square(p, spec, DeltaRule::quadrature(spec.variance));
}

OrderParams se_update_ridge_square(const OrderParams& p, const ProblemSpec& spec, const DeltaRule& rule)
{
    if (spec.loss != LossKind::Square) throw ConfigError("se_update_ridge_square requires square loss");
    return close_ridge(hats_ridge_square(p, spec, rule), spec, spec.lambda);
}

OrderParams se_update_general(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg)
{
    return se_update_general(p, spec, cfg, SEContext::make(spec, cfg));
}

OrderParams se_update_general(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg,
                              const SEContext& ctx)
{
    return close_ridge(hats_general(p, spec, cfg, ctx), spec, spec.lambda);
}

SEResult solve_se(const ProblemSpec& spec, const SolverConfig& cfg)
{
    spec.validate();
    cfg.validate();
    return solve_se(spec, cfg, SEContext::make(spec, cfg));
}

SEResult solve_se(const ProblemSpec& spec_in, const SolverConfig& cfg, const SEContext& ctx)
{
    spec_in.validate();
    cfg.validate();
    const ProblemSpec spec = with_lambda(spec_in, effective_lambda(spec_in, cfg));

    SEResult res;
    res.lambda_used = spec.lambda;

    OrderParams p = cfg.init.value_or(OrderParams{});
    p.v = std::max(p.v, kMinV);
    p.q = std::max(p.q, 0.0);
    {
        const OrderParams first = update(p, spec, cfg, ctx);
        p.hat_q = first.hat_q;
        p.hat_v = first.hat_v;
        p.hat_m_plus = first.hat_m_plus;
        p.hat_m_minus = first.hat_m_minus;
    }

    const double g = cfg.damping;
    for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
        const auto cur = as_array(p);
        auto next = as_array(update(p, spec, cfg, ctx));
        double resid = 0.0;
        for (std::size_t k = 0; k < next.size(); ++k) {
            next[k] = (1.0 - g) * next[k] + g * cur[k];
            resid = std::max(resid, std::abs(next[k] - cur[k]) / std::max(1.0, std::abs(cur[k])));
        }
        res.iterations = it;
        if (!all_finite(next)) {
            res.params = p;
            res.residual = std::numeric_limits<double>::infinity();
            return res;
        }
        OrderParams np = from_array(next);
        if (np.v < kMinV) {
            np.v = kMinV;
            ++res.clamp_count;
        }
        if (np.q < 0.0) {
            np.q = 0.0;
            ++res.clamp_count;
        }
        p = np;
        res.residual = resid;
        if (resid <= cfg.tol) {
            res.converged = true;
            break;
        }
    }
    res.params = p;
    return res;
}

RLResult solve_rl_square(double alpha, double lambda, const VarianceModel& model, const SolverConfig& cfg)
{
    return solve_rl_square(alpha, lambda, DeltaRule::build(model, cfg.delta_method), cfg);
}

RLResult solve_rl_square(double alpha, double lambda, const DeltaRule& rule, const SolverConfig& cfg)
{
    if (!(alpha > 0.0)) throw ConfigError("solve_rl_square: alpha must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("solve_rl_square: lambda must be non-negative");
    cfg.validate();

    // v solves 1 - lambda v = alpha (1 - delta_1(v)); the left side decreases
    // and the right side increases in v, so the root is unique when it exists.
    auto gap = [&](double v) { return 1.0 - lambda * v - alpha * (1.0 - rule.delta_k(v, 1)); };
    RLResult res;
    double lo = 1e-300;
    double hi = lambda > 0.0 ? 1.0 / lambda : 1.0;
    if (lambda == 0.0) {
        while (gap(hi) > 0.0 && hi < 1e300) hi *= 4.0;
        if (gap(hi) > 0.0) return res;
    }
    // bisection in log v
    double llo = std::log(lo);
    double lhi = std::log(hi);
    for (std::size_t it = 0; it < 400; ++it) {
        const double mid = 0.5 * (llo + lhi);
        if (gap(std::exp(mid)) > 0.0) {
            llo = mid;
        } else {
            lhi = mid;
        }
        res.iterations = it + 1;
        if (lhi - llo <= 1e-15) break;
    }
    const double v = std::exp(0.5 * (llo + lhi));
    const double d1 = rule.delta_k(v, 1);
    const double d2 = rule.delta_k(v, 2);
    const double denom = 1.0 - alpha * (1.0 - 2.0 * d1 + d2);
    res.v = v;
    res.delta1 = d1;
    res.delta2 = d2;
    if (!(denom > 0.0)) return res;
    res.q = alpha * v * (d1 - d2) / denom;
    res.converged = std::isfinite(res.q) && res.q >= 0.0;
    return res;
}

} // namespace superstat

#include "superstat/separability.hpp"

#include "superstat/errors.hpp"
#include "superstat/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace superstat {

namespace {

constexpr double kThetaMin = 1e-9;

struct Objective {
    const DeltaRule& rule;
    double rho_plus;
    std::size_t evaluations = 0;

    // alpha(theta, gamma); theta is clipped into (0, 1].
    double operator()(double theta, double gamma)
    {
        ++evaluations;
        theta = std::clamp(theta, kThetaMin, 1.0);
        const double s = std::max(s_integral(theta, gamma, rule, rho_plus), std::numeric_limits<double>::min());
        return (1.0 - theta * theta) / s;
    }
};

struct Vertex {
    double theta;
    double gamma;
    double value; // negated alpha, minimised
};

// Nelder-Mead on -alpha starting from (theta0, gamma0).
Vertex refine(Objective& obj, double theta0, double gamma0, double step_theta, double step_gamma,
              const SeparabilityConfig& cfg, bool& converged)
{
    auto eval = [&](double t, double g) { return Vertex{t, g, -obj(t, g)}; };
    std::array<Vertex, 3> s = {eval(theta0, gamma0), eval(std::clamp(theta0 + step_theta, kThetaMin, 1.0), gamma0),
                               eval(theta0, gamma0 + step_gamma)};
    converged = false;
    while (obj.evaluations < cfg.max_evaluations) {
        std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
        const double size = std::max({std::abs(s[1].theta - s[0].theta), std::abs(s[2].theta - s[0].theta),
                                      std::abs(s[1].gamma - s[0].gamma), std::abs(s[2].gamma - s[0].gamma)});
        const double spread = s[2].value - s[0].value;
        if (size <= cfg.tol && spread <= cfg.tol * std::max(1.0, std::abs(s[0].value))) {
            converged = true;
            break;
        }
        const double ct = 0.5 * (s[0].theta + s[1].theta);
        const double cg = 0.5 * (s[0].gamma + s[1].gamma);
        auto along = [&](double k) {
            return eval(std::clamp(ct + k * (s[2].theta - ct), kThetaMin, 1.0), cg + k * (s[2].gamma - cg));
        };
        const Vertex r = along(-1.0);
        if (r.value < s[0].value) {
            const Vertex e = along(-2.0);
            s[2] = e.value < r.value ? e : r;
        } else if (r.value < s[1].value) {
            s[2] = r;
        } else {
            const Vertex c = r.value < s[2].value ? along(-0.5) : along(0.5);
            if (c.value < std::min(r.value, s[2].value)) {
                s[2] = c;
            } else {
                for (int k = 1; k < 3; ++k) {
                    s[k] = eval(0.5 * (s[0].theta + s[k].theta), 0.5 * (s[0].gamma + s[k].gamma));
                }
            }
        }
    }
    std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.value < b.value; });
    return s[0];
}

} // namespace

double truncated_second_moment(double s)
{
    return std::max(0.0, (1.0 + s * s) * normal_tail(s) - s * normal_pdf(s));
}

double s_integral(double theta, double gamma, const VarianceModel& model, double rho_plus, double tol)
{
    return s_integral(theta, gamma, DeltaRule::quadrature(model, tol), rho_plus);
}

double s_integral(double theta, double gamma, const DeltaRule& rule, double rho_plus)
{
    if (!(rho_plus > 0.0 && rho_plus < 1.0)) throw ConfigError("s_integral: rho_plus must lie in (0, 1)");
    const double value = rule.expect([&](double delta) {
        const double r = 1.0 / std::sqrt(delta);
        return rho_plus * truncated_second_moment((theta + gamma) * r) +
               (1.0 - rho_plus) * truncated_second_moment((theta - gamma) * r);
    });
    if (!std::isfinite(value)) throw IntegrationError("s_integral: non-finite value");
    return value;
}

SeparabilityResult alpha_star(const VarianceModel& model, double rho_plus, const SeparabilityConfig& cfg)
{
    if (!(rho_plus > 0.0 && rho_plus < 1.0)) throw ConfigError("alpha_star: rho_plus must lie in (0, 1)");
    if (cfg.theta_grid < 2 || cfg.gamma_grid < 2) throw ConfigError("alpha_star: grids need at least two points");
    if (!(cfg.gamma_max > 0.0)) throw ConfigError("alpha_star: gamma_max must be positive");

    const DeltaRule rule = DeltaRule::build(model, cfg.delta_method);
    Objective obj{rule, rho_plus};

    const double dtheta = 1.0 / static_cast<double>(cfg.theta_grid);
    const double dgamma = 2.0 * cfg.gamma_max / static_cast<double>(cfg.gamma_grid - 1);
    double best = -std::numeric_limits<double>::infinity();
    double best_theta = dtheta;
    double best_gamma = 0.0;
    for (std::size_t i = 0; i < cfg.theta_grid; ++i) {
        const double theta = dtheta * static_cast<double>(i + 1);
        for (std::size_t j = 0; j < cfg.gamma_grid; ++j) {
            const double gamma = -cfg.gamma_max + dgamma * static_cast<double>(j);
            const double a = obj(theta, gamma);
            if (a > best) {
                best = a;
                best_theta = theta;
                best_gamma = gamma;
            }
        }
    }

    bool converged = false;
    const Vertex v = refine(obj, best_theta, best_gamma, 0.5 * dtheta, 0.5 * dgamma, cfg, converged);

    SeparabilityResult out;
    out.evaluations = obj.evaluations;
    out.converged = converged;
    // The refined point must dominate the grid; otherwise keep the grid optimum.
    if (-v.value >= best) {
        out.theta_star = std::clamp(v.theta, kThetaMin, 1.0);
        out.gamma_star = v.gamma;
    } else {
        out.theta_star = best_theta;
        out.gamma_star = best_gamma;
        out.converged = false;
    }
    out.S_at_opt = s_integral(out.theta_star, out.gamma_star, rule, rho_plus);
    out.alpha_star = (1.0 - out.theta_star * out.theta_star) / out.S_at_opt;
    return out;
}

} // namespace superstat

#include "superstat/losses.hpp"

#include "superstat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

namespace superstat {

namespace {

constexpr int kProxMaxIter = 200;

void check_label(int y)
{
    if (y != 1 && y != -1) throw DomainError("label must be +1 or -1");
}

// log(1 + exp(x)) without overflow
double softplus(double x)
{
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

ProxResult logistic_prox(int y, double omega, double kappa, double tol)
{
    // F(u) = u - omega + kappa * l'(u) is increasing with F' >= 1, and
    // |l'| < 1 puts the root strictly between omega and omega + y * kappa.
    double lo = y > 0 ? omega : omega - kappa;
    double hi = y > 0 ? omega + kappa : omega;
    auto F = [&](double u) { return u - omega + kappa * loss_derivative(LossKind::Logistic, y, u); };

    double u = 0.5 * (lo + hi);
    double step_old = hi - lo;
    double step = step_old;
    for (int it = 0; it < kProxMaxIter; ++it) {
        const double r = F(u);
        // f = -l'(h) at the root; avoids cancellation in (h - omega) / kappa.
        if (std::abs(r) <= tol * kappa) return {u, -loss_derivative(LossKind::Logistic, y, u)};
        if (r > 0.0) {
            hi = u;
        } else {
            lo = u;
        }
        // Newton unless it leaves the bracket or fails to halve the step.
        const double newton = r / (1.0 + kappa * logistic_curvature(u));
        step_old = step;
        double next = u - newton;
        if (!(next > lo && next < hi) || std::abs(2.0 * newton) > std::abs(step_old)) {
            next = 0.5 * (lo + hi);
            step = hi - lo;
        } else {
            step = newton;
        }
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(u))) {
            return {next, -loss_derivative(LossKind::Logistic, y, next)};
        }
        u = next;
    }
    std::ostringstream os;
    os << "logistic prox did not converge (y=" << y << ", omega=" << omega << ", kappa=" << kappa << ")";
    throw SolverError(os.str());
}

} // namespace

const char* to_string(LossKind kind) noexcept
{
    return kind == LossKind::Square ? "square" : "logistic";
}

LossKind parse_loss(const char* name)
{
    const std::string_view s(name);
    if (s == "square") return LossKind::Square;
    if (s == "logistic") return LossKind::Logistic;
    throw ConfigError("unknown loss '" + std::string(s) + "' (expected square or logistic)");
}

double loss(LossKind kind, int y, double eta)
{
    check_label(y);
    if (kind == LossKind::Square) {
        const double r = y - eta;
        return 0.5 * r * r;
    }
    return softplus(-y * eta);
}

double loss_derivative(LossKind kind, int y, double eta)
{
    check_label(y);
    if (kind == LossKind::Square) return eta - y;
    return -y * sigmoid(-y * eta);
}

double loss_curvature(LossKind kind, double eta)
{
    return kind == LossKind::Square ? 1.0 : logistic_curvature(eta);
}

double logistic_curvature(double eta)
{
    const double c = std::cosh(0.5 * eta);
    if (!std::isfinite(c)) return 0.0;
    return 0.25 / (c * c);
}

ProxResult prox(LossKind kind, int y, double omega, double kappa, double tol)
{
    check_label(y);
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("prox: kappa must be positive and finite");
    if (kind == LossKind::Square) {
        const double f = (y - omega) / (1.0 + kappa);
        return {omega + kappa * f, f};
    }
    return logistic_prox(y, omega, kappa, tol);
}

} // namespace superstat

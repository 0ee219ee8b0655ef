#pragma once

namespace superstat {

enum class LossKind { Square, Logistic };

const char* to_string(LossKind kind) noexcept;
LossKind parse_loss(const char* name);

struct ProxResult {
    double h = 0.0; ///< proximal point
    double f = 0.0; ///< (h - omega) / kappa
};

/// y is +1 or -1. Square: (y - eta)^2 / 2. Logistic: log(1 + exp(-y eta)).
double loss(LossKind kind, int y, double eta);
/// d loss / d eta
double loss_derivative(LossKind kind, int y, double eta);
/// d^2 loss / d eta^2 (label independent for both losses)
double loss_curvature(LossKind kind, double eta);

/// 1 / (4 cosh^2(eta / 2))
double logistic_curvature(double eta);

/// argmin_u (u - omega)^2 / (2 kappa) + loss(y, u)
ProxResult prox(LossKind kind, int y, double omega, double kappa, double tol = 1e-12);

} // namespace superstat

#pragma once

#include "superstat/variance_model.hpp"

#include <cstddef>

namespace superstat {

struct SeparabilityResult {
    double alpha_star = 0.0;
    double theta_star = 0.0;
    double gamma_star = 0.0;
    double S_at_opt = 0.0;
    bool converged = false;
    std::size_t evaluations = 0;
};

struct SeparabilityConfig {
    std::size_t theta_grid = 64;
    std::size_t gamma_grid = 64;
    double gamma_max = 5.0;
    /// simplex stopping tolerance on both the vertices and the objective
    double tol = 1e-6;
    std::size_t max_evaluations = 20000;
    ExpectMethod delta_method = Quadrature{1e-10};
};

/// E[(Z - s)^2 ; Z > s] for Z standard normal.
double truncated_second_moment(double s);

/// S(theta, gamma) with the inner integral in closed form.
double s_integral(double theta, double gamma, const VarianceModel& model, double rho_plus, double tol = 1e-10);
double s_integral(double theta, double gamma, const DeltaRule& rule, double rho_plus);

/// max over theta in (0, 1] and gamma of (1 - theta^2) / S(theta, gamma).
SeparabilityResult alpha_star(const VarianceModel& model, double rho_plus, const SeparabilityConfig& cfg = {});

} // namespace superstat

#pragma once

#include "superstat/losses.hpp"
#include "superstat/quadrature.hpp"
#include "superstat/variance_model.hpp"

#include <array>
#include <cstddef>
#include <optional>

namespace superstat {

/// Asymptotic centroid overlaps. Index 0 is the + cloud, 1 the - cloud.
struct CentroidGeometry {
    std::array<std::array<double, 2>, 2> gram{{{1.0, -1.0}, {-1.0, 1.0}}};

    static CentroidGeometry antipodal() { return {}; }
    void validate() const;
};

struct ProblemSpec {
    double alpha = 1.0;
    double lambda = 1e-5;
    double rho_plus = 0.5;
    LossKind loss = LossKind::Square;
    CentroidGeometry geometry;
    VarianceModel variance;

    double rho(int y) const noexcept { return y > 0 ? rho_plus : 1.0 - rho_plus; }
    void validate() const;
};

struct OrderParams {
    double m_plus = 0.1;
    double m_minus = -0.1;
    double q = 0.5;
    double v = 1.0;
    double b = 0.0;
    double hat_q = 0.0;
    double hat_v = 0.0;
    double hat_m_plus = 0.0;
    double hat_m_minus = 0.0;

    double m(int y) const noexcept { return y > 0 ? m_plus : m_minus; }
    double hat_m(int y) const noexcept { return y > 0 ? hat_m_plus : hat_m_minus; }
};

struct SolverConfig {
    double damping = 0.5;
    double tol = 1e-5;
    std::size_t max_iter = 1000;
    std::size_t zeta_quadrature_nodes = 127;
    ExpectMethod delta_method = MonteCarlo{};
    /// Starting point; hats are recomputed from it before iterating.
    std::optional<OrderParams> init;
    double prox_tol = 1e-12;
    /// Logistic problems are solved at max(lambda, lambda_floor).
    double lambda_floor = 1e-6;
    /// Square loss uses the closed-form update unless this is set.
    bool force_general = false;

    void validate() const;
};

struct SEResult {
    OrderParams params;
    bool converged = false;
    std::size_t iterations = 0;
    /// max_i |p_i' - p_i| / max(1, |p_i|) over the last iteration
    double residual = 0.0;
    std::size_t clamp_count = 0;
    double lambda_used = 0.0;
};

/// Delta nodes and zeta nodes shared by every update of one solve.
struct SEContext {
    DeltaRule delta;
    GaussHermiteRule zeta;

    static SEContext make(const ProblemSpec& spec, const SolverConfig& cfg);
};

/// Closed-form update for square loss and ridge penalty. The two-argument
/// overload integrates over Delta by quadrature.
OrderParams se_update_ridge_square(const OrderParams& p, const ProblemSpec& spec);
OrderParams se_update_ridge_square(const OrderParams& p, const ProblemSpec& spec, const DeltaRule& rule);

/// Update through the proximal of the loss, integrating zeta by Gauss-Hermite.
OrderParams se_update_general(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg);
OrderParams se_update_general(const OrderParams& p, const ProblemSpec& spec, const SolverConfig& cfg,
                              const SEContext& ctx);

SEResult solve_se(const ProblemSpec& spec, const SolverConfig& cfg);
SEResult solve_se(const ProblemSpec& spec, const SolverConfig& cfg, const SEContext& ctx);

struct RLResult {
    double v = 0.0;
    double q = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Random labels, square loss: the reduced (v, q) system with m = b = 0.
RLResult solve_rl_square(double alpha, double lambda, const VarianceModel& model, const SolverConfig& cfg);
RLResult solve_rl_square(double alpha, double lambda, const DeltaRule& rule, const SolverConfig& cfg);

} // namespace superstat

#include "superstat/errors.hpp"
#include "superstat/metrics.hpp"
#include "superstat/state_evolution.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace superstat;

namespace {

ProblemSpec square_spec(double alpha, double lambda, VarianceModel m = VarianceModel::point_mass(1))
{
    ProblemSpec s;
    s.alpha = alpha;
    s.lambda = lambda;
    s.variance = m;
    return s;
}

SolverConfig quad_config()
{
    SolverConfig c;
    c.delta_method = Quadrature{};
    return c;
}

double max_rel_diff(const OrderParams& a, const OrderParams& b)
{
    const double x[] = {a.m_plus, a.m_minus, a.q, a.v, a.b, a.hat_q, a.hat_v, a.hat_m_plus, a.hat_m_minus};
    const double y[] = {b.m_plus, b.m_minus, b.q, b.v, b.b, b.hat_q, b.hat_v, b.hat_m_plus, b.hat_m_minus};
    double r = 0.0;
    for (int i = 0; i < 9; ++i) r = std::max(r, std::abs(x[i] - y[i]) / std::max(1.0, std::abs(x[i])));
    return r;
}

// Scalar-root oracle: (1 - v lambda) / (v alpha) = E[Delta / (1 + v Delta)] for Delta = 1.
double ridge_v_oracle(double alpha, double lambda)
{
    double lo = 1e-9;
    double hi = 1e9;
    for (int i = 0; i < 400; ++i) {
        const double mid = std::sqrt(lo * hi);
        const double g = (1.0 - mid * lambda) / (mid * alpha) - 1.0 / (1.0 + mid);
        (g > 0.0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

} // namespace

TEST_CASE("ridge-square update: v = 1 / (lambda + hat_v)")
{
    // Delta = 1, v = 1, alpha = 2 gives hat_v = alpha / (1 + v) = 1
    OrderParams p;
    p.v = 1.0;
    const auto out = se_update_ridge_square(p, square_spec(2.0, 1.0));
    CHECK(out.hat_v == doctest::Approx(1.0));
    CHECK(out.v == doctest::Approx(0.5));
}

TEST_CASE("ridge-square update preserves the balanced symmetry")
{
    OrderParams p;
    p.m_plus = 0.3;
    p.m_minus = -0.3;
    p.q = 0.7;
    p.v = 2.0;
    p.b = 0.0;
    const auto out = se_update_ridge_square(p, square_spec(1.7, 0.1, VarianceModel::inverse_gamma(2, 1)));
    CHECK(out.hat_m_plus == doctest::Approx(-out.hat_m_minus));
    CHECK(out.m_plus == doctest::Approx(-out.m_minus));
    CHECK(std::abs(out.b) < 1e-15);
}

TEST_CASE("ridge-square update rejects v <= 0")
{
    OrderParams p;
    p.v = 0.0;
    CHECK_THROWS_AS(se_update_ridge_square(p, square_spec(2, 1)), SolverError);
}

TEST_CASE("general update with square loss matches the closed form")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& m : {VarianceModel::point_mass(1), VarianceModel::inverse_gamma(2, 1),
                          VarianceModel::contaminated(0.5, 0.5, 1)}) {
        ProblemSpec spec = square_spec(1.3, 0.05, m);
        spec.rho_plus = 0.3;
        SolverConfig cfg;
        cfg.delta_method = MonteCarlo{100000, 1};
        const SEContext ctx = SEContext::make(spec, cfg);
        for (int k = 0; k < 5; ++k) {
            OrderParams p;
            p.m_plus = 0.5 + 0.3 * u(rng);
            p.m_minus = -0.5 + 0.3 * u(rng);
            p.q = 1.0 + 0.5 * u(rng);
            p.v = 1.5 + u(rng);
            p.b = 0.2 * u(rng);
            const auto closed = se_update_ridge_square(p, spec, ctx.delta);
            const auto general = se_update_general(p, spec, cfg, ctx);
            CHECK(max_rel_diff(closed, general) <= 1e-3);
        }
        // against the quadrature closed form, with MC Delta in the general path
        OrderParams p;
        const auto closed_q = se_update_ridge_square(p, spec);
        const auto general = se_update_general(p, spec, cfg, ctx);
        CHECK(max_rel_diff(closed_q, general) <= 1e-2);
    }
}

TEST_CASE("logistic update: symmetric inputs keep b = 0, hats are non-negative")
{
    ProblemSpec spec;
    spec.loss = LossKind::Logistic;
    spec.alpha = 2.0;
    spec.lambda = 0.1;
    spec.variance = VarianceModel::inverse_gamma(2, 1);
    const SolverConfig cfg = quad_config();
    const SEContext ctx = SEContext::make(spec, cfg);

    OrderParams p;
    p.m_plus = 0.4;
    p.m_minus = -0.4;
    p.q = 0.9;
    p.v = 1.3;
    const auto out = se_update_general(p, spec, cfg, ctx);
    CHECK(std::abs(out.b) < 1e-12);
    CHECK(out.hat_m_plus == doctest::Approx(-out.hat_m_minus));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        OrderParams r;
        r.m_plus = 3.0 * (u(rng) - 0.5);
        r.m_minus = 3.0 * (u(rng) - 0.5);
        r.q = 5.0 * u(rng);
        r.v = 0.01 + 10.0 * u(rng);
        r.b = u(rng) - 0.5;
        spec.rho_plus = 0.1 + 0.8 * u(rng);
        const auto o = se_update_general(r, spec, cfg, ctx);
        CHECK(o.hat_q >= 0.0);
        CHECK(o.hat_v >= 0.0);
    }
}

TEST_CASE("square loss at Delta = 1, alpha = 2, small lambda converges to v = 1")
{
    const auto res = solve_se(square_spec(2.0, 1e-5), SolverConfig{});
    CHECK(res.converged);
    CHECK(res.residual <= 1e-5);
    CHECK(res.params.v == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(res.params.v == doctest::Approx(ridge_v_oracle(2.0, 1e-5)).epsilon(1e-4));
}

TEST_CASE("near-Gaussian inverse-Gamma law reproduces the point-mass solution")
{
    SolverConfig cfg = quad_config();
    for (double alpha : {0.5, 2.0, 4.0}) {
        const auto g = solve_se(square_spec(alpha, 1e-2, VarianceModel::point_mass(1)), cfg);
        const auto h = solve_se(square_spec(alpha, 1e-2, VarianceModel::unit_covariance(1e4)), cfg);
        REQUIRE(g.converged);
        REQUIRE(h.converged);
        CHECK(max_rel_diff(g.params, h.params) <= 1e-2);
    }
}

TEST_CASE("no data: alpha -> 0 sends m and q to 0")
{
    const auto res = solve_se(square_spec(1e-4, 1.0, VarianceModel::inverse_gamma(2, 1)), quad_config());
    CHECK(res.converged);
    CHECK(std::abs(res.params.m_plus) < 1e-3);
    CHECK(std::abs(res.params.m_minus) < 1e-3);
    CHECK(res.params.q < 1e-3);
}

TEST_CASE("converged solutions are fixed points of the update")
{
    SolverConfig cfg = quad_config();
    cfg.tol = 1e-9;
    for (auto loss : {LossKind::Square, LossKind::Logistic}) {
        ProblemSpec spec = square_spec(3.0, 0.01, VarianceModel::inverse_gamma(2, 1));
        spec.loss = loss;
        spec.rho_plus = 0.35;
        const SEContext ctx = SEContext::make(spec, cfg);
        const auto res = solve_se(spec, cfg, ctx);
        REQUIRE(res.converged);
        const auto again = loss == LossKind::Square ? se_update_ridge_square(res.params, spec, ctx.delta)
                                                    : se_update_general(res.params, spec, cfg, ctx);
        CHECK(max_rel_diff(res.params, again) <= 1e-5);
    }
}

TEST_CASE("balanced antipodal problems have symmetric solutions")
{
    for (auto loss : {LossKind::Square, LossKind::Logistic}) {
        ProblemSpec spec = square_spec(2.5, 1e-3, VarianceModel::inverse_gamma(1.5, 1));
        spec.loss = loss;
        SolverConfig cfg = quad_config();
        const auto res = solve_se(spec, cfg);
        REQUIRE(res.converged);
        CHECK(std::abs(res.params.m_plus + res.params.m_minus) <= 10 * cfg.tol);
        CHECK(std::abs(res.params.b) <= 10 * cfg.tol);
    }
}

TEST_CASE("square loss: general and closed-form solvers agree")
{
    for (double rho : {0.5, 0.2}) {
        ProblemSpec spec = square_spec(1.5, 0.05, VarianceModel::inverse_gamma(2, 1));
        spec.rho_plus = rho;
        SolverConfig cfg = quad_config();
        cfg.tol = 1e-8;
        const auto closed = solve_se(spec, cfg);
        cfg.force_general = true;
        const auto general = solve_se(spec, cfg);
        REQUIRE(closed.converged);
        REQUIRE(general.converged);
        CHECK(max_rel_diff(closed.params, general.params) <= 1e-6);
    }
}

TEST_CASE("logistic at small lambda: rescaled order parameters stay bounded")
{
    ProblemSpec spec;
    spec.loss = LossKind::Logistic;
    spec.alpha = 1.0; // separable phase for InverseGamma(2, 1)
    spec.variance = VarianceModel::inverse_gamma(2, 1);
    SolverConfig cfg = quad_config();
    cfg.tol = 1e-8;
    cfg.max_iter = 20000;
    cfg.lambda_floor = 1e-9;

    double prev_q = INFINITY;
    double prev_m = INFINITY;
    double prev_theta = NAN;
    double prev_step = INFINITY;
    for (double lambda : {1e-3, 1e-4, 1e-5, 1e-6}) {
        spec.lambda = lambda;
        const auto res = solve_se(spec, cfg);
        REQUIRE(res.converged);
        const auto& p = res.params;
        const double lv = lambda * p.v;
        const double lq = lambda * lambda * p.q;
        const double lm = lambda * std::abs(p.m_plus);
        const double theta = p.m_plus / std::sqrt(p.q);
        CAPTURE(lambda);
        CHECK(lv > 0.0);
        CHECK(lv < 1.0);
        CHECK(lq <= prev_q);
        CHECK(lm <= prev_m);
        if (!std::isnan(prev_theta)) {
            const double step = std::abs(theta - prev_theta);
            CHECK(step < prev_step);
            prev_step = step;
        }
        CHECK(p.q >= p.m_plus * p.m_plus);
        prev_q = lq;
        prev_m = lm;
        prev_theta = theta;
    }
}

TEST_CASE("invalid specs")
{
    CHECK_THROWS_AS(solve_se(square_spec(0.0, 1.0), SolverConfig{}), ConfigError);
    CHECK_THROWS_AS(solve_se(square_spec(1.0, -1.0), SolverConfig{}), ConfigError);
    ProblemSpec s = square_spec(1.0, 1.0);
    s.rho_plus = 1.0;
    CHECK_THROWS_AS(solve_se(s, SolverConfig{}), ConfigError);
    s.rho_plus = 0.5;
    s.geometry.gram = {{{1.0, 2.0}, {2.0, 1.0}}};
    CHECK_THROWS_AS(solve_se(s, SolverConfig{}), ConfigError);
    SolverConfig bad;
    bad.damping = 1.0;
    CHECK_THROWS_AS(solve_se(square_spec(1.0, 1.0), bad), ConfigError);
}

TEST_CASE("non-convergence is reported, not thrown")
{
    SolverConfig cfg;
    cfg.max_iter = 2;
    const auto res = solve_se(square_spec(2.0, 1e-5), cfg);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 2);
}

TEST_CASE("random labels, square loss")
{
    SolverConfig cfg = quad_config();
    const auto r = solve_rl_square(2.0, 1e-10, VarianceModel::point_mass(1), cfg);
    CHECK(r.converged);
    CHECK(r.v == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.q == doctest::Approx(1.0).epsilon(1e-6));

    for (const auto& m : {VarianceModel::point_mass(1), VarianceModel::inverse_gamma(2, 1),
                          VarianceModel::inverse_gamma(0.5, 1), VarianceModel::contaminated(0.5, 0.5, 1)}) {
        const auto low = solve_rl_square(0.5, 1e-4, m, cfg);
        CHECK(low.converged);
        CHECK(rl_training_loss_theory(low) < 1e-6);
        const auto high = solve_rl_square(2.0, 1e-9, m, cfg);
        CHECK(high.converged);
        CHECK(high.q / high.v == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("random labels: v solves the same equation as the full system")
{
    // v does not depend on m or b, so the reduced system must reproduce it
    const auto m = VarianceModel::inverse_gamma(2, 1);
    SolverConfig cfg = quad_config();
    const auto rl = solve_rl_square(3.0, 0.01, m, cfg);
    REQUIRE(rl.converged);
    OrderParams p;
    p.m_plus = p.m_minus = p.b = 0.0;
    p.q = rl.q;
    p.v = rl.v;
    const auto out = se_update_ridge_square(p, square_spec(3.0, 0.01, m));
    CHECK(out.v == doctest::Approx(rl.v).epsilon(1e-9));
    CHECK(rl.delta1 == doctest::Approx(delta_k(m, rl.v, 1)).epsilon(1e-9));
    CHECK(rl.delta2 == doctest::Approx(delta_k(m, rl.v, 2)).epsilon(1e-9));
}

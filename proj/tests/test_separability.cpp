#include "superstat/separability.hpp"

#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <numbers>

using namespace superstat;

namespace {

double m2_oracle(double s)
{
    boost::math::quadrature::exp_sinh<double> integrator;
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    return integrator.integrate([&](double f) { return f * f * c * std::exp(-0.5 * (f + s) * (f + s)); }, 0.0,
                                std::numeric_limits<double>::infinity());
}

} // namespace

TEST_CASE("truncated second moment matches direct integration")
{
    for (double s : {-6.0, -2.5, -1.0, -0.1, 0.0, 0.3, 1.0, 2.0, 4.0, 8.0}) {
        CAPTURE(s);
        CHECK(truncated_second_moment(s) == doctest::Approx(m2_oracle(s)).epsilon(1e-9));
    }
    CHECK(truncated_second_moment(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(truncated_second_moment(40.0) >= 0.0);
    CHECK(truncated_second_moment(40.0) < 1e-300);
}

TEST_CASE("S integral examples")
{
    const auto unit = VarianceModel::point_mass(1);
    CHECK(s_integral(1e-9, 0.0, unit, 0.5) == doctest::Approx(0.5).epsilon(1e-8));
    const auto wide = VarianceModel::point_mass(1e8);
    for (double theta : {0.1, 0.5, 1.0}) {
        for (double gamma : {-2.0, 0.0, 3.0}) {
            CHECK(s_integral(theta, gamma, wide, 0.5) == doctest::Approx(0.5).epsilon(1e-3));
        }
    }
}

TEST_CASE("S integral is even in gamma for balanced clusters")
{
    for (const auto& m : {VarianceModel::point_mass(1), VarianceModel::inverse_gamma(2, 1),
                          VarianceModel::contaminated(0.5, 0.5, 1)}) {
        for (double theta : {0.2, 0.7}) {
            for (double gamma : {0.1, 0.9, 2.5}) {
                CHECK(s_integral(theta, gamma, m, 0.5) ==
                      doctest::Approx(s_integral(theta, -gamma, m, 0.5)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("alpha_star recovers the Cover threshold for wide clouds")
{
    const auto pm = alpha_star(VarianceModel::point_mass(1e4), 0.5);
    CHECK(pm.converged);
    CHECK(pm.alpha_star == doctest::Approx(2.0).epsilon(0.025));
    const auto ig = alpha_star(VarianceModel::inverse_gamma(0.75, 1e4), 0.5);
    CHECK(ig.converged);
    CHECK(ig.alpha_star == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("alpha_star result is self-consistent")
{
    for (const auto& m : {VarianceModel::point_mass(1), VarianceModel::inverse_gamma(2, 1),
                          VarianceModel::unit_covariance(5), VarianceModel::contaminated(0.5, 0.5, 1)}) {
        const auto r = alpha_star(m, 0.5);
        CAPTURE(m.describe());
        CHECK(r.converged);
        CHECK(std::abs(r.gamma_star) <= 1e-3);
        CHECK(r.theta_star > 0.0);
        CHECK(r.theta_star <= 1.0);
        CHECK(r.alpha_star >= 2.0);
        CHECK(r.alpha_star == doctest::Approx((1.0 - r.theta_star * r.theta_star) / r.S_at_opt).epsilon(1e-12));
        CHECK(r.S_at_opt == doctest::Approx(s_integral(r.theta_star, r.gamma_star, m, 0.5)).epsilon(1e-8));
    }
}

TEST_CASE("alpha_star dominates its search grid")
{
    const auto m = VarianceModel::inverse_gamma(2, 1);
    const auto r = alpha_star(m, 0.5);
    const auto rule = DeltaRule::quadrature(m);
    for (int i = 1; i <= 20; ++i) {
        for (int j = 0; j <= 20; ++j) {
            const double theta = i / 20.0;
            const double gamma = -5.0 + j * 0.5;
            CHECK((1.0 - theta * theta) / s_integral(theta, gamma, rule, 0.5) <= r.alpha_star + 1e-9);
        }
    }
}

TEST_CASE("swapping the class weights reflects gamma_star")
{
    const auto m = VarianceModel::inverse_gamma(2, 1);
    const auto a = alpha_star(m, 0.3);
    const auto b = alpha_star(m, 0.7);
    CHECK(a.converged);
    CHECK(b.converged);
    CHECK(a.alpha_star == doctest::Approx(b.alpha_star).epsilon(1e-6));
    CHECK(a.gamma_star == doctest::Approx(-b.gamma_star).epsilon(1e-3));
    CHECK(std::abs(a.gamma_star) > 1e-2);
}

TEST_CASE("tighter clouds raise the threshold")
{
    // less signal relative to spread makes separation harder
    const double wide = alpha_star(VarianceModel::point_mass(4), 0.5).alpha_star;
    const double narrow = alpha_star(VarianceModel::point_mass(0.25), 0.5).alpha_star;
    CHECK(narrow > wide);
}

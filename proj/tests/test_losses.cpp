#include "superstat/errors.hpp"
#include "superstat/losses.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace superstat;

namespace {

double prox_objective(LossKind kind, int y, double omega, double kappa, double u)
{
    return (u - omega) * (u - omega) / (2.0 * kappa) + loss(kind, y, u);
}

// Oracle for the logistic prox: bisection on the stationarity condition.
double bisect_logistic_prox(int y, double omega, double kappa)
{
    double lo = omega - kappa - 1.0;
    double hi = omega + kappa + 1.0;
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double g = (mid - omega) / kappa - y / (1.0 + std::exp(y * mid));
        (g > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("loss values")
{
    CHECK(loss(LossKind::Square, 1, 1.0) == 0.0);
    CHECK(loss(LossKind::Logistic, 1, 0.0) == doctest::Approx(std::log(2.0)));
    CHECK(loss(LossKind::Logistic, -1, -3.0) == doctest::Approx(0.048587).epsilon(1e-5));
    CHECK(loss(LossKind::Logistic, 1, 800.0) >= 0.0);
    CHECK(loss(LossKind::Logistic, 1, -800.0) == doctest::Approx(800.0));
    CHECK_THROWS_AS(loss(LossKind::Square, 0, 1.0), DomainError);
}

TEST_CASE("loss symmetry l(y, eta) = l(-y, -eta)")
{
    for (auto kind : {LossKind::Square, LossKind::Logistic}) {
        for (double eta : {-5.0, -1.0, -0.1, 0.0, 0.3, 2.0, 40.0}) {
            CHECK(loss(kind, 1, eta) == doctest::Approx(loss(kind, -1, -eta)));
            CHECK(loss_derivative(kind, 1, eta) == doctest::Approx(-loss_derivative(kind, -1, -eta)));
        }
    }
}

TEST_CASE("derivatives match finite differences")
{
    for (auto kind : {LossKind::Square, LossKind::Logistic}) {
        for (int y : {1, -1}) {
            for (double eta : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
                const double h = 1e-5;
                const double fd = (loss(kind, y, eta + h) - loss(kind, y, eta - h)) / (2 * h);
                CHECK(loss_derivative(kind, y, eta) == doctest::Approx(fd).epsilon(1e-7));
                const double fd2 = (loss_derivative(kind, y, eta + h) - loss_derivative(kind, y, eta - h)) / (2 * h);
                CHECK(loss_curvature(kind, eta) == doctest::Approx(fd2).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("logistic curvature")
{
    CHECK(logistic_curvature(0.0) == 0.25);
    CHECK(logistic_curvature(10.0) == doctest::Approx(4.5395807735951673e-05).epsilon(1e-12));
    CHECK(logistic_curvature(10.0) == logistic_curvature(-10.0));
    CHECK(logistic_curvature(1e4) == 0.0);
    for (double x : {-20.0, -2.0, 0.5, 7.0}) {
        CHECK(logistic_curvature(x) > 0.0);
        CHECK(logistic_curvature(x) <= 0.25);
    }
}

TEST_CASE("prox examples")
{
    auto r = prox(LossKind::Square, 1, 0.0, 1.0);
    CHECK(r.h == doctest::Approx(0.5));
    CHECK(r.f == doctest::Approx(0.5));
    r = prox(LossKind::Square, 1, 2.0, 3.0);
    CHECK(r.h == doctest::Approx(1.25));
    CHECK(r.f == doctest::Approx(-0.25));

    r = prox(LossKind::Logistic, 1, 0.0, 1.0);
    CHECK(r.h == doctest::Approx(bisect_logistic_prox(1, 0.0, 1.0)).epsilon(1e-12));
    CHECK(r.h == doctest::Approx(0.4010).epsilon(1e-4));

    r = prox(LossKind::Logistic, 1, 30.0, 1.0);
    CHECK(r.h == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(std::abs(r.f) < 1e-12);

    CHECK_THROWS_AS(prox(LossKind::Logistic, 1, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(prox(LossKind::Square, 1, 0.0, -1.0), DomainError);
}

TEST_CASE("logistic prox: f is in (0, 1) for y = +1 and in (-1, 0) for y = -1")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> om(-20.0, 20.0);
    std::uniform_real_distribution<double> lk(-6.0, 4.0);
    for (int i = 0; i < 1000; ++i) {
        const double omega = om(rng);
        const double kappa = std::pow(10.0, lk(rng));
        const auto p = prox(LossKind::Logistic, 1, omega, kappa);
        const auto m = prox(LossKind::Logistic, -1, omega, kappa);
        CHECK(p.f > 0.0);
        CHECK(p.f < 1.0);
        CHECK(m.f < 0.0);
        CHECK(m.f > -1.0);
        // stationarity
        CHECK(std::abs(p.f + loss_derivative(LossKind::Logistic, 1, p.h)) <= 1e-12);
        CHECK(std::abs((p.h - omega) / kappa - p.f) <= 1e-9 * std::max(1.0, std::abs(omega) / kappa));
    }
}

TEST_CASE("prox beats every point of a dense grid (1000 random cases)")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> om(-10.0, 10.0);
    std::uniform_real_distribution<double> lk(-3.0, 2.0);
    std::bernoulli_distribution coin(0.5);
    int failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto kind = i % 2 ? LossKind::Logistic : LossKind::Square;
        const int y = coin(rng) ? 1 : -1;
        const double omega = om(rng);
        const double kappa = std::pow(10.0, lk(rng));
        const auto r = prox(kind, y, omega, kappa);
        const double best = prox_objective(kind, y, omega, kappa, r.h);
        const double width = 2.0 * (kappa + 1.0);
        for (int k = -2000; k <= 2000; ++k) {
            const double u = r.h + width * k / 2000.0;
            if (prox_objective(kind, y, omega, kappa, u) - best < -1e-9) ++failures;
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("prox odd symmetry and monotonicity")
{
    for (auto kind : {LossKind::Square, LossKind::Logistic}) {
        for (double kappa : {0.01, 1.0, 50.0}) {
            double prev = -INFINITY;
            for (double omega = -15.0; omega <= 15.0; omega += 0.37) {
                const double h = prox(kind, 1, omega, kappa).h;
                CHECK(prox(kind, -1, -omega, kappa).h == doctest::Approx(-h).epsilon(1e-12));
                CHECK(h >= prev);
                prev = h;
            }
        }
    }
}

TEST_CASE("closed-form square prox matches a generic numerical prox")
{
    // bisection on the derivative of the prox objective
    auto numeric = [](int y, double omega, double kappa) {
        double a = omega - 10.0 * (kappa + 1.0);
        double b = omega + 10.0 * (kappa + 1.0);
        for (int i = 0; i < 300; ++i) {
            const double mid = 0.5 * (a + b);
            const double g = (mid - omega) / kappa + loss_derivative(LossKind::Square, y, mid);
            (g > 0.0 ? b : a) = mid;
        }
        return 0.5 * (a + b);
    };
    for (int y : {1, -1}) {
        for (double omega : {-3.0, 0.0, 0.7, 5.0}) {
            for (double kappa : {0.1, 1.0, 8.0}) {
                CHECK(std::abs(prox(LossKind::Square, y, omega, kappa).h - numeric(y, omega, kappa)) < 1e-10);
            }
        }
    }
}

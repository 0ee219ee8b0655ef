#pragma once

// Scalar variance laws for Gaussian scale-mixture clouds: each point is
// N(mu, Delta * I) with Delta drawn from one of the laws below.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace superstat {

struct PointMass {
    double delta = 1.0;
};

/// density c^a x^{-a-1} exp(-c/x) / Gamma(a)
struct InverseGamma {
    double a = 2.0;
    double c = 1.0;
};

/// r * InverseGamma(a, c) + (1 - r) * PointMass(1)
struct Contaminated {
    double r = 0.5;
    double a = 0.5;
    double c = 1.0;
};

class VarianceModel {
public:
    using Variant = std::variant<PointMass, InverseGamma, Contaminated>;

    VarianceModel() = default;
    explicit VarianceModel(Variant v);

    static VarianceModel point_mass(double delta);
    static VarianceModel inverse_gamma(double a, double c);
    /// InverseGamma(a, a - 1): unit mean variance, so the cloud covariance is I.
    static VarianceModel unit_covariance(double a);
    static VarianceModel contaminated(double r, double a, double c);

    const Variant& variant() const noexcept { return v_; }
    std::string describe() const;

private:
    Variant v_ = PointMass{1.0};
};

struct MomentReport {
    double mean_delta = 0.0;  ///< E[Delta]
    double inv_mean = 0.0;    ///< E[1/Delta]
    double inv_sq_mean = 0.0; ///< E[1/Delta^2]
    bool mean_finite = true;
    bool inv_mean_finite = true;
    bool inv_sq_mean_finite = true;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct MonteCarlo {
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
};

/// Trapezoid rule in the log of the Gamma variable 1/Delta; tol drives the
/// step size and, for expect(), the refinement stopping rule.
struct Quadrature {
    double tol = 1e-10;
};

using ExpectMethod = std::variant<MonteCarlo, Quadrature>;

/// Density of the continuous part at delta (atoms are not included).
double density(const VarianceModel& model, double delta);

/// i.i.d. draws, deterministic given seed. Chunks of the stream are seeded
/// independently from the root seed so the output does not depend on threads.
std::vector<double> sample(const VarianceModel& model, std::size_t n, std::uint64_t seed);

MomentReport moments(const VarianceModel& model);

/// E[f(Delta)]. MC reports a standard error; quadrature reports the difference
/// between the last two refinements.
Estimate expect(const VarianceModel& model, const std::function<double(double)>& f,
                const ExpectMethod& method = Quadrature{});

/// E[(1 + v Delta)^{-k}] for k in {1, 2}.
double delta_k(const VarianceModel& model, double v, int k, const ExpectMethod& method = Quadrature{});

/// A discrete probability measure (Delta_i, w_i) standing in for the variance
/// law. Built once and reused so that repeated expectations share nodes.
class DeltaRule {
public:
    static DeltaRule monte_carlo(const VarianceModel& model, std::size_t samples, std::uint64_t seed);
    static DeltaRule quadrature(const VarianceModel& model, double tol = 1e-10);
    static DeltaRule build(const VarianceModel& model, const ExpectMethod& method);

    std::span<const double> deltas() const noexcept { return deltas_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return deltas_.size(); }

    template <class F>
    double expect(F&& f) const
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < deltas_.size(); ++i) acc += weights_[i] * f(deltas_[i]);
        return acc;
    }

    /// E[(1 + v Delta)^{-k}]
    double delta_k(double v, int k) const;

private:
    void append(double delta, double weight);
    void scale(double factor);

    std::vector<double> deltas_;
    std::vector<double> weights_;
};

} // namespace superstat

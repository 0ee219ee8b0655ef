#include "superstat/variance_model.hpp"

#include "superstat/errors.hpp"
#include "superstat/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace superstat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kSampleChunk = 4096;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t chunk_seed(std::uint64_t root, std::size_t chunk)
{
    return derive_seed(root, static_cast<std::uint64_t>(chunk));
}

void validate(const VarianceModel::Variant& v)
{
    std::visit(Overloaded{
                   [](const PointMass& p) {
                       if (!(p.delta > 0.0) || !std::isfinite(p.delta))
                           throw ConfigError("point_mass: delta must be positive and finite");
                   },
                   [](const InverseGamma& g) {
                       if (!(g.a > 0.0) || !(g.c > 0.0) || !std::isfinite(g.a) || !std::isfinite(g.c))
                           throw ConfigError("inverse_gamma: a and c must be positive and finite");
                   },
                   [](const Contaminated& m) {
                       if (!(m.r >= 0.0 && m.r <= 1.0))
                           throw ConfigError("contaminated: r must lie in [0, 1]");
                       if (!(m.a > 0.0) || !(m.c > 0.0) || !std::isfinite(m.a) || !std::isfinite(m.c))
                           throw ConfigError("contaminated: a and c must be positive and finite");
                   },
               },
               v);
}

double inverse_gamma_density(double a, double c, double x)
{
    const double log_p = a * std::log(c) - (a + 1.0) * std::log(x) - c / x - std::lgamma(a);
    return std::exp(log_p);
}

// log-density of s = log(G) - log(a), G ~ Gamma(a, 1), relative to its mode.
double log_gamma_profile(double a, double x)
{
    return a * x - a * std::expm1(x);
}

// Solve log_gamma_profile(a, x) = -depth on the side given by sign.
double profile_edge(double a, double depth, double sign)
{
    double lo = 0.0;
    double hi = sign;
    while (log_gamma_profile(a, hi) > -depth) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (log_gamma_profile(a, mid) > -depth) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

// Nodes for InverseGamma(a, c): Delta = c / G, trapezoid in log G.
// The integrand is analytic in the strip |Im s| < pi/2, hence the pi^2 step.
void inverse_gamma_nodes(double a, double c, double tol, int refine, std::vector<double>& deltas,
                         std::vector<double>& weights)
{
    const double log_tol = std::max(5.0, -std::log(tol));
    const double sigma = 1.0 / std::sqrt(a);
    double h = std::min(std::numbers::pi * std::numbers::pi / log_tol,
                        std::numbers::pi * std::numbers::sqrt2 * sigma / std::sqrt(log_tol));
    h = std::ldexp(h * 0.75, -refine);
    const double depth = std::max(45.0, log_tol + 10.0);
    const double x_lo = profile_edge(a, depth, -1.0);
    const double x_hi = profile_edge(a, depth, 1.0);
    const auto n = static_cast<std::size_t>(std::ceil((x_hi - x_lo) / h)) + 1;
    const double start = 0.5 * (x_lo + x_hi) - 0.5 * h * static_cast<double>(n - 1);

    deltas.clear();
    weights.clear();
    deltas.reserve(n);
    weights.reserve(n);
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = start + h * static_cast<double>(k);
        const double w = std::exp(log_gamma_profile(a, x));
        deltas.push_back(c / (a * std::exp(x)));
        weights.push_back(w);
        total += w;
    }
    for (double& w : weights) w /= total;
}


// Full node set for the law at a given refinement level.
void quadrature_nodes(const VarianceModel& model, double tol, int refine, std::vector<double>& deltas,
                      std::vector<double>& weights)
{
    std::visit(Overloaded{
                   [&](const PointMass& p) {
                       deltas.assign(1, p.delta);
                       weights.assign(1, 1.0);
                   },
                   [&](const InverseGamma& g) { inverse_gamma_nodes(g.a, g.c, tol, refine, deltas, weights); },
                   [&](const Contaminated& m) {
                       deltas.clear();
                       weights.clear();
                       if (m.r > 0.0) {
                           inverse_gamma_nodes(m.a, m.c, tol, refine, deltas, weights);
                           for (double& w : weights) w *= m.r;
                       }
                       if (m.r < 1.0) {
                           deltas.push_back(1.0);
                           weights.push_back(1.0 - m.r);
                       }
                   },
               },
               model.variant());
}

std::vector<double> sample_inverse_gamma(double a, double c, std::size_t n, std::uint64_t seed)
{
    std::vector<double> out(n);
    const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
    for (std::size_t k = 0; k < chunks; ++k) {
        std::mt19937_64 rng(chunk_seed(seed, k));
        std::gamma_distribution<double> gamma(a, 1.0);
        const std::size_t end = std::min(n, (k + 1) * kSampleChunk);
        for (std::size_t i = k * kSampleChunk; i < end; ++i) {
            double g = gamma(rng);
            while (!(g > 0.0)) g = gamma(rng);
            out[i] = c / g;
        }
    }
    return out;
}

void check_finite(double value, double delta)
{
    if (!std::isfinite(value)) {
        std::ostringstream os;
        os << "integrand is not finite at Delta = " << delta;
        throw IntegrationError(os.str());
    }
}

} // namespace

VarianceModel::VarianceModel(Variant v) : v_(std::move(v))
{
    validate(v_);
}

VarianceModel VarianceModel::point_mass(double delta)
{
    return VarianceModel(PointMass{delta});
}

VarianceModel VarianceModel::inverse_gamma(double a, double c)
{
    return VarianceModel(InverseGamma{a, c});
}

VarianceModel VarianceModel::unit_covariance(double a)
{
    if (!(a > 1.0)) throw ConfigError("unit_covariance: a must exceed 1");
    return VarianceModel(InverseGamma{a, a - 1.0});
}

VarianceModel VarianceModel::contaminated(double r, double a, double c)
{
    return VarianceModel(Contaminated{r, a, c});
}

std::string VarianceModel::describe() const
{
    std::ostringstream os;
    std::visit(Overloaded{
                   [&](const PointMass& p) { os << "point_mass(delta=" << p.delta << ")"; },
                   [&](const InverseGamma& g) { os << "inverse_gamma(a=" << g.a << ", c=" << g.c << ")"; },
                   [&](const Contaminated& m) {
                       os << "contaminated(r=" << m.r << ", a=" << m.a << ", c=" << m.c << ")";
                   },
               },
               v_);
    return os.str();
}

double density(const VarianceModel& model, double delta)
{
    if (!(delta > 0.0)) throw DomainError("density: Delta must be positive");
    return std::visit(Overloaded{
                          [](const PointMass&) { return 0.0; },
                          [&](const InverseGamma& g) { return inverse_gamma_density(g.a, g.c, delta); },
                          [&](const Contaminated& m) { return m.r * inverse_gamma_density(m.a, m.c, delta); },
                      },
                      model.variant());
}

std::vector<double> sample(const VarianceModel& model, std::size_t n, std::uint64_t seed)
{
    return std::visit(Overloaded{
                          [&](const PointMass& p) { return std::vector<double>(n, p.delta); },
                          [&](const InverseGamma& g) { return sample_inverse_gamma(g.a, g.c, n, seed); },
                          [&](const Contaminated& m) {
                              std::vector<double> out = sample_inverse_gamma(m.a, m.c, n, seed);
                              const std::uint64_t mix_seed = splitmix64(seed ^ 0xc0ffee5eedULL);
                              const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
                              for (std::size_t k = 0; k < chunks; ++k) {
                                  std::mt19937_64 rng(chunk_seed(mix_seed, k));
                                  std::uniform_real_distribution<double> u(0.0, 1.0);
                                  const std::size_t end = std::min(n, (k + 1) * kSampleChunk);
                                  for (std::size_t i = k * kSampleChunk; i < end; ++i) {
                                      if (u(rng) >= m.r) out[i] = 1.0;
                                  }
                              }
                              return out;
                          },
                      },
                      model.variant());
}

MomentReport moments(const VarianceModel& model)
{
    auto ig = [](double a, double c) {
        MomentReport r;
        r.mean_finite = a > 1.0;
        r.mean_delta = r.mean_finite ? c / (a - 1.0) : kInf;
        r.inv_mean = a / c;
        r.inv_sq_mean = a * (a + 1.0) / (c * c);
        return r;
    };
    return std::visit(Overloaded{
                          [](const PointMass& p) {
                              MomentReport r;
                              r.mean_delta = p.delta;
                              r.inv_mean = 1.0 / p.delta;
                              r.inv_sq_mean = 1.0 / (p.delta * p.delta);
                              return r;
                          },
                          [&](const InverseGamma& g) { return ig(g.a, g.c); },
                          [&](const Contaminated& m) {
                              if (m.r == 0.0) return MomentReport{1.0, 1.0, 1.0, true, true, true};
                              MomentReport r = ig(m.a, m.c);
                              r.mean_delta = r.mean_finite ? m.r * r.mean_delta + (1.0 - m.r) : kInf;
                              r.inv_mean = m.r * r.inv_mean + (1.0 - m.r);
                              r.inv_sq_mean = m.r * r.inv_sq_mean + (1.0 - m.r);
                              return r;
                          },
                      },
                      model.variant());
}

Estimate expect(const VarianceModel& model, const std::function<double(double)>& f, const ExpectMethod& method)
{
    if (const auto* mc = std::get_if<MonteCarlo>(&method)) {
        if (mc->samples < 2) throw ConfigError("expect: Monte Carlo needs at least two samples");
        auto continuous = [&](double a, double c, double mass, double atom_mass) {
            const std::vector<double> draws = sample_inverse_gamma(a, c, mc->samples, mc->seed);
            double mean = 0.0;
            double m2 = 0.0;
            for (std::size_t i = 0; i < draws.size(); ++i) {
                const double v = f(draws[i]);
                check_finite(v, draws[i]);
                const double d = v - mean;
                mean += d / static_cast<double>(i + 1);
                m2 += d * (v - mean);
            }
            const double n = static_cast<double>(draws.size());
            double value = mass * mean;
            if (atom_mass > 0.0) {
                const double at = f(1.0);
                check_finite(at, 1.0);
                value += atom_mass * at;
            }
            return Estimate{value, mass * std::sqrt(m2 / (n - 1.0) / n)};
        };
        return std::visit(Overloaded{
                              [&](const PointMass& p) {
                                  const double v = f(p.delta);
                                  check_finite(v, p.delta);
                                  return Estimate{v, 0.0};
                              },
                              [&](const InverseGamma& g) { return continuous(g.a, g.c, 1.0, 0.0); },
                              [&](const Contaminated& m) {
                                  if (m.r == 0.0) {
                                      const double v = f(1.0);
                                      check_finite(v, 1.0);
                                      return Estimate{v, 0.0};
                                  }
                                  return continuous(m.a, m.c, m.r, 1.0 - m.r);
                              },
                          },
                          model.variant());
    }

    const double tol = std::get<Quadrature>(method).tol;
    if (!(tol > 0.0)) throw ConfigError("expect: quadrature tolerance must be positive");
    std::vector<double> deltas;
    std::vector<double> weights;
    auto integrate = [&](int refine) {
        quadrature_nodes(model, tol, refine, deltas, weights);
        double acc = 0.0;
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            const double v = f(deltas[i]);
            check_finite(v, deltas[i]);
            acc += weights[i] * v;
        }
        return acc;
    };
    if (std::holds_alternative<PointMass>(model.variant())) return {integrate(0), 0.0};

    constexpr int kMaxRefine = 6;
    double prev = integrate(0);
    for (int level = 1; level <= kMaxRefine; ++level) {
        const double cur = integrate(level);
        const double diff = std::abs(cur - prev);
        if (diff <= tol * std::max(1.0, std::abs(cur))) return {cur, diff};
        prev = cur;
    }
    std::ostringstream os;
    os << "expect: quadrature did not reach tol " << tol << " for " << model.describe();
    throw IntegrationError(os.str());
}

double delta_k(const VarianceModel& model, double v, int k, const ExpectMethod& method)
{
    if (k != 1 && k != 2) throw DomainError("delta_k: k must be 1 or 2");
    if (!(v >= 0.0)) throw DomainError("delta_k: v must be non-negative");
    const double e = expect(model, [v, k](double d) { return std::pow(1.0 + v * d, -k); }, method).value;
    return std::min(e, 1.0);
}

DeltaRule DeltaRule::monte_carlo(const VarianceModel& model, std::size_t samples, std::uint64_t seed)
{
    if (samples == 0) throw ConfigError("DeltaRule: sample count must be positive");
    DeltaRule rule;
    auto add_draws = [&](double a, double c, double mass) {
        const std::vector<double> draws = sample_inverse_gamma(a, c, samples, seed);
        for (double d : draws) rule.append(d, mass / static_cast<double>(samples));
    };
    std::visit(Overloaded{
                   [&](const PointMass& p) { rule.append(p.delta, 1.0); },
                   [&](const InverseGamma& g) { add_draws(g.a, g.c, 1.0); },
                   [&](const Contaminated& m) {
                       if (m.r > 0.0) add_draws(m.a, m.c, m.r);
                       if (m.r < 1.0) rule.append(1.0, 1.0 - m.r);
                   },
               },
               model.variant());
    return rule;
}

DeltaRule DeltaRule::quadrature(const VarianceModel& model, double tol)
{
    if (!(tol > 0.0)) throw ConfigError("DeltaRule: quadrature tolerance must be positive");
    DeltaRule rule;
    quadrature_nodes(model, tol, 0, rule.deltas_, rule.weights_);
    return rule;
}

DeltaRule DeltaRule::build(const VarianceModel& model, const ExpectMethod& method)
{
    if (const auto* mc = std::get_if<MonteCarlo>(&method)) return monte_carlo(model, mc->samples, mc->seed);
    return quadrature(model, std::get<Quadrature>(method).tol);
}

double DeltaRule::delta_k(double v, int k) const
{
    // weights sum to 1 only up to rounding
    if (k == 1) return std::min(1.0, expect([v](double d) { return 1.0 / (1.0 + v * d); }));
    if (k == 2) {
        return std::min(1.0, expect([v](double d) {
                            const double t = 1.0 / (1.0 + v * d);
                            return t * t;
                        }));
    }
    throw DomainError("delta_k: k must be 1 or 2");
}

void DeltaRule::append(double delta, double weight)
{
    deltas_.push_back(delta);
    weights_.push_back(weight);
}

void DeltaRule::scale(double factor)
{
    for (double& w : weights_) w *= factor;
}

} // namespace superstat

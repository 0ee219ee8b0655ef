#pragma once

#include "superstat/losses.hpp"
#include "superstat/erm.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace superstat::cli {

enum class Command { SweepAlpha, Separability, Bayes, Simulate, RandomLabels, OptimalLambda };

Command parse_command(const std::string& name);
const char* to_string(Command c) noexcept;

/// Variance law parameters; list-valued so that separability can scan them.
struct VarianceGrid {
    std::string kind = "point_mass";
    std::vector<double> delta{1.0};
    std::vector<double> a{2.0};
    std::vector<double> c{1.0};
    std::vector<double> r{0.5};

    /// Cartesian product of the parameters used by `kind`.
    std::vector<VarianceModel> models() const;
};

struct RunConfig {
    Command command = Command::SweepAlpha;

    LossKind loss = LossKind::Square;
    std::vector<double> lambda{1e-5};
    double rho_plus = 0.5;
    VarianceGrid variance;
    std::vector<double> alpha{1.0};

    double tol = 1e-5;
    std::size_t max_iter = 1000;
    double damping = 0.5;
    std::size_t zeta_nodes = 127;
    std::string delta_method = "mc"; ///< mc | quadrature
    std::size_t mc_samples = 100000;
    double quad_tol = 1e-10;
    std::uint64_t seed = 0;
    bool bayes = true;

    std::size_t d = 0; ///< 0 disables simulations
    std::size_t seeds = 10;
    std::size_t n_test = 100000;
    LabelMode label_mode = LabelMode::Class;
    double fit_tol = 1e-8;

    double gamma_max = 5.0;
    std::size_t theta_grid = 64;
    std::size_t gamma_grid = 64;

    std::string out;
    std::size_t threads = 1;

    SolverConfig solver_config() const;
    ExperimentConfig experiment_config() const;
    std::vector<std::uint64_t> seed_list() const;
};

/// key = value lines; '#' starts a comment. Lists are comma separated or
/// linspace(a, b, n) / logspace(a, b, n) with base-10 exponents.
std::map<std::string, std::string> parse_kv(const std::string& text);
std::map<std::string, std::string> read_kv_file(const std::string& path);

std::vector<double> parse_grid(const std::string& text);

/// Applies key/value pairs onto cfg. Unknown keys are a ConfigError.
void apply_overrides(RunConfig& cfg, const std::map<std::string, std::string>& kv);

} // namespace superstat::cli

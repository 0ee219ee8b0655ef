#pragma once

#include "superstat/losses.hpp"
#include "superstat/state_evolution.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace superstat {

enum class LabelMode { Class, Random };

struct DatasetMeta {
    std::size_t n = 0;
    std::size_t d = 0;
    std::uint64_t seed = 0;
    LabelMode label_mode = LabelMode::Class;
    double rho_plus = 0.5;
    std::string variance;
    /// Gram matrix of the realised centroids +-mu_tilde.
    std::array<std::array<double, 2>, 2> gram{};
};

/// Row i is x_i = c_i mu_tilde + sqrt(delta_i) z_i with c_i the cloud index
/// (+1/-1). In class mode y_i = c_i; in random mode y_i is a fair coin.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd cloud;
    Eigen::VectorXd delta;
    Eigen::VectorXd mu; ///< mu_tilde = mu / sqrt(d)
    DatasetMeta meta;
};

struct FitDiagnostics {
    double objective = 0.0;
    double grad_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool min_norm = false; ///< lambda = 0 minimum-norm path was used
    bool diverged = false;  ///< ||w|| / sqrt(d) exceeded the divergence guard
    bool separable = false; ///< every training margin y * eta is positive
};

struct Estimator {
    Eigen::VectorXd w;
    double b = 0.0;
    LossKind loss = LossKind::Square;
    FitDiagnostics diag;
};

class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, Estimator best) : std::runtime_error(what), best_(std::move(best)) {}
    const Estimator& best() const noexcept { return best_; }

private:
    Estimator best_;
};

Dataset sample_dataset(const ProblemSpec& spec, std::size_t n, std::size_t d, std::uint64_t seed,
                       LabelMode mode = LabelMode::Class);

/// Exact minimiser of sum_i (y_i - x_i.w/sqrt(d) - b)^2 / 2 + lambda |w|^2 / 2.
Estimator fit_ridge_square(const Dataset& data, double lambda);

/// Objective value of the ridge-square risk at (w, b).
double ridge_square_objective(const Dataset& data, double lambda, const Eigen::VectorXd& w, double b);

struct LogisticFitConfig {
    double tol = 1e-8; ///< on the gradient norm of the summed risk
    std::size_t max_iter = 100;
    /// ||w|| / sqrt(d) above this is reported as diverged. On separable data
    /// the norm grows like log(1 / lambda), so this is a heuristic flag.
    double divergence_guard = 10.0;
};

/// Newton's method with backtracking on sum_i log(1 + exp(-y_i eta_i)) + lambda |w|^2 / 2.
Estimator fit_logistic(const Dataset& data, double lambda, const LogisticFitConfig& cfg = {});

struct EmpiricalErrors {
    double eps_g = 0.0;
    double eps_t = 0.0;
    double eps_l = 0.0;
    double mse_g = 0.0;
};

/// Training metrics on `data`; test metrics on n_test fresh points. Test
/// points are drawn through their exact one-dimensional projection.
EmpiricalErrors evaluate(const Estimator& est, const ProblemSpec& spec, const Dataset& data, std::size_t n_test,
                         std::uint64_t seed);

enum class Fitter { RidgeSquare, Logistic };

struct ExperimentConfig {
    std::size_t d = 1000;
    std::vector<std::uint64_t> seeds{0};
    Fitter fitter = Fitter::RidgeSquare;
    LabelMode label_mode = LabelMode::Class;
    std::size_t n_test = 100000;
    std::size_t threads = 1;
    LogisticFitConfig logistic;
};

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
};

struct ExperimentRow {
    double alpha = 0.0;
    MeanSE eps_g;
    MeanSE eps_t;
    MeanSE eps_l;
    MeanSE mse_g;
    std::size_t ok = 0;
    std::vector<std::string> failures;
};

/// One row per alpha. spec.alpha is ignored; n = round(alpha d).
std::vector<ExperimentRow> run_experiment(const ProblemSpec& spec, const std::vector<double>& alphas,
                                          const ExperimentConfig& cfg);

} // namespace superstat

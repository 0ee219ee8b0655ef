#include "superstat/erm.hpp"

#include "superstat/errors.hpp"
#include "superstat/parallel.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>

namespace superstat {

namespace {

double softplus(double x)
{
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double sign_of(double eta)
{
    return eta >= 0.0 ? 1.0 : -1.0;
}

double logistic_objective(const Dataset& data, double lambda, const Eigen::VectorXd& eta, const Eigen::VectorXd& w)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) acc += softplus(-data.y[i] * eta[i]);
    return acc + 0.5 * lambda * w.squaredNorm();
}

void flag_divergence(Estimator& est, const Eigen::VectorXd& eta, const Dataset& data, const LogisticFitConfig& cfg,
                     double sqrt_d)
{
    est.diag.diverged = est.w.norm() / sqrt_d > cfg.divergence_guard;
    est.diag.separable = (data.y.array() * eta.array()).minCoeff() > 0.0;
}

MeanSE mean_se(const std::vector<double>& xs)
{
    MeanSE out;
    if (xs.empty()) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        out.se = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double n = static_cast<double>(xs.size());
    for (double x : xs) out.mean += x;
    out.mean /= n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.se = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

} // namespace

Dataset sample_dataset(const ProblemSpec& spec, std::size_t n, std::size_t d, std::uint64_t seed, LabelMode mode)
{
    if (n < 1 || d < 1) throw ConfigError("sample_dataset: n and d must be at least 1");
    if (!(spec.rho_plus > 0.0 && spec.rho_plus < 1.0)) throw ConfigError("sample_dataset: rho_plus must lie in (0, 1)");

    const auto ni = static_cast<Eigen::Index>(n);
    const auto di = static_cast<Eigen::Index>(d);
    const double sqrt_d = std::sqrt(static_cast<double>(d));
    Dataset data;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::mt19937_64 mu_rng(derive_seed(seed, 0));
    data.mu.resize(di);
    for (Eigen::Index j = 0; j < di; ++j) data.mu[j] = normal(mu_rng) / sqrt_d;

    std::mt19937_64 label_rng(derive_seed(seed, 1));
    data.cloud.resize(ni);
    data.y.resize(ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
        data.cloud[i] = unif(label_rng) < spec.rho_plus ? 1.0 : -1.0;
        data.y[i] = mode == LabelMode::Class ? data.cloud[i] : (unif(label_rng) < 0.5 ? 1.0 : -1.0);
    }

    const std::vector<double> deltas = sample(spec.variance, n, derive_seed(seed, 2));
    data.delta = Eigen::Map<const Eigen::VectorXd>(deltas.data(), ni);

    std::mt19937_64 noise_rng(derive_seed(seed, 3));
    data.X.resize(ni, di);
    for (Eigen::Index i = 0; i < ni; ++i) {
        const double s = std::sqrt(data.delta[i]);
        const double c = data.cloud[i];
        for (Eigen::Index j = 0; j < di; ++j) data.X(i, j) = c * data.mu[j] + s * normal(noise_rng);
    }

    const double mm = data.mu.squaredNorm();
    data.meta = {n, d, seed, mode, spec.rho_plus, spec.variance.describe(), {{{mm, -mm}, {-mm, mm}}}};
    return data;
}

double ridge_square_objective(const Dataset& data, double lambda, const Eigen::VectorXd& w, double b)
{
    const double sqrt_d = std::sqrt(static_cast<double>(data.X.cols()));
    const Eigen::VectorXd r = data.y - (data.X * w) / sqrt_d - Eigen::VectorXd::Constant(data.y.size(), b);
    return 0.5 * r.squaredNorm() + 0.5 * lambda * w.squaredNorm();
}

Estimator fit_ridge_square(const Dataset& data, double lambda)
{
    if (!(lambda >= 0.0)) throw ConfigError("fit_ridge_square: lambda must be non-negative");
    const Eigen::Index n = data.X.rows();
    const Eigen::Index d = data.X.cols();
    const double sqrt_d = std::sqrt(static_cast<double>(d));

    Estimator est;
    est.loss = LossKind::Square;
    Eigen::VectorXd theta(d + 1);

    if (lambda == 0.0) {
        // Limit lambda -> 0+ with b free: least norm w on centred data, then b.
        const Eigen::RowVectorXd col_mean = data.X.colwise().mean();
        const Eigen::MatrixXd Zc = (data.X.rowwise() - col_mean) / sqrt_d;
        const Eigen::VectorXd yc = data.y.array() - data.y.mean();
        est.w = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(Zc).solve(yc);
        est.b = data.y.mean() - col_mean.dot(est.w) / sqrt_d;
        est.diag.min_norm = true;
        const Eigen::VectorXd r = data.X * est.w / sqrt_d + Eigen::VectorXd::Constant(n, est.b) - data.y;
        Eigen::VectorXd g(d + 1);
        g.head(d) = data.X.transpose() * r / sqrt_d;
        g[d] = r.sum();
        est.diag.grad_norm = g.norm();
    } else {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d + 1, d + 1);
        M.topLeftCorner(d, d).selfadjointView<Eigen::Lower>().rankUpdate(data.X.transpose(), 1.0 / static_cast<double>(d));
        M.topLeftCorner(d, d).diagonal().array() += lambda;
        M.block(d, 0, 1, d) = data.X.colwise().sum() / sqrt_d;
        M(d, d) = static_cast<double>(n);

        Eigen::VectorXd rhs(d + 1);
        rhs.head(d) = data.X.transpose() * data.y / sqrt_d;
        rhs[d] = data.y.sum();

        const Eigen::LLT<Eigen::MatrixXd> llt(M.selfadjointView<Eigen::Lower>());
        if (llt.info() != Eigen::Success) throw SolverError("fit_ridge_square: normal equations not positive definite");
        theta = llt.solve(rhs);
        theta += llt.solve(rhs - M.selfadjointView<Eigen::Lower>() * theta); // one refinement step
        est.w = theta.head(d);
        est.b = theta[d];
        est.diag.grad_norm = (M.selfadjointView<Eigen::Lower>() * theta - rhs).norm();
    }
    est.diag.objective = ridge_square_objective(data, lambda, est.w, est.b);
    est.diag.iterations = 1;
    est.diag.converged = true;
    return est;
}

Estimator fit_logistic(const Dataset& data, double lambda, const LogisticFitConfig& cfg)
{
    if (!(lambda > 0.0)) throw ConfigError("fit_logistic: lambda must be positive");
    const Eigen::Index n = data.X.rows();
    const Eigen::Index d = data.X.cols();
    const double sqrt_d = std::sqrt(static_cast<double>(d));

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    double obj = logistic_objective(data, lambda, eta, w);

    Estimator best;
    best.loss = LossKind::Logistic;
    best.w = w;
    best.b = b;
    best.diag.objective = obj;
    best.diag.grad_norm = std::numeric_limits<double>::infinity();

    Eigen::VectorXd r(n);
    Eigen::VectorXd curv(n);
    Eigen::MatrixXd H(d + 1, d + 1);
    Eigen::MatrixXd Xs(n, d);
    for (std::size_t it = 0; it <= cfg.max_iter; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double yi = data.y[i];
            r[i] = -yi * sigmoid(-yi * eta[i]);
            const double s = sigmoid(eta[i]);
            curv[i] = s * (1.0 - s);
        }
        Eigen::VectorXd grad(d + 1);
        grad.head(d) = data.X.transpose() * r / sqrt_d + lambda * w;
        grad[d] = r.sum();
        const double gnorm = grad.norm();

        if (obj <= best.diag.objective) {
            best.w = w;
            best.b = b;
            best.diag.objective = obj;
            best.diag.grad_norm = gnorm;
            best.diag.iterations = it;
        }
        if (gnorm <= cfg.tol) {
            best.diag.converged = true;
            flag_divergence(best, eta, data, cfg, sqrt_d);
            return best;
        }
        if (it == cfg.max_iter) break;

        const Eigen::VectorXd sq = curv.array().sqrt();
        Xs = sq.asDiagonal() * data.X;
        H.setZero();
        H.topLeftCorner(d, d).selfadjointView<Eigen::Lower>().rankUpdate(Xs.transpose(), 1.0 / static_cast<double>(d));
        H.topLeftCorner(d, d).diagonal().array() += lambda;
        H.block(d, 0, 1, d) = (data.X.transpose() * curv).transpose() / sqrt_d;
        H(d, d) = curv.sum();
        const Eigen::LLT<Eigen::MatrixXd> llt(H.selfadjointView<Eigen::Lower>());
        if (llt.info() != Eigen::Success) break;
        const Eigen::VectorXd step = -llt.solve(grad);
        const double slope = grad.dot(step);
        if (!(slope < 0.0)) break;

        const Eigen::VectorXd dw = step.head(d);
        const Eigen::VectorXd deta = data.X * dw / sqrt_d + Eigen::VectorXd::Constant(n, step[d]);
        double t = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Eigen::VectorXd w_try = w + t * dw;
            const Eigen::VectorXd eta_try = eta + t * deta;
            const double obj_try = logistic_objective(data, lambda, eta_try, w_try);
            if (obj_try <= obj + 1e-4 * t * slope) {
                w = w_try;
                b += t * step[d];
                eta = eta_try;
                obj = obj_try;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) {
            // No representable decrease left: accept if the gradient is at the noise floor.
            const double floor = 1e3 * std::numeric_limits<double>::epsilon() * static_cast<double>(n);
            if (gnorm <= std::max(cfg.tol, floor)) {
                best.diag.converged = true;
                flag_divergence(best, eta, data, cfg, sqrt_d);
                return best;
            }
            break;
        }
    }
    flag_divergence(best, data.X * best.w / sqrt_d + Eigen::VectorXd::Constant(n, best.b), data, cfg, sqrt_d);
    std::ostringstream os;
    os << "fit_logistic: gradient norm " << best.diag.grad_norm << " above tol " << cfg.tol;
    throw FitError(os.str(), best);
}

EmpiricalErrors evaluate(const Estimator& est, const ProblemSpec& spec, const Dataset& data, std::size_t n_test,
                         std::uint64_t seed)
{
    const double sqrt_d = std::sqrt(static_cast<double>(data.X.cols()));
    EmpiricalErrors out;

    const Eigen::VectorXd eta = data.X * est.w / sqrt_d + Eigen::VectorXd::Constant(data.X.rows(), est.b);
    const Eigen::Index n = eta.size();
    if (n > 0) {
        double err = 0.0;
        double lss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int y = data.y[i] > 0.0 ? 1 : -1;
            err += sign_of(eta[i]) != data.y[i] ? 1.0 : 0.0;
            lss += loss(est.loss, y, eta[i]);
        }
        out.eps_t = err / static_cast<double>(n);
        out.eps_l = lss / static_cast<double>(n);
    }

    if (n_test > 0) {
        // w.x / sqrt(d) = c (mu_tilde.w) / sqrt(d) + sqrt(Delta) (|w| / sqrt(d)) zeta exactly in law.
        const double proj = data.mu.dot(est.w) / sqrt_d;
        const double scale = est.w.norm() / sqrt_d;
        const std::vector<double> deltas = sample(spec.variance, n_test, derive_seed(seed, 1));
        std::mt19937_64 rng(derive_seed(seed, 0));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        double err = 0.0;
        double mse = 0.0;
        for (std::size_t i = 0; i < n_test; ++i) {
            const double c = unif(rng) < spec.rho_plus ? 1.0 : -1.0;
            const double y = data.meta.label_mode == LabelMode::Class ? c : (unif(rng) < 0.5 ? 1.0 : -1.0);
            const double e = c * proj + est.b + std::sqrt(deltas[i]) * scale * normal(rng);
            err += sign_of(e) != y ? 1.0 : 0.0;
            mse += (y - e) * (y - e);
        }
        out.eps_g = err / static_cast<double>(n_test);
        out.mse_g = mse / static_cast<double>(n_test);
    }
    return out;
}

std::vector<ExperimentRow> run_experiment(const ProblemSpec& spec, const std::vector<double>& alphas,
                                          const ExperimentConfig& cfg)
{
    if (cfg.seeds.empty()) throw ConfigError("run_experiment: at least one seed is required");
    if (cfg.d < 1) throw ConfigError("run_experiment: d must be at least 1");
    for (double a : alphas) {
        if (!(a > 0.0)) throw ConfigError("run_experiment: alpha values must be positive");
    }

    struct Outcome {
        bool ok = false;
        EmpiricalErrors errors;
        std::string failure;
    };
    const std::size_t ns = cfg.seeds.size();
    std::vector<Outcome> outcomes(alphas.size() * ns);

    parallel_for(outcomes.size(), cfg.threads, [&](std::size_t task) {
        const std::size_t ai = task / ns;
        const std::uint64_t stream = derive_seed(cfg.seeds[task % ns], ai);
        const auto n = static_cast<std::size_t>(std::max(1.0, std::round(alphas[ai] * static_cast<double>(cfg.d))));
        Outcome& out = outcomes[task];
        try {
            const Dataset data = sample_dataset(spec, n, cfg.d, derive_seed(stream, 0), cfg.label_mode);
            const Estimator est = cfg.fitter == Fitter::RidgeSquare ? fit_ridge_square(data, spec.lambda)
                                                                    : fit_logistic(data, spec.lambda, cfg.logistic);
            out.errors = evaluate(est, spec, data, cfg.n_test, derive_seed(stream, 1));
            out.ok = true;
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "seed " << cfg.seeds[task % ns] << ": " << e.what();
            out.failure = os.str();
        }
    });

    std::vector<ExperimentRow> rows(alphas.size());
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        ExperimentRow& row = rows[ai];
        row.alpha = alphas[ai];
        std::vector<double> g, t, l, m;
        for (std::size_t s = 0; s < ns; ++s) {
            const Outcome& o = outcomes[ai * ns + s];
            if (!o.ok) {
                row.failures.push_back(o.failure);
                continue;
            }
            g.push_back(o.errors.eps_g);
            t.push_back(o.errors.eps_t);
            l.push_back(o.errors.eps_l);
            m.push_back(o.errors.mse_g);
        }
        row.ok = g.size();
        row.eps_g = mean_se(g);
        row.eps_t = mean_se(t);
        row.eps_l = mean_se(l);
        row.mse_g = mean_se(m);
    }
    return rows;
}

} // namespace superstat

#include "superstat/cli/runner.hpp"

#include "superstat/errors.hpp"
#include "superstat/metrics.hpp"
#include "superstat/parallel.hpp"
#include "superstat/separability.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <optional>

namespace superstat::cli {

namespace {

VarianceModel single_model(const RunConfig& cfg)
{
    const auto models = cfg.variance.models();
    if (models.size() != 1) throw ConfigError(std::string(to_string(cfg.command)) + " takes a single variance model");
    return models.front();
}

double single_lambda(const RunConfig& cfg)
{
    if (cfg.lambda.size() != 1) throw ConfigError(std::string(to_string(cfg.command)) + " takes a single lambda");
    return cfg.lambda.front();
}

ProblemSpec make_spec(const RunConfig& cfg, const VarianceModel& model, double alpha, double lambda)
{
    ProblemSpec spec;
    spec.alpha = alpha;
    spec.lambda = lambda;
    spec.rho_plus = cfg.rho_plus;
    spec.loss = cfg.loss;
    spec.variance = model;
    spec.validate();
    return spec;
}

Cell opt(const std::optional<double>& v)
{
    return v ? Cell{*v} : Cell{};
}

Cell flag(bool b)
{
    return Cell{b ? 1.0 : 0.0};
}

struct TheoryPoint {
    SEResult se;
    ErrorReport report;
};

TheoryPoint theory_point(const ProblemSpec& spec, const SolverConfig& scfg, const SEContext& ctx, bool bayes)
{
    TheoryPoint t;
    t.se = solve_se(spec, scfg, ctx);
    const ProblemSpec used = [&] {
        ProblemSpec s = spec;
        s.lambda = t.se.lambda_used;
        return s;
    }();
    t.report = error_report(t.se, used, scfg, ctx, bayes);
    return t;
}

RunOutput sweep_alpha(const RunConfig& cfg)
{
    const VarianceModel model = single_model(cfg);
    const double lambda = single_lambda(cfg);
    const SolverConfig scfg = cfg.solver_config();
    const SEContext ctx = SEContext::make(make_spec(cfg, model, 1.0, lambda), scfg);

    std::vector<TheoryPoint> theory(cfg.alpha.size());
    parallel_for(cfg.alpha.size(), cfg.threads, [&](std::size_t i) {
        theory[i] = theory_point(make_spec(cfg, model, cfg.alpha[i], lambda), scfg, ctx, cfg.bayes);
    });

    std::vector<ExperimentRow> emp;
    if (cfg.d > 0) emp = run_experiment(make_spec(cfg, model, 1.0, lambda), cfg.alpha, cfg.experiment_config());

    RunOutput out;
    out.table.columns = {"alpha",          "eps_g_theory",   "eps_t_theory",   "eps_l_theory",
                         "eps_bayes",      "eps_g_emp_mean", "eps_g_emp_se",   "eps_t_emp_mean",
                         "eps_t_emp_se",   "eps_l_emp_mean", "eps_l_emp_se",   "converged"};
    for (std::size_t i = 0; i < cfg.alpha.size(); ++i) {
        const TheoryPoint& t = theory[i];
        std::vector<Cell> row{cfg.alpha[i], t.report.eps_g, t.report.eps_t, t.report.eps_l, opt(t.report.eps_bayes)};
        if (cfg.d > 0) {
            const ExperimentRow& e = emp[i];
            row.insert(row.end(), {e.eps_g.mean, e.eps_g.se, e.eps_t.mean, e.eps_t.se, e.eps_l.mean, e.eps_l.se});
            for (const auto& f : e.failures) std::cerr << "alpha " << cfg.alpha[i] << ": " << f << '\n';
        } else {
            row.insert(row.end(), 6, Cell{});
        }
        row.push_back(flag(t.se.converged));
        out.all_converged = out.all_converged && t.se.converged && (cfg.d == 0 || emp[i].failures.empty());
        out.table.add_row(std::move(row));
    }
    return out;
}

RunOutput separability(const RunConfig& cfg)
{
    const auto models = cfg.variance.models();
    SeparabilityConfig sc;
    sc.gamma_max = cfg.gamma_max;
    sc.theta_grid = cfg.theta_grid;
    sc.gamma_grid = cfg.gamma_grid;
    if (cfg.delta_method == "mc") {
        sc.delta_method = MonteCarlo{cfg.mc_samples, cfg.seed};
    } else {
        sc.delta_method = Quadrature{cfg.quad_tol};
    }

    std::vector<SeparabilityResult> res(models.size());
    parallel_for(models.size(), cfg.threads,
                 [&](std::size_t i) { res[i] = alpha_star(models[i], cfg.rho_plus, sc); });

    RunOutput out;
    out.table.columns = {"kind",       "delta",      "a",          "c",        "r",        "rho_plus",
                         "alpha_star", "theta_star", "gamma_star", "S_at_opt", "converged"};
    for (std::size_t i = 0; i < models.size(); ++i) {
        std::vector<Cell> row;
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, PointMass>) {
                    row = {std::string("point_mass"), m.delta, Cell{}, Cell{}, Cell{}};
                } else if constexpr (std::is_same_v<T, InverseGamma>) {
                    row = {std::string("inverse_gamma"), Cell{}, m.a, m.c, Cell{}};
                } else {
                    row = {std::string("contaminated"), Cell{}, m.a, m.c, m.r};
                }
            },
            models[i].variant());
        const SeparabilityResult& s = res[i];
        row.insert(row.end(), {cfg.rho_plus, s.alpha_star, s.theta_star, s.gamma_star, s.S_at_opt});
        row.push_back(flag(s.converged));
        out.all_converged = out.all_converged && s.converged;
        out.table.add_row(std::move(row));
    }
    return out;
}

RunOutput bayes(const RunConfig& cfg)
{
    const VarianceModel model = single_model(cfg);
    RunOutput out;
    out.table.columns = {"alpha", "eps_bayes", "eps_bayes_known_variance"};
    std::vector<double> vals(cfg.alpha.size());
    std::vector<double> known(cfg.alpha.size());
    parallel_for(cfg.alpha.size(), cfg.threads, [&](std::size_t i) {
        vals[i] = bayes_optimal_error(model, cfg.rho_plus, cfg.alpha[i], Quadrature{cfg.quad_tol});
        known[i] = bayes_error_known_variance(model, cfg.rho_plus, cfg.alpha[i], Quadrature{cfg.quad_tol});
    });
    for (std::size_t i = 0; i < vals.size(); ++i) out.table.add_row({cfg.alpha[i], vals[i], known[i]});
    return out;
}

RunOutput simulate(const RunConfig& cfg)
{
    if (cfg.d == 0) throw ConfigError("simulate requires d > 0");
    const VarianceModel model = single_model(cfg);
    const double lambda = single_lambda(cfg);
    const auto rows = run_experiment(make_spec(cfg, model, 1.0, lambda), cfg.alpha, cfg.experiment_config());

    RunOutput out;
    out.table.columns = {"alpha",          "eps_g_emp_mean", "eps_g_emp_se",   "eps_t_emp_mean",
                         "eps_t_emp_se",   "eps_l_emp_mean", "eps_l_emp_se",   "mse_g_emp_mean",
                         "mse_g_emp_se",   "n_ok",           "n_failed"};
    for (const auto& e : rows) {
        out.table.add_row({e.alpha, e.eps_g.mean, e.eps_g.se, e.eps_t.mean, e.eps_t.se, e.eps_l.mean, e.eps_l.se,
                           e.mse_g.mean, e.mse_g.se, static_cast<double>(e.ok),
                           static_cast<double>(e.failures.size())});
        for (const auto& f : e.failures) std::cerr << "alpha " << e.alpha << ": " << f << '\n';
        out.all_converged = out.all_converged && e.failures.empty();
    }
    return out;
}

RunOutput random_labels(const RunConfig& cfg)
{
    if (cfg.loss != LossKind::Square) throw ConfigError("random-labels supports loss = square only");
    const VarianceModel model = single_model(cfg);
    const double lambda = single_lambda(cfg);
    const SolverConfig scfg = cfg.solver_config();
    ProblemSpec base = make_spec(cfg, model, 1.0, lambda);
    base.rho_plus = 0.5;
    const SEContext ctx = SEContext::make(base, scfg);

    struct Point {
        RLResult rl;
        double eps_t = NAN;
        double eps_l = NAN;
        double mse = NAN;
    };
    std::vector<Point> pts(cfg.alpha.size());
    parallel_for(cfg.alpha.size(), cfg.threads, [&](std::size_t i) {
        Point& p = pts[i];
        p.rl = solve_rl_square(cfg.alpha[i], lambda, ctx.delta, scfg);
        if (!p.rl.converged) return;
        OrderParams op;
        op.m_plus = op.m_minus = op.b = 0.0;
        op.q = p.rl.q;
        op.v = p.rl.v;
        ProblemSpec spec = base;
        spec.alpha = cfg.alpha[i];
        const TrainingMetrics tm = training_metrics(op, spec, scfg, ctx);
        p.eps_t = tm.eps_t;
        p.eps_l = rl_training_loss_theory(p.rl);
        p.mse = rl_mse(p.rl.q, model);
    });

    std::vector<ExperimentRow> emp;
    if (cfg.d > 0) {
        ExperimentConfig ecfg = cfg.experiment_config();
        ecfg.label_mode = LabelMode::Random;
        emp = run_experiment(make_spec(cfg, model, 1.0, lambda), cfg.alpha, ecfg);
    }

    RunOutput out;
    out.table.columns = {"alpha",        "v",           "q",
                         "eps_l_theory", "eps_l_universal", "eps_t_theory",
                         "mse_theory",   "eps_l_emp_mean", "eps_l_emp_se",
                         "eps_t_emp_mean", "eps_t_emp_se", "mse_emp_mean",
                         "converged"};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& p = pts[i];
        std::vector<Cell> row{cfg.alpha[i], p.rl.v, p.rl.q, p.eps_l, rl_training_loss(cfg.alpha[i]), p.eps_t, p.mse};
        if (cfg.d > 0) {
            const ExperimentRow& e = emp[i];
            row.insert(row.end(), {e.eps_l.mean, e.eps_l.se, e.eps_t.mean, e.eps_t.se, e.mse_g.mean});
            for (const auto& f : e.failures) std::cerr << "alpha " << cfg.alpha[i] << ": " << f << '\n';
            out.all_converged = out.all_converged && e.failures.empty();
        } else {
            row.insert(row.end(), 5, Cell{});
        }
        row.push_back(flag(p.rl.converged));
        out.all_converged = out.all_converged && p.rl.converged;
        out.table.add_row(std::move(row));
    }
    return out;
}

RunOutput optimal_lambda(const RunConfig& cfg)
{
    const VarianceModel model = single_model(cfg);
    const SolverConfig scfg = cfg.solver_config();
    const SEContext ctx = SEContext::make(make_spec(cfg, model, 1.0, cfg.lambda.front()), scfg);
    const std::size_t nl = cfg.lambda.size();

    std::vector<TheoryPoint> pts(cfg.alpha.size() * nl);
    parallel_for(pts.size(), cfg.threads, [&](std::size_t k) {
        pts[k] = theory_point(make_spec(cfg, model, cfg.alpha[k / nl], cfg.lambda[k % nl]), scfg, ctx, false);
    });

    RunOutput out;
    out.table.columns = {"alpha", "lambda", "eps_g_theory", "eps_t_theory", "eps_l_theory", "converged", "optimal"};
    for (std::size_t ai = 0; ai < cfg.alpha.size(); ++ai) {
        std::size_t best = 0;
        for (std::size_t li = 1; li < nl; ++li) {
            if (pts[ai * nl + li].report.eps_g < pts[ai * nl + best].report.eps_g) best = li;
        }
        for (std::size_t li = 0; li < nl; ++li) {
            const TheoryPoint& t = pts[ai * nl + li];
            out.table.add_row({cfg.alpha[ai], cfg.lambda[li], t.report.eps_g, t.report.eps_t, t.report.eps_l,
                               flag(t.se.converged), flag(li == best)});
            out.all_converged = out.all_converged && t.se.converged;
        }
    }
    return out;
}

} // namespace

RunOutput run(const RunConfig& cfg)
{
    if (cfg.alpha.empty() || cfg.lambda.empty()) throw ConfigError("alpha and lambda grids must be non-empty");
    switch (cfg.command) {
    case Command::SweepAlpha: return sweep_alpha(cfg);
    case Command::Separability: return separability(cfg);
    case Command::Bayes: return bayes(cfg);
    case Command::Simulate: return simulate(cfg);
    case Command::RandomLabels: return random_labels(cfg);
    case Command::OptimalLambda: return optimal_lambda(cfg);
    }
    throw ConfigError("unknown command");
}

int run_and_write(const RunConfig& cfg)
{
    RunOutput out;
    try {
        out = run(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNotConverged;
    }
    try {
        if (cfg.out.empty() || cfg.out == "-") {
            std::cout << to_csv(out.table);
        } else {
            write_csv(out.table, cfg.out);
        }
    } catch (const std::exception& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIoError;
    }
    if (!out.all_converged) {
        std::cerr << "warning: some points did not converge (see the converged column)\n";
        return kNotConverged;
    }
    return kOk;
}

} // namespace superstat::cli

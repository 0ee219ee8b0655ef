#include "superstat/cli/config.hpp"

#include "superstat/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace superstat::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ConfigError("'" + key + "': not a finite number: '" + text + "'");
    }
    return v;
}

std::size_t to_count(const std::string& key, const std::string& text)
{
    const double v = to_double(key, text);
    if (v < 0.0 || v != std::floor(v) || v > 1e15) throw ConfigError("'" + key + "': expected a non-negative integer");
    return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& text)
{
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("'" + key + "': expected true or false");
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::vector<double> grid_for(const std::string& key, const std::string& text)
{
    try {
        return parse_grid(text);
    } catch (const ConfigError& e) {
        throw ConfigError("'" + key + "': " + e.what());
    }
}

} // namespace

Command parse_command(const std::string& name)
{
    if (name == "sweep-alpha") return Command::SweepAlpha;
    if (name == "separability") return Command::Separability;
    if (name == "bayes") return Command::Bayes;
    if (name == "simulate") return Command::Simulate;
    if (name == "random-labels") return Command::RandomLabels;
    if (name == "optimal-lambda") return Command::OptimalLambda;
    throw ConfigError("unknown command '" + name + "'");
}

const char* to_string(Command c) noexcept
{
    switch (c) {
    case Command::SweepAlpha: return "sweep-alpha";
    case Command::Separability: return "separability";
    case Command::Bayes: return "bayes";
    case Command::Simulate: return "simulate";
    case Command::RandomLabels: return "random-labels";
    case Command::OptimalLambda: return "optimal-lambda";
    }
    return "?";
}

std::vector<VarianceModel> VarianceGrid::models() const
{
    std::vector<VarianceModel> out;
    if (kind == "point_mass") {
        for (double dl : delta) out.push_back(VarianceModel::point_mass(dl));
    } else if (kind == "inverse_gamma") {
        for (double av : a)
            for (double cv : c) out.push_back(VarianceModel::inverse_gamma(av, cv));
    } else if (kind == "unit_covariance") {
        for (double av : a) out.push_back(VarianceModel::unit_covariance(av));
    } else if (kind == "contaminated") {
        for (double rv : r)
            for (double av : a)
                for (double cv : c) out.push_back(VarianceModel::contaminated(rv, av, cv));
    } else {
        throw ConfigError("unknown variance kind '" + kind +
                          "' (expected point_mass, inverse_gamma, unit_covariance or contaminated)");
    }
    return out;
}

SolverConfig RunConfig::solver_config() const
{
    SolverConfig s;
    s.damping = damping;
    s.tol = tol;
    s.max_iter = max_iter;
    s.zeta_quadrature_nodes = zeta_nodes;
    if (delta_method == "mc") {
        s.delta_method = MonteCarlo{mc_samples, seed};
    } else if (delta_method == "quadrature") {
        s.delta_method = Quadrature{quad_tol};
    } else {
        throw ConfigError("delta_method must be mc or quadrature");
    }
    return s;
}

ExperimentConfig RunConfig::experiment_config() const
{
    ExperimentConfig e;
    e.d = d;
    e.seeds = seed_list();
    e.fitter = loss == LossKind::Square ? Fitter::RidgeSquare : Fitter::Logistic;
    e.label_mode = label_mode;
    e.n_test = n_test;
    e.threads = threads;
    e.logistic.tol = fit_tol;
    return e;
}

std::vector<std::uint64_t> RunConfig::seed_list() const
{
    std::vector<std::uint64_t> out(seeds);
    for (std::size_t i = 0; i < seeds; ++i) out[i] = seed + i;
    return out;
}

std::map<std::string, std::string> parse_kv(const std::string& text)
{
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> read_kv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_kv(os.str());
}

std::vector<double> parse_grid(const std::string& text)
{
    const std::string t = trim(text);
    for (const char* fn : {"linspace", "logspace"}) {
        const std::string prefix = std::string(fn) + "(";
        if (t.rfind(prefix, 0) != 0) continue;
        if (t.back() != ')') throw ConfigError("unterminated " + std::string(fn) + "(...)");
        const auto args = split(t.substr(prefix.size(), t.size() - prefix.size() - 1), ',');
        if (args.size() != 3) throw ConfigError(std::string(fn) + " takes (start, stop, count)");
        const double lo = to_double(fn, args[0]);
        const double hi = to_double(fn, args[1]);
        const std::size_t n = to_count(fn, args[2]);
        if (n < 1) throw ConfigError(std::string(fn) + ": count must be at least 1");
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
            out[i] = std::string(fn) == "logspace" ? std::pow(10.0, x) : x;
        }
        return out;
    }
    std::vector<double> out;
    for (const auto& part : split(t, ',')) out.push_back(to_double("list", part));
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

void apply_overrides(RunConfig& cfg, const std::map<std::string, std::string>& kv)
{
    for (const auto& [key, value] : kv) {
        if (key == "command") {
            cfg.command = parse_command(value);
        } else if (key == "loss") {
            cfg.loss = parse_loss(value.c_str());
        } else if (key == "lambda") {
            cfg.lambda = grid_for(key, value);
        } else if (key == "rho_plus") {
            cfg.rho_plus = to_double(key, value);
        } else if (key == "kind") {
            cfg.variance.kind = value;
        } else if (key == "delta") {
            cfg.variance.delta = grid_for(key, value);
        } else if (key == "a") {
            cfg.variance.a = grid_for(key, value);
        } else if (key == "c") {
            cfg.variance.c = grid_for(key, value);
        } else if (key == "r") {
            cfg.variance.r = grid_for(key, value);
        } else if (key == "alpha") {
            cfg.alpha = grid_for(key, value);
        } else if (key == "tol") {
            cfg.tol = to_double(key, value);
        } else if (key == "max_iter") {
            cfg.max_iter = to_count(key, value);
        } else if (key == "damping") {
            cfg.damping = to_double(key, value);
        } else if (key == "zeta_nodes") {
            cfg.zeta_nodes = to_count(key, value);
        } else if (key == "delta_method") {
            if (value != "mc" && value != "quadrature") throw ConfigError("delta_method must be mc or quadrature");
            cfg.delta_method = value;
        } else if (key == "mc_samples") {
            cfg.mc_samples = to_count(key, value);
        } else if (key == "quad_tol") {
            cfg.quad_tol = to_double(key, value);
        } else if (key == "seed") {
            cfg.seed = to_count(key, value);
        } else if (key == "bayes") {
            cfg.bayes = to_bool(key, value);
        } else if (key == "d") {
            cfg.d = to_count(key, value);
        } else if (key == "seeds") {
            cfg.seeds = to_count(key, value);
        } else if (key == "n_test") {
            cfg.n_test = to_count(key, value);
        } else if (key == "label_mode") {
            if (value == "class") {
                cfg.label_mode = LabelMode::Class;
            } else if (value == "random") {
                cfg.label_mode = LabelMode::Random;
            } else {
                throw ConfigError("label_mode must be class or random");
            }
        } else if (key == "fit_tol") {
            cfg.fit_tol = to_double(key, value);
        } else if (key == "gamma_max") {
            cfg.gamma_max = to_double(key, value);
        } else if (key == "theta_grid") {
            cfg.theta_grid = to_count(key, value);
        } else if (key == "gamma_grid") {
            cfg.gamma_grid = to_count(key, value);
        } else if (key == "out") {
            cfg.out = value;
        } else if (key == "threads") {
            cfg.threads = std::max<std::size_t>(1, to_count(key, value));
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

} // namespace superstat::cli

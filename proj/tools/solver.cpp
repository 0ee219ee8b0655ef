#include "superstat/cli/runner.hpp"
#include "superstat/errors.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv)
{
    using namespace superstat::cli;

    CLI::App app{"State evolution and finite-size experiments for superstatistical two-cloud classification"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::vector<std::string> overrides;

    const char* commands[] = {"sweep-alpha", "separability", "bayes", "simulate", "random-labels", "optimal-lambda"};
    for (const char* name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config,-c", config_path, "key = value config file")->required();
        sub->add_option("--out,-o", out_path, "CSV output path ('-' for stdout)");
        sub->add_option("--seed", seed, "root seed");
        sub->add_option("--threads,-j", threads, "worker threads (default: $SOLVER_THREADS or 1)");
        sub->add_option("--set", overrides, "override a config key, e.g. --set lambda=1e-4");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    RunConfig cfg;
    try {
        cfg.command = parse_command(command);
        if (const char* env = std::getenv("SOLVER_THREADS")) apply_overrides(cfg, std::map<std::string, std::string>{{"threads", env}});
        apply_overrides(cfg, read_kv_file(config_path));
        cfg.command = parse_command(command);
        std::string extra;
        for (const auto& kv : overrides) extra += kv + "\n";
        apply_overrides(cfg, parse_kv(extra));
        auto* sub = app.get_subcommands().front();
        if (sub->count("--seed")) cfg.seed = seed;
        if (sub->count("--threads")) cfg.threads = std::max<std::size_t>(1, threads);
        if (sub->count("--out")) cfg.out = out_path;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    return run_and_write(cfg);
}

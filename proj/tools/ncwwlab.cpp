#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "ncwwlab/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ncwwlab: scenario-driven noncommutative weighted ergodic experiments"};
    app.require_subcommand(1);

    std::string scenario_path;
    ncwwlab::Overrides ov;
    std::uint64_t seed = 0, n_max = 0;
    int threads = 0;
    std::string out_dir;

    auto* run = app.add_subcommand("run", "run all experiments of a scenario");
    run->add_option("scenario", scenario_path, "scenario json file")->required();
    run->add_option("--out", out_dir, "output directory (default: out)");
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--n-max", n_max, "override the scenario horizon");
    run->add_option("--threads", threads, "experiment-level workers (env NCWWLAB_THREADS)");
    run->add_flag("--strict", ov.strict, "exit nonzero unless every stream verdict is decayed");

    auto* describe = app.add_subcommand("describe", "print the resolved experiment plan");
    describe->add_option("scenario", scenario_path, "scenario json file")->required();
    describe->add_option("--seed", seed, "override the scenario seed");
    describe->add_option("--n-max", n_max, "override the scenario horizon");

    CLI11_PARSE(app, argc, argv);

    auto fill_overrides = [&](const CLI::App* cmd) {
        auto passed = [&](const std::string& name) {
            const CLI::Option* opt = cmd->get_option_no_throw(name);
            return opt != nullptr && opt->count() > 0;
        };
        if (passed("--seed")) ov.seed = seed;
        if (passed("--n-max")) ov.n_max = n_max;
        if (passed("--threads")) ov.threads = threads;
        if (passed("--out")) ov.out_dir = out_dir;
    };

    try {
        if (run->parsed()) {
            fill_overrides(run);
            const auto res = ncwwlab::run_scenario_file(scenario_path, ov);
            std::cout << "wrote " << res.rows_path << " and " << res.summary_path << "\n";
            return res.exit_code;
        }
        fill_overrides(describe);
        std::cout << ncwwlab::describe_scenario_file(scenario_path, ov);
        return 0;
    } catch (const ncwwlab::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const ncwwlab::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 4;
    }
}

// rdde: run Lyapunov spectrum experiments for random delay equations.

#include "rdde/errors.hpp"
#include "rdde/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::int64_t> seed;
    int threads = 0;
    bool strict = false;
};

rdde::ExperimentConfig load(const Options& o) {
    rdde::ExperimentConfig c = rdde::load_config(o.config);
    if (o.seed) {
        if (*o.seed < 0) throw rdde::ConfigError("--seed: must be >= 0");
        c.seed = static_cast<std::uint64_t>(*o.seed);
        c.driver.seed = c.seed;
    }
    if (!o.out.empty()) c.out_dir = o.out;
    c.validate();
    return c;
}

int cmd_run(const Options& o) {
    const rdde::ExperimentConfig c = load(o);
    rdde::set_threads(o.threads);
    const rdde::RunManifest m = rdde::run_experiment(c, c.out_dir);
    for (const auto& f : m.flags) std::cerr << "flag: " << f << '\n';
    std::cout << "config_hash " << m.config_hash << '\n';
    std::cout << "wrote " << m.outputs.size() << " files to " << c.out_dir << '\n';
    std::cout << "status "
              << (m.status == rdde::RunStatus::ok                  ? "ok"
                  : m.status == rdde::RunStatus::numerical_failure ? "numerical_failure"
                                                                   : "acceptance_failed")
              << '\n';
    return rdde::exit_code(m.status, o.strict);
}

int cmd_validate(const Options& o) {
    const rdde::ExperimentConfig c = load(o);
    std::cout << "ok " << rdde::to_string(c.experiment) << " config_hash " << rdde::config_hash(c) << '\n';
    if (c.driver.outside_standard_setting())
        std::cout << "note: N = 1 is outside the N >= 2 setting\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lyapunov spectra and Oseledets spaces of random linear delay equations"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "override the config seed");
    };
    CLI::App* run = app.add_subcommand("run", "run an experiment and write reports");
    add_common(run);
    run->add_option("--out", o.out, "output directory (overrides output.dir)");
    run->add_option("--threads", o.threads, "OpenMP threads")->check(CLI::NonNegativeNumber);
    run->add_flag("--strict", o.strict, "exit 3 when compare/oracle acceptance fails");
    CLI::App* validate = app.add_subcommand("validate", "check a config and print its hash");
    add_common(validate);
    app.add_subcommand("version", "print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand("version")) {
            std::cout << "rdde " << rdde::kVersion << '\n';
            return 0;
        }
        if (app.got_subcommand("validate")) return cmd_validate(o);
        return cmd_run(o);
    } catch (const rdde::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const rdde::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const rdde::WindowError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
}

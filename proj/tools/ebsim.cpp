#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ebsim/app.hpp"

namespace {

enum ExitCode { kOk = 0, kRuntimeError = 1, kConfigError = 2, kUsageError = 64 };

int run_command(const std::string& config_path, const ebsim::app::RunOptions& opts) {
    ebsim::app::Job job;
    try {
        job = ebsim::app::prepare(ebsim::app::load_config(config_path), opts);
    } catch (const ebsim::ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return kConfigError;
    } catch (const ebsim::Error& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return kConfigError;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        const auto summary = ebsim::app::execute(job);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << job.experiment << " -> " << job.out_dir.generic_string() << " (" << secs << " s)\n"
                  << summary.dump(2) << "\n";
    } catch (const std::exception& e) {
        std::cerr << job.experiment << ": " << e.what() << "\n"
                  << "partial outputs left in " << job.out_dir.generic_string() << "\n";
        return kRuntimeError;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Event-by-event simulation of interference and EPRB experiments"};
    cli.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    unsigned threads = 1;

    auto* run = cli.add_subcommand("run", "Run the experiment described by a config file or a manifest.json");
    run->add_option("config", config_path, "Config file (.toml subset) or a previous run's manifest.json")
        ->required();
    run->add_option("--seed", seed, "Override the config's seed");
    run->add_option("--out", out_dir, "Override the config's output directory");
    run->add_option("--threads", threads, "Worker threads for independent points")->check(CLI::Range(1u, 1024u));

    cli.add_subcommand("list", "List experiments and their parameters with defaults");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    if (cli.got_subcommand("list")) {
        std::cout << ebsim::app::list_text();
        return kOk;
    }
    ebsim::app::RunOptions opts;
    opts.seed = seed;
    opts.out_dir = out_dir;
    opts.threads = threads;
    return run_command(config_path, opts);
}

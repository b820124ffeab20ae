// ratelab command-line front door. Links only the C API.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "ratelab.h"

namespace {

constexpr int exit_pass = 0;
constexpr int exit_property_failure = 1;
constexpr int exit_usage = 2;

int run_subcommand(const std::string& verb, const std::string& config_path,
                   const rl_run_options& options, bool quiet) {
    rl_config* config = nullptr;
    rl_status status = rl_config_load(config_path.c_str(), &config);
    if (status != RL_OK) {
        std::fprintf(stderr, "ratelab: %s error: %s\n", rl_status_name(status), rl_last_error());
        return exit_usage;
    }
    rl_report* report = nullptr;
    status = rl_run(config, verb.c_str(), &options, &report);
    rl_config_free(config);
    if (status != RL_OK) {
        std::fprintf(stderr, "ratelab: %s error: %s\n", rl_status_name(status), rl_last_error());
        return exit_usage;
    }
    if (!quiet) std::fputs(rl_report_text(report), stdout);
    const bool passed = rl_report_passed(report) != 0;
    rl_report_free(report);
    return passed ? exit_pass : exit_property_failure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ratelab: posterior contraction under misspecification, at desk scale"};
    app.set_version_flag("--version", rl_version());
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string timestamp;
    std::uint64_t seed = 0;
    std::uint64_t replications = 0;
    unsigned n_ref = 0;
    unsigned threads = 0;
    bool exact = false;
    bool monte_carlo = false;
    bool quiet = false;

    bool has_seed = false, has_replications = false, has_n = false, has_timestamp = false;

    const char* verbs[] = {"project", "cover",      "simulate", "verify-identity",
                           "verify-decay", "conditions", "shells"};
    const char* descriptions[] = {
        "KL projection of the truth onto the family",
        "build and certify an alpha-covering of the complement set",
        "replicated contraction experiment",
        "check the one-step ratio identity and its alpha-power form",
        "check supermartingale decay over certified cover elements",
        "evaluate the sufficient conditions for contraction",
        "shell-decomposed posterior masses",
    };
    for (std::size_t i = 0; i < std::size(verbs); ++i) {
        CLI::App* sub = app.add_subcommand(verbs[i], descriptions[i]);
        sub->add_option("--config", config_path, "path to a JSON config")->required();
        sub->add_option("--seed", seed, "override the config master_seed")
            ->each([&](const std::string&) { has_seed = true; });
        sub->add_option("--out", out_dir, "directory for report files");
        sub->add_option("--replications", replications, "override the replication count")
            ->each([&](const std::string&) { has_replications = true; });
        sub->add_option("--n", n_ref, "reference n for cover/conditions/verify-*")
            ->each([&](const std::string&) { has_n = true; });
        sub->add_option("--threads", threads, "worker threads (0 = hardware)");
        sub->add_option("--timestamp", timestamp,
                        "pin the manifest timestamp (reruns become byte-identical)")
            ->each([&](const std::string&) { has_timestamp = true; });
        sub->add_flag("--quiet", quiet, "suppress the report on stdout");
        if (std::string(verbs[i]) == "verify-decay") {
            sub->add_flag("--exact", exact, "exact enumeration mode");
            sub->add_flag("--monte-carlo", monte_carlo, "Monte Carlo mode");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    if (exact && monte_carlo) {
        std::fprintf(stderr, "ratelab: --exact and --monte-carlo are mutually exclusive\n");
        return exit_usage;
    }

    rl_run_options options{};
    options.has_seed = has_seed ? 1 : 0;
    options.seed = seed;
    options.has_replications = has_replications ? 1 : 0;
    options.replications = replications;
    options.mode = exact ? 1 : (monte_carlo ? 2 : 0);
    options.has_n = has_n ? 1 : 0;
    options.n = n_ref;
    options.out_dir = out_dir.empty() ? nullptr : out_dir.c_str();
    options.timestamp = has_timestamp ? timestamp.c_str() : nullptr;
    options.threads = threads;

    const std::string verb = app.get_subcommands().front()->get_name();
    return run_subcommand(verb, config_path, options, quiet);
}

// Command-line front end. Everything goes through the C API.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mimofb/mimofb.h"

namespace {

struct RunOptions {
    std::string config;
    std::vector<std::string> sets;
    std::optional<unsigned long long> seed;
    std::optional<unsigned long> threads;
    std::string output;
    std::string model;
    std::string codebook;
    bool quiet = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o, bool artifacts)
{
    cmd->add_option("-c,--config", o.config, "experiment config file (TOML-style)");
    cmd->add_option("--set", o.sets, "override a config field, e.g. --set channel.t_mag=0.5");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--threads", o.threads, "worker threads (default: $MIMOFB_THREADS or 1)")->check(CLI::PositiveNumber);
    cmd->add_option("-o,--output", o.output, "CSV output path (default: stdout)");
    if (artifacts) {
        cmd->add_option("--model", o.model, "model file path or pattern");
        cmd->add_option("--codebook", o.codebook, "codebook file path or pattern");
    }
    cmd->add_flag("-q,--quiet", o.quiet, "suppress progress output");
}

void print_line(const char* line, void*)
{
    std::fprintf(stderr, "%s\n", line);
    std::fflush(stderr);
}

int report(mimofb_status s)
{
    if (s != MIMOFB_OK)
        std::fprintf(stderr, "error: %s\n", mimofb_last_error());
    return mimofb_exit_code(s);
}

int run_scenario(const char* scenario, const RunOptions& o)
{
    std::vector<std::string> overrides;
    overrides.push_back(std::string("scenario=") + scenario);
    // Flags override file values; --set entries come last so they win.
    if (o.seed)
        overrides.push_back("seed=" + std::to_string(*o.seed));
    std::optional<unsigned long> threads = o.threads;
    const char* env = std::getenv("MIMOFB_THREADS");
    if (!threads && env) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end == env || *end != '\0' || v == 0) {
            std::fprintf(stderr, "error: MIMOFB_THREADS must be a positive integer\n");
            return 2;
        }
        threads = v;
    }
    if (threads)
        overrides.push_back("threads=" + std::to_string(*threads));
    if (!o.output.empty())
        overrides.push_back("output=\"" + o.output + "\"");
    if (!o.model.empty())
        overrides.push_back("artifacts.model=\"" + o.model + "\"");
    if (!o.codebook.empty())
        overrides.push_back("artifacts.codebook=\"" + o.codebook + "\"");
    overrides.insert(overrides.end(), o.sets.begin(), o.sets.end());

    std::vector<const char*> argv;
    for (const auto& s : overrides)
        argv.push_back(s.c_str());
    mimofb_log_fn log = o.quiet ? nullptr : print_line;
    if (o.config.empty())
        return report(mimofb_run_config_text("", argv.data(), argv.size(), log, nullptr));
    return report(mimofb_run_config_file(o.config.c_str(), argv.data(), argv.size(), log, nullptr));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Limited-feedback MIMO beamforming: deep-learned feedback vs LMMSE codebook baselines"};
    app.set_version_flag("--version", mimofb_version());
    app.require_subcommand(1);

    struct Command {
        const char* name;
        const char* scenario;
        const char* help;
        bool artifacts;
        RunOptions opts;
    };
    std::vector<Command> commands{
        {"train", "train", "train the feedback networks and save a model per sweep point", true, {}},
        {"design-codebook", "design-codebook", "design a Lloyd codebook per sweep point", true, {}},
        {"eval-gain", "fig2-gain", "normalized beamforming gain per scheme", true, {}},
        {"eval-ser", "fig3-ser", "QPSK symbol error rate per scheme and data SNR", true, {}},
        {"bench-time", "table1-timing", "median receiver-side online time per scheme", true, {}},
        {"smoke", "smoke", "reduced end-to-end run: train, design, evaluate", false, {}},
    };
    std::vector<CLI::App*> subs;
    for (auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_run_options(sub, c.opts, c.artifacts);
        subs.push_back(sub);
    }

    std::string artifact;
    CLI::App* describe = app.add_subcommand("describe", "summarize a model or codebook file");
    describe->add_option("path", artifact, "artifact file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (describe->parsed()) {
        char* summary = nullptr;
        const mimofb_status s = mimofb_describe(artifact.c_str(), &summary);
        if (s == MIMOFB_OK) {
            std::fputs(summary, stdout);
            mimofb_string_free(summary);
        }
        return report(s);
    }
    for (std::size_t i = 0; i < commands.size(); ++i)
        if (subs[i]->parsed())
            return run_scenario(commands[i].scenario, commands[i].opts);
    return 2;
}

// iqsense: command-line front end for the sensing experiments.
//
// Exit codes: 0 success, 1 --verify check failed, 2 usage or config error,
// 3 runtime failure. Output files are written only after a command succeeds.

#include "iqsense/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kVerifyFailed = 1;
constexpr int kUsageError = 2;
constexpr int kRuntimeError = 3;

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::optional<std::string> mode;
    std::optional<std::string> out;
    std::optional<std::string> format;
    unsigned workers = 0;
    bool verify = false;
    int figure_id = 0;
};

iqsense::ExperimentConfig resolve_config(const Flags &f) {
    iqsense::ExperimentConfig cfg =
        f.config_path.empty() ? iqsense::parse_config("{}") : iqsense::load_config(f.config_path);
    if (f.seed) {
        cfg.seed = *f.seed;
    }
    if (f.trials) {
        cfg.trials = *f.trials;
    }
    if (f.mode) {
        cfg.mode = iqsense::parse_mode(*f.mode, cfg.cfar_pfa);
    }
    if (f.out) {
        cfg.output_path = *f.out;
    }
    if (f.format) {
        cfg.output_format =
            *f.format == "json" ? iqsense::OutputFormat::Json : iqsense::OutputFormat::Csv;
    }
    return cfg;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"I/Q-imbalance-aware four-level spectrum sensing experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", IQSENSE_VERSION);

    Flags f;
    app.add_option("--config", f.config_path, "JSON experiment configuration")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", f.seed, "master seed (overrides config)");
    app.add_option("--trials", f.trials, "trials per hypothesis per point (overrides config)");
    app.add_option("--mode", f.mode, "detector mode")
        ->check(CLI::IsMember({"four", "two-bayes", "two-cfar"}));
    app.add_option("--out", f.out, "output file (default: stdout)");
    app.add_option("--format", f.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--workers", f.workers, "worker threads, 0 = all cores; results do not depend on it");

    auto *analytic = app.add_subcommand("analytic", "closed-form variances, thresholds and error rates");
    auto *sense = app.add_subcommand("sense", "one Monte Carlo point with analytic comparison");
    sense->add_flag("--verify", f.verify, "exit 0 only if every cell is within 3 standard errors");
    auto *sweep = app.add_subcommand("sweep", "the sweep described in the config");
    auto *figure = app.add_subcommand("figure", "data for figure 3, 4, 5 or 6");
    figure->add_option("--id,id", f.figure_id, "figure number")->required()->check(CLI::Range(3, 6));
    auto *frame = app.add_subcommand("frame", "detect every subcarrier of one simulated frame");
    auto *outage = app.add_subcommand("outage", "primary outage under secondary image leakage");
    for (auto *sub : {analytic, sense, sweep, figure, frame, outage}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    iqsense::ExperimentConfig cfg;
    try {
        cfg = resolve_config(f);
    } catch (const iqsense::ConfigError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    }
    if (f.trials && *f.trials == 0) {
        std::cerr << "error: --trials must be >= 1\n";
        return kUsageError;
    }

    iqsense::CommandOptions opts;
    opts.run.workers = f.workers;
    opts.verify = f.verify;

    iqsense::Report report;
    try {
        if (*analytic) {
            report = iqsense::cmd_analytic(cfg);
        } else if (*sense) {
            report = iqsense::cmd_sense(cfg, opts);
        } else if (*sweep) {
            report = iqsense::cmd_sweep(cfg, opts);
        } else if (*figure) {
            report = iqsense::cmd_figure(cfg, f.figure_id, opts);
        } else if (*frame) {
            report = iqsense::cmd_frame(cfg, opts);
        } else {
            report = iqsense::cmd_outage(cfg, opts);
        }
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }

    std::ostringstream buffer;
    iqsense::write_report(buffer, report, cfg.output_format);
    if (cfg.output_path) {
        std::ofstream out(*cfg.output_path, std::ios::binary);
        if (!out || !(out << buffer.str())) {
            std::cerr << "error: cannot write '" << *cfg.output_path << "'\n";
            return kRuntimeError;
        }
    } else {
        std::cout << buffer.str();
    }
    for (const auto &note : report.notes) {
        std::cerr << "note: " << note << '\n';
    }
    if (f.verify && !report.verified) {
        std::cerr << "verification failed\n";
        return kVerifyFailed;
    }
    return 0;
}

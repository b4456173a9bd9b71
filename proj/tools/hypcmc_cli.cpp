// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

// hypcmc: validate | solve | foliate | export | report

#include "hypcmc/hypcmc_c.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

int exit_code(hypcmc_status s)
{
    switch (s) {
    case HYPCMC_OK: return kExitPass;
    case HYPCMC_CONFIG:
    case HYPCMC_IO:
    case HYPCMC_INVALID_ARGUMENT:
    case HYPCMC_OUT_OF_RANGE:
    case HYPCMC_SIZE_MISMATCH:
    case HYPCMC_DOMAIN_MISMATCH: return kExitUsage;
    default: return kExitFailure;
    }
}

struct Options {
    std::string command;
    std::string config;
    std::string out;
    std::uint64_t seed = 1;
    int verbosity = 1;
};

void print_config(const hypcmc_config* cfg)
{
    static const char* const keys[] = {"mode",       "map",          "epsilon",  "grid_n",     "half_width",
                                       "subdiv",     "qd_amplitude", "h_min",    "h_max",      "leaves",
                                       "newton_tol", "max_newton",   "h_step",   "h_step_min", "cross_check",
                                       "fd_step",    "sample_stride", "validate_samples"};
    char buf[128];
    for (const char* k : keys)
        if (hypcmc_config_get(cfg, k, buf, sizeof buf, nullptr) == HYPCMC_OK) std::cout << "  " << k << " = " << buf << '\n';
}

int run(const Options& opt)
{
    hypcmc_config* cfg = nullptr;
    hypcmc_status s = opt.config.empty() ? hypcmc_config_default(&cfg) : hypcmc_config_load(opt.config.c_str(), &cfg);
    if (s != HYPCMC_OK) {
        std::cerr << "hypcmc: " << hypcmc_last_error() << '\n';
        return exit_code(s);
    }
    if (opt.verbosity >= 2) {
        std::cout << "hypcmc " << hypcmc_version() << ' ' << opt.command << " seed=" << opt.seed << '\n';
        print_config(cfg);
    }

    const bool needs_dir = opt.command != "validate";
    if (needs_dir && opt.out.empty()) {
        std::cerr << "hypcmc: " << opt.command << " requires --out DIR\n";
        hypcmc_config_free(cfg);
        return kExitUsage;
    }

    hypcmc_report* rep = nullptr;
    const char* dir = opt.out.c_str();
    if (opt.command == "validate") s = hypcmc_validate(cfg, opt.seed, &rep);
    else if (opt.command == "solve") s = hypcmc_solve(cfg, dir, opt.seed, &rep);
    else if (opt.command == "foliate") s = hypcmc_foliate(opt.config.empty() ? nullptr : cfg, dir, opt.seed, &rep);
    else if (opt.command == "export") s = hypcmc_export(dir, &rep);
    else s = hypcmc_report_run(dir, &rep);
    hypcmc_config_free(cfg);

    if (rep) {
        if (opt.verbosity >= 1) std::cout << hypcmc_report_text(rep);
        if (opt.command == "validate" && !opt.out.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(opt.out, ec);
            const std::string path = (std::filesystem::path(opt.out) / "validate.csv").string();
            const hypcmc_status ws = hypcmc_report_write_csv(rep, path.c_str());
            if (ws != HYPCMC_OK) {
                std::cerr << "hypcmc: " << hypcmc_last_error() << '\n';
                hypcmc_report_free(rep);
                return exit_code(ws);
            }
        }
        hypcmc_report_free(rep);
    }
    if (s == HYPCMC_CHECK_FAILED) {
        if (opt.verbosity >= 1) std::cerr << "hypcmc: " << opt.command << ": checks failed\n";
        return kExitFailure;
    }
    if (s != HYPCMC_OK) {
        std::cerr << "hypcmc: " << opt.command << " failed (" << hypcmc_status_name(s) << "): " << hypcmc_last_error()
                  << '\n';
        return exit_code(s);
    }
    return kExitPass;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Constant mean curvature foliations of hyperbolic ends"};
    app.set_version_flag("--version", std::string(hypcmc_version()));
    Options opt;
    app.add_option("command", opt.command, "validate | solve | foliate | export | report")
        ->required()
        ->check(CLI::IsMember({"validate", "solve", "foliate", "export", "report"}));
    app.add_option("--config", opt.config, "key = value configuration file (defaults when omitted)");
    app.add_option("--out", opt.out, "run directory");
    app.add_option("--seed", opt.seed, "seed of the randomized property checks");
    app.add_option("--verbosity", opt.verbosity, "0 quiet, 1 table, 2 table and configuration")
        ->check(CLI::IsMember({0, 1, 2}));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    return run(opt);
}

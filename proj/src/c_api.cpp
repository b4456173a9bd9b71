// Copyright 2026 The hypcmc Authors
// SPDX-License-Identifier: Apache-2.0

#include "hypcmc/hypcmc_c.h"

#include "hypcmc/error.hpp"
#include "hypcmc/run.hpp"

#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <new>
#include <string>

struct hypcmc_config {
    hypcmc::RunConfig cfg;
};

struct hypcmc_report {
    hypcmc::RunReport rep;
    std::string text;
};

namespace {

thread_local std::string g_last_error;

hypcmc_status guard(const std::function<hypcmc_status()>& body)
{
    g_last_error.clear();
    try {
        return body();
    } catch (const hypcmc::Error& e) {
        g_last_error = e.what();
        return static_cast<hypcmc_status>(static_cast<int>(e.code()));
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return HYPCMC_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return HYPCMC_INTERNAL;
    }
}

hypcmc_status require(bool ok, const char* what)
{
    if (ok) return HYPCMC_OK;
    g_last_error = what;
    return HYPCMC_INVALID_ARGUMENT;
}

hypcmc_status emit(hypcmc::RunReport rep, hypcmc_report** out)
{
    auto* r = new hypcmc_report{std::move(rep), {}};
    r->text = r->rep.summary;
    if (!r->text.empty() && r->text.back() != '\n') r->text += '\n';
    r->text += hypcmc::format_checks(r->rep.checks);
    *out = r;
    if (r->rep.passed()) return HYPCMC_OK;
    g_last_error = "one or more checks failed";
    return HYPCMC_CHECK_FAILED;
}

const hypcmc::Check* row_of(const hypcmc_report* rep, size_t row)
{
    if (!rep || row >= rep->rep.checks.size()) return nullptr;
    return &rep->rep.checks[row];
}

} // namespace

extern "C" {

const char* hypcmc_version(void) { return hypcmc::kVersion; }

const char* hypcmc_status_name(hypcmc_status status)
{
    switch (status) {
    case HYPCMC_OK: return "Ok";
    case HYPCMC_CHECK_FAILED: return "CheckFailed";
    case HYPCMC_INTERNAL: return "Internal";
    default: break;
    }
    const int s = static_cast<int>(status);
    if (s >= 1 && s <= 16) return hypcmc::error_code_name(static_cast<hypcmc::ErrorCode>(s));
    return "Unknown";
}

const char* hypcmc_last_error(void) { return g_last_error.c_str(); }

hypcmc_status hypcmc_config_default(hypcmc_config** out)
{
    if (auto s = require(out != nullptr, "null output pointer")) return s;
    *out = nullptr;
    return guard([&] {
        *out = new hypcmc_config{};
        return HYPCMC_OK;
    });
}

hypcmc_status hypcmc_config_load(const char* path, hypcmc_config** out)
{
    if (auto s = require(out != nullptr && path != nullptr, "null argument")) return s;
    *out = nullptr;
    return guard([&] {
        auto cfg = hypcmc::RunConfig::load(path);
        *out = new hypcmc_config{std::move(cfg)};
        return HYPCMC_OK;
    });
}

hypcmc_status hypcmc_config_set(hypcmc_config* cfg, const char* key, const char* value)
{
    if (auto s = require(cfg && key && value, "null argument")) return s;
    return guard([&] {
        hypcmc::RunConfig next = cfg->cfg;
        next.set(key, value);
        cfg->cfg = next;
        return HYPCMC_OK;
    });
}

hypcmc_status hypcmc_config_get(const hypcmc_config* cfg, const char* key, char* buf, size_t size, size_t* needed)
{
    if (auto s = require(cfg && key, "null argument")) return s;
    return guard([&] {
        const std::string v = cfg->cfg.get(key);
        if (needed) *needed = v.size() + 1;
        if (!buf || size < v.size() + 1) {
            g_last_error = "buffer too small";
            return HYPCMC_SIZE_MISMATCH;
        }
        std::memcpy(buf, v.c_str(), v.size() + 1);
        return HYPCMC_OK;
    });
}

void hypcmc_config_free(hypcmc_config* cfg) { delete cfg; }

hypcmc_status hypcmc_validate(const hypcmc_config* cfg, uint64_t seed, hypcmc_report** out)
{
    if (auto s = require(cfg && out, "null argument")) return s;
    *out = nullptr;
    return guard([&] { return emit(hypcmc::run_validate(cfg->cfg, seed), out); });
}

hypcmc_status hypcmc_solve(const hypcmc_config* cfg, const char* out_dir, uint64_t seed, hypcmc_report** out)
{
    if (auto s = require(cfg && out_dir && out, "null argument")) return s;
    *out = nullptr;
    return guard([&] { return emit(hypcmc::run_solve(cfg->cfg, out_dir, seed), out); });
}

hypcmc_status hypcmc_foliate(const hypcmc_config* cfg, const char* run_dir, uint64_t seed, hypcmc_report** out)
{
    if (auto s = require(run_dir && out, "null argument")) return s;
    *out = nullptr;
    return guard([&] { return emit(hypcmc::run_foliate(cfg ? &cfg->cfg : nullptr, run_dir, seed), out); });
}

hypcmc_status hypcmc_export(const char* run_dir, hypcmc_report** out)
{
    if (auto s = require(run_dir && out, "null argument")) return s;
    *out = nullptr;
    return guard([&] { return emit(hypcmc::run_export(run_dir), out); });
}

hypcmc_status hypcmc_report_run(const char* run_dir, hypcmc_report** out)
{
    if (auto s = require(run_dir && out, "null argument")) return s;
    *out = nullptr;
    return guard([&] { return emit(hypcmc::run_report(run_dir), out); });
}

size_t hypcmc_report_rows(const hypcmc_report* rep) { return rep ? rep->rep.checks.size() : 0; }

const char* hypcmc_report_name(const hypcmc_report* rep, size_t row)
{
    const auto* c = row_of(rep, row);
    return c ? c->name.c_str() : nullptr;
}

double hypcmc_report_measured(const hypcmc_report* rep, size_t row)
{
    const auto* c = row_of(rep, row);
    return c ? c->measured : std::numeric_limits<double>::quiet_NaN();
}

double hypcmc_report_bound(const hypcmc_report* rep, size_t row)
{
    const auto* c = row_of(rep, row);
    return c ? c->bound : std::numeric_limits<double>::quiet_NaN();
}

const char* hypcmc_report_relation(const hypcmc_report* rep, size_t row)
{
    const auto* c = row_of(rep, row);
    return c ? c->relation.c_str() : nullptr;
}

int hypcmc_report_passed(const hypcmc_report* rep, size_t row)
{
    const auto* c = row_of(rep, row);
    return c && c->passed ? 1 : 0;
}

int hypcmc_report_all_passed(const hypcmc_report* rep) { return rep && rep->rep.passed() ? 1 : 0; }

const char* hypcmc_report_text(const hypcmc_report* rep) { return rep ? rep->text.c_str() : nullptr; }

hypcmc_status hypcmc_report_write_csv(const hypcmc_report* rep, const char* path)
{
    if (auto s = require(rep && path, "null argument")) return s;
    return guard([&] {
        std::ofstream out(path);
        if (!out) hypcmc::fail(hypcmc::ErrorCode::Io, std::string("cannot write ") + path);
        out << std::setprecision(17) << "name,measured,relation,bound,passed\n";
        for (const auto& c : rep->rep.checks)
            out << c.name << ',' << c.measured << ',' << c.relation << ',' << c.bound << ',' << (c.passed ? 1 : 0)
                << '\n';
        out.close();
        if (!out) hypcmc::fail(hypcmc::ErrorCode::Io, std::string("write failed: ") + path);
        return HYPCMC_OK;
    });
}

void hypcmc_report_free(hypcmc_report* rep) { delete rep; }

} // extern "C"

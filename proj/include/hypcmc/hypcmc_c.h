/* Copyright 2026 The hypcmc Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#ifndef HYPCMC_C_H
#define HYPCMC_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HYPCMC_API __declspec(dllexport)
#else
#define HYPCMC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Nonzero codes below 100 mirror the library error kinds. */
typedef enum hypcmc_status {
    HYPCMC_OK = 0,
    HYPCMC_INVALID_ARGUMENT = 1,
    HYPCMC_OUT_OF_DOMAIN = 2,
    HYPCMC_OUT_OF_RANGE = 3,
    HYPCMC_NON_IMMERSION = 4,
    HYPCMC_DEGENERATE_DERIVATIVE = 5,
    HYPCMC_DOMAIN_MISMATCH = 6,
    HYPCMC_SIZE_MISMATCH = 7,
    HYPCMC_NOT_POSITIVE = 8,
    HYPCMC_SOLVER_FAILURE = 9,
    HYPCMC_MESH_PAIRING_FAILURE = 10,
    HYPCMC_NEWTON_DIVERGED = 11,
    HYPCMC_SINGULAR_LINEARIZATION = 12,
    HYPCMC_CONTINUATION_STALLED = 13,
    HYPCMC_NON_CONSTANT_H = 14,
    HYPCMC_IO = 15,
    HYPCMC_CONFIG = 16,
    /* The pipeline ran but at least one check failed. */
    HYPCMC_CHECK_FAILED = 100,
    HYPCMC_INTERNAL = 101
} hypcmc_status;

typedef struct hypcmc_config hypcmc_config;
typedef struct hypcmc_report hypcmc_report;

HYPCMC_API const char* hypcmc_version(void);
HYPCMC_API const char* hypcmc_status_name(hypcmc_status status);
/* Message of the most recent failure on the calling thread ("" if none). */
HYPCMC_API const char* hypcmc_last_error(void);

HYPCMC_API hypcmc_status hypcmc_config_default(hypcmc_config** out);
HYPCMC_API hypcmc_status hypcmc_config_load(const char* path, hypcmc_config** out);
HYPCMC_API hypcmc_status hypcmc_config_set(hypcmc_config* cfg, const char* key, const char* value);
/* Copies the value (NUL-terminated) into buf; *needed receives its length
 * plus one. A too-small buffer yields HYPCMC_SIZE_MISMATCH. */
HYPCMC_API hypcmc_status hypcmc_config_get(const hypcmc_config* cfg, const char* key, char* buf, size_t size,
                                           size_t* needed);
HYPCMC_API void hypcmc_config_free(hypcmc_config* cfg);

/* Pipelines. On success or HYPCMC_CHECK_FAILED *out holds a report the
 * caller frees; on any other status *out is NULL. */
HYPCMC_API hypcmc_status hypcmc_validate(const hypcmc_config* cfg, uint64_t seed, hypcmc_report** out);
HYPCMC_API hypcmc_status hypcmc_solve(const hypcmc_config* cfg, const char* out_dir, uint64_t seed,
                                      hypcmc_report** out);
/* cfg may be NULL when run_dir already holds a completed run. */
HYPCMC_API hypcmc_status hypcmc_foliate(const hypcmc_config* cfg, const char* run_dir, uint64_t seed,
                                        hypcmc_report** out);
HYPCMC_API hypcmc_status hypcmc_export(const char* run_dir, hypcmc_report** out);
HYPCMC_API hypcmc_status hypcmc_report_run(const char* run_dir, hypcmc_report** out);

HYPCMC_API size_t hypcmc_report_rows(const hypcmc_report* rep);
HYPCMC_API const char* hypcmc_report_name(const hypcmc_report* rep, size_t row);
HYPCMC_API double hypcmc_report_measured(const hypcmc_report* rep, size_t row);
HYPCMC_API double hypcmc_report_bound(const hypcmc_report* rep, size_t row);
HYPCMC_API const char* hypcmc_report_relation(const hypcmc_report* rep, size_t row);
HYPCMC_API int hypcmc_report_passed(const hypcmc_report* rep, size_t row);
HYPCMC_API int hypcmc_report_all_passed(const hypcmc_report* rep);
/* Summary followed by the check table. */
HYPCMC_API const char* hypcmc_report_text(const hypcmc_report* rep);
HYPCMC_API hypcmc_status hypcmc_report_write_csv(const hypcmc_report* rep, const char* path);
HYPCMC_API void hypcmc_report_free(hypcmc_report* rep);

#ifdef __cplusplus
}
#endif

#endif /* HYPCMC_C_H */

#ifndef FAIRALLOC_H
#define FAIRALLOC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FaStatus {
  FA_STATUS_OK = 0,
  FA_STATUS_NULL_POINTER = 1,
  FA_STATUS_INVALID_INPUT = 2,
  FA_STATUS_WRONG_ARITY = 3,
  FA_STATUS_UNKNOWN_MECHANISM = 4,
  FA_STATUS_BUFFER_TOO_SMALL = 5,
  FA_STATUS_SOLVER_FAILURE = 6,
  FA_STATUS_PANIC = 7,
} FaStatus;

// Opaque instance handle.
typedef struct FaInstance FaInstance;

// Opaque mechanism result handle; keeps a copy of its instance.
typedef struct FaResult FaResult;

// Outcome of the four property checks (1 = holds, 0 = violated).
typedef struct FaProperties {
  uint8_t sharing_incentive;
  uint8_t envy_free;
  uint8_t pareto_optimal;
  uint8_t non_wasteful;
} FaProperties;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds an instance from a row-major `agents x resources` demand matrix.
// Rows are normalized by their maximum.
//
// # Safety
// `demands` must point to `agents * resources` readable doubles and `out`
// must be a valid pointer to write the handle to.
enum FaStatus fa_instance_new(const double *demands,
                              size_t agents,
                              size_t resources,
                              struct FaInstance **out);

// # Safety
// `instance` must come from [`fa_instance_new`] and not be freed twice.
void fa_instance_free(struct FaInstance *instance);

// # Safety
// `instance` must be a live handle or null.
size_t fa_instance_agents(const struct FaInstance *instance);

// # Safety
// `instance` must be a live handle or null.
size_t fa_instance_resources(const struct FaInstance *instance);

// Runs the mechanism named by `tag` (`drf`, `f1`, `f2`, `f2star`,
// `fg:SCORE`, `gf1[:R]`, `hybrid-sw`, `hybrid-util`). Two-resource
// mechanisms get the same resource relabeling as the command line.
//
// # Safety
// `instance` must be live, `tag` a NUL-terminated string and `out` writable.
enum FaStatus fa_run(const struct FaInstance *instance, const char *tag, struct FaResult **out);

// # Safety
// `result` must come from [`fa_run`] and not be freed twice.
void fa_result_free(struct FaResult *result);

// Copies the dominant shares (one per agent).
//
// # Safety
// `result` must be live and `out` must hold `len` doubles.
enum FaStatus fa_result_shares(const struct FaResult *result, double *out, size_t len);

// Copies the allocation matrix row-major (`agents * resources` values).
//
// # Safety
// `result` must be live and `out` must hold `len` doubles.
enum FaStatus fa_result_matrix(const struct FaResult *result, double *out, size_t len);

// # Safety
// `result` must be live and `out` writable.
enum FaStatus fa_result_social_welfare(const struct FaResult *result, double *out);

// # Safety
// `result` must be live and `out` writable.
enum FaStatus fa_result_utilization(const struct FaResult *result, double *out);

// Runs the SI, EF, PO and non-wastefulness checks at the default tolerance.
//
// # Safety
// `result` must be live and `out` writable.
enum FaStatus fa_result_check(const struct FaResult *result, struct FaProperties *out);

// Best social welfare and utilization over fair allocations.
//
// # Safety
// `instance` must be live; `sw_opt` and `util_opt` writable.
enum FaStatus fa_fair_benchmark(const struct FaInstance *instance,
                                double *sw_opt,
                                double *util_opt);

// Copies the last error message of this thread as a NUL-terminated string,
// truncated to fit. Returns the full message length without the NUL.
//
// # Safety
// `buf` must hold `len` bytes, or be null to query the length.
size_t fa_last_error(char *buf, size_t len);

// Static description of a status code.
const char *fa_status_str(enum FaStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRALLOC_H */

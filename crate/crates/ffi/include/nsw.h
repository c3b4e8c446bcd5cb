#ifndef NSW_H
#define NSW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NswStatus {
  NSW_STATUS_OK = 0,
  NSW_STATUS_NULL_ARGUMENT = 1,
  NSW_STATUS_PARSE = 2,
  NSW_STATUS_INVALID_INSTANCE = 3,
  NSW_STATUS_INVARIANT = 4,
  NSW_STATUS_BUDGET_EXCEEDED = 5,
  NSW_STATUS_BUFFER_TOO_SMALL = 6,
  NSW_STATUS_PANIC = 7,
} NswStatus;

// Opaque instance handle.
typedef struct NswInstance NswInstance;

// Opaque solution handle.
typedef struct NswSolution NswSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. Valid
// until the next failing call on the same thread.
const char *nsw_last_error_message(void);

// Builds an instance from a row-major `n * m` array of 0/1 bytes
// (`heavy[i * m + g]` is nonzero when agent `i` values good `g` at `p / 2`).
//
// # Safety
// `heavy` must point to `n * m` readable bytes (it may be null when `m` is
// zero) and `out` must be writable.
enum NswStatus nsw_instance_new(uint64_t p,
                                size_t n,
                                size_t m,
                                const uint8_t *heavy,
                                struct NswInstance **out);

// Parses an instance from its JSON text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` must be writable.
enum NswStatus nsw_instance_parse(const char *text, struct NswInstance **out);

// # Safety
// `inst` must come from this library and not be freed twice; null is ignored.
void nsw_instance_free(struct NswInstance *inst);

// # Safety
// `inst` must be a live handle or null.
size_t nsw_instance_agents(const struct NswInstance *inst);

// # Safety
// `inst` must be a live handle or null.
size_t nsw_instance_goods(const struct NswInstance *inst);

// Solves `inst` with `threads` workers (0 is treated as 1).
//
// # Safety
// `inst` must be a live handle and `out` writable.
enum NswStatus nsw_solve(const struct NswInstance *inst, size_t threads, struct NswSolution **out);

// # Safety
// `sol` must come from this library and not be freed twice; null is ignored.
void nsw_solution_free(struct NswSolution *sol);

// Decimal product of the half-unit bundle values, owned by `sol`.
//
// # Safety
// `sol` must be a live handle.
const char *nsw_solution_product(const struct NswSolution *sol);

// Number of empty bundles.
//
// # Safety
// `sol` must be a live handle or null.
size_t nsw_solution_empty_bundles(const struct NswSolution *sol);

// Number of failed structural checks recorded during the solve.
//
// # Safety
// `sol` must be a live handle or null.
size_t nsw_solution_violations(const struct NswSolution *sol);

// Copies the half-unit value of every agent into `buf` (`len` entries).
//
// # Safety
// `sol` must be a live handle and `buf` must hold `len` writable values.
enum NswStatus nsw_solution_values_x2(const struct NswSolution *sol, uint64_t *buf, size_t len);

// Copies the owner of every good into `buf` (`len` entries).
//
// # Safety
// `sol` must be a live handle and `buf` must hold `len` writable values.
enum NswStatus nsw_solution_owners(const struct NswSolution *sol, size_t *buf, size_t len);

// The solution file as JSON. Release with [`nsw_string_free`].
//
// # Safety
// `sol` must be a live handle and `out` writable.
enum NswStatus nsw_solution_json(const struct NswSolution *sol, char **out);

// # Safety
// `s` must come from this library and not be freed twice; null is ignored.
void nsw_string_free(char *s);

// Solves `inst` and compares with exhaustive search over at most `budget`
// allocations. `*matches` is set to 1 on agreement, 0 otherwise.
//
// # Safety
// `inst` must be a live handle and `matches` writable.
enum NswStatus nsw_verify(const struct NswInstance *inst, uint64_t budget, int32_t *matches);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSW_H */

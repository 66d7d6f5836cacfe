/* treqs C API.
 *
 * Load a model of the requirement elements in a repository (working tree or
 * committed revision), query it, validate it, and export it as JSON.
 *
 * Every function returning TreqsStatus reports failure through its return
 * value; treqs_last_error_message() then yields a human-readable reason.
 * Strings returned through out-parameters are owned by the caller and must
 * be released with treqs_string_free().
 */

#ifndef TREQS_H
#define TREQS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every fallible treqs call.
typedef enum TreqsStatus {
  // Success.
  TREQS_STATUS_OK = 0,
  // A required argument was null or malformed.
  TREQS_STATUS_INVALID_ARGUMENT = 1,
  // An argument or file was not valid UTF-8.
  TREQS_STATUS_UTF8_ERROR = 2,
  // The file system refused.
  TREQS_STATUS_IO_ERROR = 3,
  // Git failed: unknown revision, not a repository, or no git at all.
  TREQS_STATUS_GIT_ERROR = 4,
  // A bug inside treqs (caught panic).
  TREQS_STATUS_INTERNAL_ERROR = 5,
} TreqsStatus;

// Opaque handle to a loaded requirements model.
typedef struct TreqsModel TreqsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version of the treqs library as a static string; do not free.
const char *treqs_version(void);

// Last error message of this thread as a newly allocated string, or null if
// no error occurred yet. Free with treqs_string_free().
char *treqs_last_error_message(void);

// Loads a model from the working tree rooted at `root` (configuration is
// read from `.treqs.toml` there, if present). On success writes a handle to
// `out`; release it with treqs_model_free().
//
// # Safety
// `root` must be a NUL-terminated string; `out` must be valid for writes.
enum TreqsStatus treqs_model_load_dir(const char *root, struct TreqsModel **out);

// Loads a model from the committed tree at revision `rev` of the repository
// at `root`, without touching the working tree.
//
// # Safety
// `root` and `rev` must be NUL-terminated strings; `out` must be valid for
// writes.
enum TreqsStatus treqs_model_load_rev(const char *root, const char *rev, struct TreqsModel **out);

// Releases a model handle. Null is a no-op.
//
// # Safety
// `model` must be null or a handle obtained from a treqs load function that
// has not been freed yet.
void treqs_model_free(struct TreqsModel *model);

// Number of elements in the model, or 0 if `model` is null.
//
// # Safety
// `model` must be null or a live handle.
uintptr_t treqs_model_element_count(const struct TreqsModel *model);

// Number of trace links in the model (including links of suppressed
// duplicate elements), or 0 if `model` is null.
//
// # Safety
// `model` must be null or a live handle.
uintptr_t treqs_model_link_count(const struct TreqsModel *model);

// ID of the element at `index` (model order, deterministic). Returns null
// if `model` is null or `index` is out of range. Free with
// treqs_string_free().
//
// # Safety
// `model` must be null or a live handle.
char *treqs_model_element_id(const struct TreqsModel *model, uintptr_t index);

// Serializes the whole model (elements, links, findings) as pretty-printed
// JSON. Deterministic for a given model. Free with treqs_string_free().
//
// # Safety
// `model` must be a live handle; `out` must be valid for writes.
enum TreqsStatus treqs_model_to_json(const struct TreqsModel *model, char **out);

// Runs the full validation pipeline (the same one as `treqs check`):
// parse/model findings, dangling links, duplicate links, refinement cycles,
// and test coverage. Writes the findings (one per line, canonical order) to
// `out_text` — an empty string when the model is clean — and the error and
// warning counts to `out_errors` / `out_warnings` (either may be null).
// Free `out_text` with treqs_string_free().
//
// # Safety
// `model` must be a live handle; `out_text` must be valid for writes;
// `out_errors` and `out_warnings` must each be null or valid for writes.
enum TreqsStatus treqs_model_validate(const struct TreqsModel *model,
                                      char **out_text,
                                      uintptr_t *out_errors,
                                      uintptr_t *out_warnings);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must be null or a string obtained from a treqs function that has not
// been freed yet.
void treqs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREQS_H */

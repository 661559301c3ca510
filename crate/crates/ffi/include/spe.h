#ifndef SPE_H
#define SPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpeGranularity {
  SPE_GRANULARITY_INTRA = 0,
  SPE_GRANULARITY_INTER = 1,
} SpeGranularity;

typedef enum SpeMode {
  SPE_MODE_COMPLETE = 0,
  SPE_MODE_PAPER = 1,
} SpeMode;

typedef enum SpeStatus {
  SPE_STATUS_OK = 0,
  SPE_STATUS_NULL_ARGUMENT = 1,
  SPE_STATUS_INVALID_UTF8 = 2,
  SPE_STATUS_PARSE_ERROR = 3,
  /**
   * The requested mode cannot handle this skeleton.
   */
  SPE_STATUS_UNSUPPORTED = 4,
  /**
   * The enumerator has no further variants.
   */
  SPE_STATUS_EXHAUSTED = 5,
  SPE_STATUS_INTERNAL = 6,
} SpeStatus;

/**
 * A lazy stream of realized variants.
 */
typedef struct SpeEnumerator SpeEnumerator;

/**
 * A parsed program.
 */
typedef struct SpeProgram SpeProgram;

/**
 * A skeleton extracted from a program.
 */
typedef struct SpeSkeleton SpeSkeleton;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; do not free it.
 */
const char *spe_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed only once.
 */
void spe_string_free(char *s);

/**
 * Parse and check MiniC source.
 *
 * # Safety
 * `source` must be a nul-terminated string and `out` a valid pointer.
 */
enum SpeStatus spe_program_parse(const char *source, struct SpeProgram **out);

/**
 * # Safety
 * `p` must be null or a handle from [`spe_program_parse`], freed only once.
 */
void spe_program_free(struct SpeProgram *p);

/**
 * # Safety
 * `program` must be a live program handle and `out` a valid pointer.
 */
enum SpeStatus spe_skeleton_extract(const struct SpeProgram *program,
                                    bool decl_holes,
                                    struct SpeSkeleton **out);

/**
 * # Safety
 * `s` must be null or a handle from [`spe_skeleton_extract`], freed only once.
 */
void spe_skeleton_free(struct SpeSkeleton *s);

/**
 * Number of holes, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live skeleton handle.
 */
size_t spe_skeleton_hole_count(const struct SpeSkeleton *s);

/**
 * The skeleton as a JSON document.
 *
 * # Safety
 * `s` must be a live skeleton handle and `out` a valid pointer.
 */
enum SpeStatus spe_skeleton_to_json(const struct SpeSkeleton *s, char **out);

/**
 * Naive and selected-mode counts as decimal strings, since they
 * overflow any fixed-width integer on real programs.
 *
 * # Safety
 * `s` must be a live skeleton handle; both out-pointers must be valid.
 */
enum SpeStatus spe_count(const struct SpeSkeleton *s,
                         enum SpeMode mode,
                         enum SpeGranularity granularity,
                         char **out_naive,
                         char **out_selected);

/**
 * Start enumerating. The enumerator keeps its own copy of the skeleton.
 *
 * # Safety
 * `s` must be a live skeleton handle and `out` a valid pointer.
 */
enum SpeStatus spe_enumerator_new(const struct SpeSkeleton *s,
                                  enum SpeMode mode,
                                  enum SpeGranularity granularity,
                                  struct SpeEnumerator **out);

/**
 * Produce the next valid variant as C source and its canonical signature.
 * Returns [`SpeStatus::Exhausted`] at the end of the stream. Assignments
 * that collide declaration names are skipped.
 *
 * # Safety
 * `e` must be a live enumerator handle and both out-pointers valid.
 */
enum SpeStatus spe_enumerator_next(struct SpeEnumerator *e,
                                   char **out_source,
                                   char **out_signature);

/**
 * # Safety
 * `e` must be null or a handle from [`spe_enumerator_new`], freed only once.
 */
void spe_enumerator_free(struct SpeEnumerator *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPE_H */

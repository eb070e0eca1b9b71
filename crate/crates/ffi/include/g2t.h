#ifndef G2T_H
#define G2T_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum G2tStatus {
  G2T_STATUS_OK = 0,
  G2T_STATUS_NULL_ARGUMENT = 1,
  G2T_STATUS_INVALID_UTF8 = 2,
  G2T_STATUS_INVALID_ARGUMENT = 3,
  G2T_STATUS_DATA_ERROR = 4,
  G2T_STATUS_RUNTIME_ERROR = 5,
  G2T_STATUS_PANIC = 6,
} G2tStatus;

/**
 * A linearized graph: tokens with their role and tree-level indices.
 */
typedef struct G2tLinearized G2tLinearized;

/**
 * A trained model with its vocabulary.
 */
typedef struct G2tModel G2tModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *g2t_last_error(void);

/**
 * Library version as a static string.
 */
const char *g2t_version(void);

void g2t_string_free(char *s);

enum G2tStatus g2t_linearize(const char *graph, size_t max_level, struct G2tLinearized **out);

size_t g2t_linearized_len(const struct G2tLinearized *h);

/**
 * Token text at `i`, or null when out of range. Owned by the handle.
 */
const char *g2t_linearized_token(const struct G2tLinearized *h, size_t i);

/**
 * Role code (0 subject, 1 predicate, 2 object) at `i`, or -1.
 */
int32_t g2t_linearized_role(const struct G2tLinearized *h, size_t i);

/**
 * Tree level at `i`, or -1.
 */
int32_t g2t_linearized_level(const struct G2tLinearized *h, size_t i);

/**
 * Space-joined sequence; release with `g2t_string_free`.
 */
char *g2t_linearized_text(const struct G2tLinearized *h);

void g2t_linearized_free(struct G2tLinearized *h);

/**
 * Corpus BLEU in percent. `references[i]` holds the newline-separated
 * references of example `i`.
 */
enum G2tStatus g2t_corpus_bleu(const char *const *predictions,
                               const char *const *references,
                               size_t n,
                               double *out);

/**
 * Corpus TER: total edits over total reference length.
 */
enum G2tStatus g2t_corpus_ter(const char *const *predictions,
                              const char *const *references,
                              size_t n,
                              double *out);

enum G2tStatus g2t_model_load(const char *path, struct G2tModel **out);

size_t g2t_model_vocab_size(const struct G2tModel *model);

/**
 * Beam-decodes one graph; the text is written to `*out`.
 */
enum G2tStatus g2t_model_generate(const struct G2tModel *model,
                                  const char *graph,
                                  size_t beam_size,
                                  char **out);

void g2t_model_free(struct G2tModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* G2T_H */

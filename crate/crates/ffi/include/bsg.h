#ifndef BSG_H
#define BSG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BsgMeasure {
  BSG_MEASURE_COSINE_MEAN = 0,
  BSG_MEASURE_NEG_KL = 1,
} BsgMeasure;

// Outcome of a call. Nonzero codes match the command-line exit codes.
typedef enum BsgStatus {
  BSG_STATUS_OK = 0,
  // Bad argument: null pointer, short buffer, invalid option.
  BSG_STATUS_USAGE = 1,
  // Bad input: unreadable file, unknown word, unsupported model.
  BSG_STATUS_DATA = 2,
  BSG_STATUS_NUMERICAL = 3,
  // A Rust panic was caught at the boundary.
  BSG_STATUS_INTERNAL = 4,
} BsgStatus;

// A loaded model.
typedef struct BsgModel BsgModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call on the same thread.
const char *bsg_last_error(void);

// Load a text or binary model file into `*out_model`.
//
// # Safety
// `path` must be a NUL-terminated string and `out_model` a valid pointer.
enum BsgStatus bsg_model_load(const char *path, struct BsgModel **out_model);

// Release a handle; null is ignored.
//
// # Safety
// `m` must come from [`bsg_model_load`] and not be used afterwards.
void bsg_model_free(struct BsgModel *m);

// # Safety
// Pointers must be valid.
enum BsgStatus bsg_model_dim(const struct BsgModel *m, size_t *dim);

// # Safety
// Pointers must be valid.
enum BsgStatus bsg_model_vocab_size(const struct BsgModel *m, size_t *size);

// # Safety
// Pointers must be valid and `word` NUL-terminated.
enum BsgStatus bsg_word_id(const struct BsgModel *m, const char *word, size_t *id);

// Prior mean and per-dimension variance of word `id`; both buffers hold
// at least `len` ≥ dim values.
//
// # Safety
// Pointers must be valid for `len` elements.
enum BsgStatus bsg_prior(const struct BsgModel *m,
                         size_t id,
                         double *mean,
                         double *var,
                         size_t len);

// KL[prior_a ‖ prior_b].
//
// # Safety
// Pointers must be valid.
enum BsgStatus bsg_kl_words(const struct BsgModel *m, size_t a, size_t b, double *kl);

// Cosine of the two words' mean vectors.
//
// # Safety
// Pointers must be valid.
enum BsgStatus bsg_cosine_words(const struct BsgModel *m, size_t a, size_t b, double *cos);

// Posterior of `tokens[target]` given the in-vocabulary tokens within
// `window` positions of it.
//
// # Safety
// `tokens` must point to `n_tokens` NUL-terminated strings; output
// buffers must be valid for `len` elements.
enum BsgStatus bsg_infer_posterior(const struct BsgModel *m,
                                   const char *const *tokens,
                                   size_t n_tokens,
                                   size_t target,
                                   size_t window,
                                   double *mean,
                                   double *var,
                                   size_t len);

// Up to `k` nearest words to `word`, best first. Word ids go to `ids`,
// scores to `scores`, and the number written to `*n_out`.
//
// # Safety
// `ids` and `scores` must be valid for `k` elements.
enum BsgStatus bsg_nearest(const struct BsgModel *m,
                           const char *word,
                           size_t k,
                           enum BsgMeasure measure,
                           size_t *ids,
                           double *scores,
                           size_t *n_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BSG_H */

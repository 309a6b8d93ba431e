#ifndef KGCRED_H
#define KGCRED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KgStatus {
  KG_STATUS_OK = 0,
  KG_STATUS_NULL_ARGUMENT = 1,
  KG_STATUS_INVALID_UTF8 = 2,
  KG_STATUS_IO = 3,
  /**
   * Malformed, corrupt or inconsistent input.
   */
  KG_STATUS_DATA = 4,
  KG_STATUS_DIMENSION = 5,
  /**
   * The fact's document has no relevant sentence.
   */
  KG_STATUS_NO_PROVENANCE = 6,
  /**
   * The operation does not apply to this model kind.
   */
  KG_STATUS_UNSUPPORTED = 7,
  KG_STATUS_PANIC = 8,
} KgStatus;

/**
 * A loaded data directory with C copies of its relation names.
 */
typedef struct KgCorpus KgCorpus;

/**
 * A loaded model.
 */
typedef struct KgModel KgModel;

typedef struct KgModelInfo {
  uint32_t kind;
  /**
   * Zero for LR models.
   */
  size_t embedding_dim;
  size_t num_flags;
  size_t num_classes;
  /**
   * Hidden layers; zero for LR models.
   */
  size_t depth;
} KgModelInfo;

typedef struct KgVerdict {
  bool credible;
  double cred_score;
  /**
   * Suggested relation index, or -1.
   */
  int64_t repair;
  bool unrepairable;
} KgVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *kg_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *kg_last_error(void);

/**
 * Loads an MLP or LR model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum KgStatus kg_model_load(const char *path, struct KgModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`kg_model_load`] and not be used afterwards.
 */
void kg_model_free(struct KgModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum KgStatus kg_model_info(const struct KgModel *model, struct KgModelInfo *out);

/**
 * Runs an MLP on a raw feature vector of `embedding_dim + num_flags`
 * values. Writes the credibility probability and `num_classes` repair
 * probabilities.
 *
 * # Safety
 * `x` must point to `x_len` doubles, `repair_out` to `repair_len` writable
 * doubles, and `cred_out` must be writable.
 */
enum KgStatus kg_model_forward(const struct KgModel *model,
                               const double *x,
                               size_t x_len,
                               double *cred_out,
                               double *repair_out,
                               size_t repair_len);

/**
 * Loads a data directory (catalog, documents, embeddings, aliases, ...).
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` writable.
 */
enum KgStatus kg_corpus_load(const char *dir, struct KgCorpus **out);

/**
 * Releases a corpus. Null is ignored.
 *
 * # Safety
 * `corpus` must come from [`kg_corpus_load`] and not be used afterwards.
 */
void kg_corpus_free(struct KgCorpus *corpus);

/**
 * Number of catalog classes, including the reserved cannot-repair class.
 *
 * # Safety
 * `corpus` must be a live handle or null.
 */
size_t kg_corpus_num_classes(const struct KgCorpus *corpus);

/**
 * Name of class `index`, owned by the corpus; null when out of range.
 *
 * # Safety
 * `corpus` must be a live handle or null.
 */
const char *kg_corpus_relation_name(const struct KgCorpus *corpus, size_t index);

/**
 * Judges one fact from all relevant sentences of its document (expert
 * frame mapping).
 *
 * # Safety
 * String arguments must be NUL-terminated, handles live and `out` writable.
 */
enum KgStatus kg_predict(const struct KgModel *model,
                         const struct KgCorpus *corpus,
                         const char *subject,
                         const char *relation,
                         const char *object,
                         const char *doc_id,
                         struct KgVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KGCRED_H */

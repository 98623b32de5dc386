#ifndef QENS_H
#define QENS_H

/* Generated by cbindgen from the qens-ffi crate; edit the Rust source instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome. Anything other than `Ok` stores a message readable via
 * `qens_last_error` on the calling thread.
 */
typedef enum QensStatus {
  QENS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  QENS_STATUS_NULL_ARGUMENT = 1,
  /**
   * Invalid configuration or argument values.
   */
  QENS_STATUS_INVALID_CONFIG = 2,
  /**
   * The training data is malformed or cannot be learned from.
   */
  QENS_STATUS_BAD_DATASET = 3,
  /**
   * A numeric or simulation failure.
   */
  QENS_STATUS_NUMERIC_FAILURE = 4,
  /**
   * The operating system reported an input/output problem.
   */
  QENS_STATUS_IO_FAILURE = 5,
  /**
   * An internal invariant broke; affected handles are unspecified.
   */
  QENS_STATUS_PANIC = 6,
} QensStatus;

/**
 * Opaque training-set handle.
 */
typedef struct QensDataset QensDataset;

/**
 * Opaque trained-ensemble handle.
 */
typedef struct QensEnsemble QensEnsemble;

/**
 * Classifier selector; pass one of the `QENS_CLASSIFIER_*` constants.
 */
typedef uint32_t QensClassifier;

/**
 * One classification result. `ancilla_success` is NaN for kinds without
 * a post-selection stage.
 */
typedef struct QensPrediction {
  /**
   * Expectation of the favorable-outcome observable, in [0, 1].
   */
  double expectation;
  /**
   * Probability read directly off the output register.
   */
  double raw;
  /**
   * Signed decision value; the label is its sign.
   */
  double score;
  /**
   * Post-selection success probability, NaN when not applicable.
   */
  double ancilla_success;
  /**
   * Predicted class, +1 or -1.
   */
  int8_t label;
} QensPrediction;

#define QENS_CLASSIFIER_COSINE 0

#define QENS_CLASSIFIER_DISTANCE 1

#define QENS_CLASSIFIER_SWAP_TEST 2

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the message of the most recent failing call on this thread,
 * or null when that call succeeded. The pointer stays valid until the
 * next `qens_*` call on the same thread.
 */
const char *qens_last_error(void);

/**
 * Loads a CSV training set. The file needs a header naming one column
 * `label`, holding -1/+1 (or 0/1) class labels; every other column is a
 * numeric feature.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid location for
 * the new handle. Release the handle with `qens_dataset_free`.
 */
enum QensStatus qens_dataset_load_csv(const char *path, struct QensDataset **out);

/**
 * Builds a training set from a row-major `num_samples` x `num_features`
 * matrix and per-row labels, each +1 or -1.
 *
 * # Safety
 * `features` must hold `num_samples * num_features` doubles, `labels`
 * `num_samples` bytes, and `out` a valid location for the new handle.
 */
enum QensStatus qens_dataset_from_arrays(const double *features,
                                         const int8_t *labels,
                                         size_t num_samples,
                                         size_t num_features,
                                         struct QensDataset **out);

/**
 * Number of training rows; 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live dataset handle.
 */
size_t qens_dataset_num_samples(const struct QensDataset *data);

/**
 * Number of feature columns; 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live dataset handle.
 */
size_t qens_dataset_num_features(const struct QensDataset *data);

/**
 * Releases a dataset handle; null is ignored.
 *
 * # Safety
 * `data` must be null or an owned handle not used after this call.
 */
void qens_dataset_free(struct QensDataset *data);

/**
 * Runs one exact classifier of the given kind against a test vector,
 * which is unit-normalized internally before encoding.
 *
 * # Safety
 * `data` must be a live dataset handle, `x` must hold `len` doubles and
 * `out` must be a valid location for the result.
 */
enum QensStatus qens_classify(const struct QensDataset *data,
                              QensClassifier kind,
                              const double *x,
                              size_t len,
                              struct QensPrediction *out);

/**
 * Trains an ensemble of 2^`control_qubits` internal classifiers on the
 * given data: exact branch expectations on the training rows, combined
 * by a fitted logistic stacking layer.
 *
 * # Safety
 * `data` must be a live dataset handle and `out` a valid location for
 * the new handle. Release the handle with `qens_ensemble_free`.
 */
enum QensStatus qens_ensemble_train(const struct QensDataset *data,
                                    QensClassifier kind,
                                    size_t control_qubits,
                                    struct QensEnsemble **out);

/**
 * Number of internal branches (2^control_qubits); 0 for a null handle.
 *
 * # Safety
 * `ens` must be null or a live ensemble handle.
 */
size_t qens_ensemble_num_branches(const struct QensEnsemble *ens);

/**
 * Copies the fitted branch weights (nonnegative, summing to 1) into
 * `out`, which must hold exactly `qens_ensemble_num_branches` entries.
 *
 * # Safety
 * `ens` must be a live ensemble handle and `out` must hold `len`
 * doubles.
 */
enum QensStatus qens_ensemble_weights(const struct QensEnsemble *ens, double *out, size_t len);

/**
 * Classifies a test vector with a trained ensemble. The score is the
 * fitted logistic logit and the label its sign; `ancilla_success`
 * reports the distance kind's conditional success rate.
 *
 * # Safety
 * `ens` must be a live ensemble handle, `x` must hold `len` doubles and
 * `out` must be a valid location for the result.
 */
enum QensStatus qens_ensemble_predict(const struct QensEnsemble *ens,
                                      const double *x,
                                      size_t len,
                                      struct QensPrediction *out);

/**
 * Releases an ensemble handle; null is ignored.
 *
 * # Safety
 * `ens` must be null or an owned handle not used after this call.
 */
void qens_ensemble_free(struct QensEnsemble *ens);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QENS_H */

#ifndef DBC_H
#define DBC_H

/* This file is generated by cbindgen from dbc-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible call.
 */
typedef enum DbcStatus {
  DBC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DBC_STATUS_NULL_POINTER = 1,
  /**
   * The file could not be read.
   */
  DBC_STATUS_IO_ERROR = 2,
  /**
   * The bytes are not a valid model (magic, version, truncation,
   * or non-finite values).
   */
  DBC_STATUS_FORMAT_ERROR = 3,
  /**
   * An argument value is outside its valid range.
   */
  DBC_STATUS_INVALID_ARGUMENT = 4,
  /**
   * An input length does not match the model dimensions.
   */
  DBC_STATUS_DIMENSION_MISMATCH = 5,
  /**
   * A provided buffer is too small.
   */
  DBC_STATUS_BUFFER_TOO_SMALL = 6,
} DbcStatus;

/**
 * Opaque handle to a loaded model.
 */
typedef struct DbcModel DbcModel;

/**
 * Opaque handle to a per-sample inference stream.
 */
typedef struct DbcStream DbcStream;

/**
 * Model dimensions and variant, filled by `dbc_model_info`.
 */
typedef struct DbcModelInfo {
  uint32_t n;
  uint32_t k1;
  uint32_t k2;
  uint32_t f;
  uint32_t l;
  uint32_t c;
  /**
   * 0 = nonlinear, 1 = linear, 2 = six-feature.
   */
  uint8_t variant;
} DbcModelInfo;

/**
 * Per-inference operation counts, filled by `dbc_op_counts`.
 */
typedef struct DbcOpCounts {
  uint64_t parameters;
  uint64_t adds;
  uint64_t abs_evals;
  uint64_t mults;
  uint64_t tanh_evals;
  uint64_t relu_ops;
  uint64_t argmax_ops;
} DbcOpCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Human-readable name for a status code. The returned pointer is static.
 */
const char *dbc_status_name(enum DbcStatus status);

/**
 * Deserialize a model from its binary format.
 *
 * On success writes a handle to `out`; release it with `dbc_model_free`.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes and `out` must be a valid
 * pointer to a handle slot.
 */
enum DbcStatus dbc_model_from_bytes(const uint8_t *bytes, size_t len, struct DbcModel **out);

/**
 * Load a model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid handle slot.
 */
enum DbcStatus dbc_model_load(const char *path, struct DbcModel **out);

/**
 * Release a model handle. Null is a no-op.
 *
 * # Safety
 * `model` must have come from `dbc_model_load`/`dbc_model_from_bytes` and
 * must not be used afterwards.
 */
void dbc_model_free(struct DbcModel *model);

/**
 * Fill `out` with the model's dimensions and variant.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum DbcStatus dbc_model_info(const struct DbcModel *model, struct DbcModelInfo *out);

/**
 * Size in bytes of the model's serialized form, for sizing the buffer
 * passed to `dbc_model_save`.
 *
 * # Safety
 * `model` must be a valid handle.
 */
size_t dbc_model_serialized_len(const struct DbcModel *model);

/**
 * Serialize the model into `buf` and write the byte count to `written`.
 *
 * # Safety
 * `buf` must hold at least `buf_len` writable bytes; `written` may be null.
 */
enum DbcStatus dbc_model_save(const struct DbcModel *model,
                              uint8_t *buf,
                              size_t buf_len,
                              size_t *written);

/**
 * Classify one whole segment given as three per-axis arrays of raw counts.
 *
 * `len` must equal the model's segment length `N`. The predicted class
 * index is written to `class_out`; when `features_out` is non-null it
 * receives the `F` feature values.
 *
 * # Safety
 * `x`, `y`, `z` must each point to `len` readable values; `class_out` must
 * be valid; `features_out` must be null or point to at least `F` floats.
 */
enum DbcStatus dbc_infer(const struct DbcModel *model,
                         const int16_t *x,
                         const int16_t *y,
                         const int16_t *z,
                         size_t len,
                         uint32_t *class_out,
                         float *features_out);

/**
 * Create a streaming inference handle bound to a copy of the model.
 *
 * # Safety
 * `model` must be a valid handle; `out` a valid handle slot.
 */
enum DbcStatus dbc_stream_new(const struct DbcModel *model, struct DbcStream **out);

/**
 * Push one triaxial sample.
 *
 * Writes 1 to `emitted` and fills `class_out` (and `features_out`, if
 * non-null, with `F` floats) when this push completes a segment; writes 0
 * otherwise. The stream resets itself after each emission.
 *
 * # Safety
 * `stream` and `emitted` must be valid; `class_out` must be valid when
 * `emitted` can fire; `features_out` must be null or hold `F` floats.
 */
enum DbcStatus dbc_stream_push(struct DbcStream *stream,
                               int16_t ax,
                               int16_t ay,
                               int16_t az,
                               int32_t *emitted,
                               uint32_t *class_out,
                               float *features_out);

/**
 * Drop any partial segment and return the stream to its initial state.
 *
 * # Safety
 * `stream` must be a valid handle.
 */
void dbc_stream_reset(struct DbcStream *stream);

/**
 * Release a stream handle. Null is a no-op.
 *
 * # Safety
 * `stream` must have come from `dbc_stream_new` and must not be used
 * afterwards.
 */
void dbc_stream_free(struct DbcStream *stream);

/**
 * Stored-parameter and per-inference operation counts for a configuration
 * of the full (nonlinear) pipeline.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DbcStatus dbc_op_counts(uint32_t n,
                             uint32_t k1,
                             uint32_t k2,
                             uint32_t f,
                             uint32_t l,
                             uint32_t c,
                             struct DbcOpCounts *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DBC_H */

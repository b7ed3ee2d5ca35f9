#ifndef CTBENCH_H
#define CTBENCH_H

#include <stddef.h>
#include <stdint.h>

typedef enum CtbStatus {
  CTB_STATUS_OK = 0,
  CTB_STATUS_NULL_POINTER = 1,
  CTB_STATUS_INVALID_ARGUMENT = 2,
  CTB_STATUS_SHAPE_MISMATCH = 3,
  CTB_STATUS_NOT_TRAINED = 4,
  CTB_STATUS_UNSUPPORTED = 5,
  CTB_STATUS_FIT_FAILED = 6,
  CTB_STATUS_IO = 7,
  CTB_STATUS_PANIC = 8,
} CtbStatus;

/**
 * Opaque generator handle.
 */
typedef struct CtbModel CtbModel;

typedef struct CtbOuParams {
  double theta;
  double mu;
  double sigma;
  double sigma_eq;
  double a;
  double b;
  size_t residual_count;
} CtbOuParams;

/**
 * Trading and risk metrics of one equity path. Undefined values are NaN;
 * an undefined IR-style ratio with a one-sided sign is +/-inf.
 */
typedef struct CtbCurveMetrics {
  double cagr;
  double sharpe;
  double mdd;
  double var95;
  double es95;
} CtbCurveMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next ctbench call on this thread.
 */
const char *ctb_last_error(void);

/**
 * Engine version as a static nul-terminated string.
 */
const char *ctb_version(void);

/**
 * Creates a model from a JSON spec such as `{"kind":"pca","components":"ev90"}`.
 *
 * # Safety
 * `spec_json` must be a nul-terminated string and `out` a writable pointer.
 */
enum CtbStatus ctb_model_new(const char *spec_json, uint64_t seed, struct CtbModel **out);

/**
 * # Safety
 * `model` must come from [`ctb_model_new`] and not be used afterwards.
 */
void ctb_model_free(struct CtbModel *model);

/**
 * Fits on an `n x len` training window ending just before grid hour `tau`.
 *
 * # Safety
 * `model` must be live; `train` must hold `n * len` doubles.
 */
enum CtbStatus ctb_model_fit(struct CtbModel *model,
                             const double *train,
                             size_t n,
                             size_t len,
                             size_t tau);

/**
 * Writes an `n x len` synthetic window to `out`.
 *
 * # Safety
 * `model` must be live; `out` must hold `n * len` doubles.
 */
enum CtbStatus ctb_model_generate(const struct CtbModel *model,
                                  size_t n,
                                  size_t len,
                                  uint64_t seed,
                                  double *out);

/**
 * Reconstructs an `n x len` window whose first column is grid hour `start`.
 *
 * # Safety
 * `model` must be live; `input` and `out` must hold `n * len` doubles.
 */
enum CtbStatus ctb_model_reconstruct(const struct CtbModel *model,
                                     const double *input,
                                     size_t n,
                                     size_t len,
                                     size_t start,
                                     double *out);

/**
 * Fits OU parameters to a residual series. Non-mean-reverting and
 * degenerate series return [`CtbStatus::FitFailed`].
 *
 * # Safety
 * `series` must hold `len` doubles; `out` must be writable.
 */
enum CtbStatus ctb_fit_ou(const double *series, size_t len, struct CtbOuParams *out);

/**
 * # Safety
 * `params` must be readable; `out` must be writable.
 */
enum CtbStatus ctb_s_score(double eps, const struct CtbOuParams *params, double *out);

/**
 * # Safety
 * `scores` and `out` must hold `n` doubles.
 */
enum CtbStatus ctb_stat_arb_weights(const double *scores, size_t n, double gamma, double *out);

/**
 * One cross-section of weights for `strategy` (`half_ls`, `csm`, `lotq`
 * or `pw`).
 *
 * # Safety
 * `strategy` must be a nul-terminated string; `predictions` and `out`
 * must hold `n` doubles.
 */
enum CtbStatus ctb_strategy_weights(const char *strategy,
                                    const double *predictions,
                                    size_t n,
                                    double *out);

/**
 * Simulates `n x s` weights against `n x s` log-returns; writes the `s`
 * equity values `V_1..V_s` to `equity_out`.
 *
 * # Safety
 * `weights` and `returns` must hold `n * s` doubles, `equity_out` `s`.
 */
enum CtbStatus ctb_simulate(const double *weights,
                            const double *returns,
                            size_t n,
                            size_t s,
                            double fee,
                            double v0,
                            double *equity_out);

/**
 * # Safety
 * `equity` must hold `s` doubles (`V_1..V_s`); `out` must be writable.
 */
enum CtbStatus ctb_curve_metrics(const double *equity,
                                 size_t s,
                                 double v0,
                                 struct CtbCurveMetrics *out);

/**
 * Spearman correlation; NaN when either side is constant.
 *
 * # Safety
 * `x` and `y` must hold `n` doubles; `out` must be writable.
 */
enum CtbStatus ctb_spearman(const double *x, const double *y, size_t n, double *out);

/**
 * Runs a benchmark config. `out_dir` may be null to use the config's
 * directory and `jobs` 0 for the default pool size. `all_ok` receives 1
 * when every cell succeeded.
 *
 * # Safety
 * `config_path` must be a nul-terminated string, `out_dir` null or one,
 * `all_ok` null or writable.
 */
enum CtbStatus ctb_run_config(const char *config_path,
                              const char *out_dir,
                              size_t jobs,
                              int *all_ok);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTBENCH_H */

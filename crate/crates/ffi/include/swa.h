#ifndef SWA_H
#define SWA_H

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum SwaStatus {
  SWA_STATUS_OK = 0,
  SWA_STATUS_NULL_ARGUMENT = 1,
  SWA_STATUS_INVALID_UTF8 = 2,
  SWA_STATUS_INVALID_CONFIG = 3,
  SWA_STATUS_NOT_FOUND = 4,
  SWA_STATUS_IO = 5,
  SWA_STATUS_FORMAT = 6,
  SWA_STATUS_LOOKUP = 7,
  SWA_STATUS_EMPTY = 8,
  SWA_STATUS_CHECKPOINT = 9,
  SWA_STATUS_INTERNAL = 10,
  SWA_STATUS_PANIC = 11,
} SwaStatus;

typedef enum SwaFormat {
  // Tab-separated user, timestamp, artist id, artist name, track id, track name.
  SWA_FORMAT_LASTFM1K = 0,
  // Tab-separated user, artist, RFC 3339 timestamp.
  SWA_FORMAT_GENERIC = 1,
} SwaFormat;

typedef enum SwaVariant {
  SWA_VARIANT_SESSION = 0,
  SWA_VARIANT_SWA = 1,
} SwaVariant;

// Sessionized play logs.
typedef struct SwaDataset SwaDataset;

// Point estimates of a trained chain.
typedef struct SwaEstimates SwaEstimates;

// A Gibbs chain.
typedef struct SwaModel SwaModel;

// Smoothing parameters. Fill with [`swa_hyperparameters_default`] and
// override fields as needed.
typedef struct SwaHyperparameters {
  size_t topics;
  double alpha;
  double beta;
  double gamma;
  double rho;
  enum SwaVariant variant;
} SwaHyperparameters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, or NULL. The
// pointer stays valid until the next failing call on the same thread.
const char *swa_last_error(void);

// Library version as a static NUL-terminated string.
const char *swa_version(void);

// Reads a sessionized dataset file written by `swa ingest`.
enum SwaStatus swa_dataset_read(const char *file, struct SwaDataset **out);

// Parses raw play logs, drops artists with at most `min_users_per_artist`
// distinct users and splits sessions at gaps of `gap_minutes` or more.
enum SwaStatus swa_dataset_ingest(const char *file,
                                  enum SwaFormat format,
                                  double gap_minutes,
                                  size_t min_users_per_artist,
                                  struct SwaDataset **out);

// Writes the dataset in the sessionized TSV format.
enum SwaStatus swa_dataset_write(const struct SwaDataset *dataset, const char *file);

// Writes user, artist, session and log counts; any output may be NULL.
enum SwaStatus swa_dataset_stats(const struct SwaDataset *dataset,
                                 size_t *users,
                                 size_t *artists,
                                 size_t *sessions,
                                 size_t *logs);

void swa_dataset_free(struct SwaDataset *dataset);

// Default smoothing for `topics` topics over `num_artists` artists.
struct SwaHyperparameters swa_hyperparameters_default(size_t topics,
                                                      size_t num_artists,
                                                      enum SwaVariant variant);

// Starts a chain on `dataset` from a random state drawn with `seed`.
enum SwaStatus swa_model_new(const struct SwaDataset *dataset,
                             const struct SwaHyperparameters *hyperparameters,
                             uint64_t seed,
                             struct SwaModel **out);

// Runs `sweeps` Gibbs sweeps. `log_joint` (may be NULL) receives the log
// joint after the last sweep.
enum SwaStatus swa_model_sweep(struct SwaModel *model, uint64_t sweeps, double *log_joint);

enum SwaStatus swa_model_sweeps_done(const struct SwaModel *model, uint64_t *out);

enum SwaStatus swa_model_save(const struct SwaModel *model, const char *file);

enum SwaStatus swa_model_load(const char *file, struct SwaModel **out);

void swa_model_free(struct SwaModel *model);

// Point estimates from the chain's current state.
enum SwaStatus swa_estimates_new(const struct SwaModel *model, struct SwaEstimates **out);

enum SwaStatus swa_estimates_load(const char *file, struct SwaEstimates **out);

enum SwaStatus swa_estimates_save(const struct SwaEstimates *estimates, const char *file);

// Predictive probability that `user` plays `artist`.
enum SwaStatus swa_estimates_song_prob(const struct SwaEstimates *estimates,
                                       const char *user,
                                       const char *artist,
                                       double *out);

// Writes (lambda_0, lambda_1) of `user` into `out[0]`, `out[1]`.
enum SwaStatus swa_estimates_lambda(const struct SwaEstimates *estimates,
                                    const char *user,
                                    double *out);

// Perplexity of `test` under the estimates; unknown users and artists are
// skipped. `skipped` may be NULL.
enum SwaStatus swa_estimates_perplexity(const struct SwaEstimates *estimates,
                                        const struct SwaDataset *test,
                                        double *out,
                                        size_t *skipped);

void swa_estimates_free(struct SwaEstimates *estimates);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWA_H */

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The agbfm Authors

/*
 * C interface to the agbfm pipeline.
 *
 * Every function returning agb_status records the failure of the calling
 * thread; agb_last_error_code() and agb_last_error_message() read it back
 * until the next failing call. Strings returned through char** are owned by
 * the caller and released with agb_string_free(). Path arguments documented
 * as optional fall back to the `paths` section of the config when NULL.
 */
#ifndef AGB_AGB_H
#define AGB_AGB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AGB_API __declspec(dllexport)
#else
#define AGB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum agb_status {
  AGB_OK = 0,
  AGB_ERR_INTERNAL = 1,
  AGB_ERR_CONFIG = 2,
  AGB_ERR_DATA = 3,
  AGB_ERR_NUMERIC = 4,
  AGB_ERR_INVALID_ARGUMENT = 5
} agb_status;

typedef enum agb_log_level {
  AGB_LOG_DEBUG = 0,
  AGB_LOG_INFO = 1,
  AGB_LOG_WARN = 2,
  AGB_LOG_ERROR = 3,
  AGB_LOG_OFF = 4
} agb_log_level;

typedef struct agb_config agb_config;
typedef struct agb_report agb_report;

AGB_API const char* agb_version(void);

/* Process exit status for a result: 0, 1 internal, 2 config, 3 data or
 * invalid argument, 4 numeric fault. */
AGB_API int agb_exit_code(agb_status status);
/* Machine-readable code of the last failure on this thread, such as
 * "E_EMPTY_SPLIT"; "" when none. */
AGB_API const char* agb_last_error_code(void);
AGB_API const char* agb_last_error_message(void);

AGB_API void agb_string_free(char* s);
AGB_API void agb_set_log_level(agb_log_level level);
/* Caps worker threads; 0 restores the hardware default. */
AGB_API void agb_set_threads(int n);

/* ---- configuration ---- */

/* All defaults. */
AGB_API agb_status agb_config_new(agb_config** out);
AGB_API agb_status agb_config_load(const char* path, agb_config** out);
AGB_API agb_status agb_config_parse(const char* json, agb_config** out);
AGB_API void agb_config_free(agb_config* cfg);
AGB_API agb_status agb_config_set_seed(agb_config* cfg, uint64_t seed);
AGB_API agb_status agb_config_seed(const agb_config* cfg, uint64_t* seed);
/* Canonical JSON with every default filled in. `indent` < 0 gives the
 * compact form that the hash is computed over. */
AGB_API agb_status agb_config_json(const agb_config* cfg, int indent, char** out);
/* 16 hex digits plus the terminator. */
AGB_API agb_status agb_config_hash(const agb_config* cfg, char out[17]);

/* ---- subcommands ---- */

AGB_API agb_status agb_synth(const agb_config* cfg, const char* out_dir /* optional */);
AGB_API agb_status agb_composite(const agb_config* cfg, const char* scenes_dir /* optional */,
                                 const char* out_base /* optional */);
AGB_API agb_status agb_build_dataset(const agb_config* cfg, const char* composite /* optional */,
                                     const char* points /* optional */, const char* ecomap /* optional */,
                                     const char* out_dir /* optional */);
AGB_API agb_status agb_pretrain(const agb_config* cfg, const char* data_dir /* optional */,
                                const char* out_ckpt /* optional */);
/* `region` is NULL for all regions or one of "EC1", "EC2", "EC3". */
AGB_API agb_status agb_finetune(const agb_config* cfg, const char* encoder /* optional */,
                                const char* data_dir /* optional */, const char* region,
                                const char* out_ckpt /* optional */);
AGB_API agb_status agb_train_unet(const agb_config* cfg, const char* data_dir /* optional */, const char* region,
                                  const char* out_ckpt /* optional */);
/* `models` is one checkpoint or "EC1=a,EC2=b,EC3=c" (optional: the fine-tuned
 * GFM path). `bins` is an edge list such as "0,50,100" and `formats` a list
 * such as "csv,json,svg"; NULL keeps the config values. `name` is the report
 * model id (NULL: the checkpoint's model kind). `out_base` defaults to
 * <reports>/<name>. */
AGB_API agb_status agb_evaluate(const agb_config* cfg, const char* models, const char* data_dir, const char* bins,
                                const char* name, const char* formats, const char* out_base);
/* `inputs` is a comma-separated list of .csv or .json reports. */
AGB_API agb_status agb_render_report(const char* inputs, const char* out_svg);

/* One finished check. */
typedef void (*agb_check_callback)(const char* name, uint64_t seed, double max_rel_error, int passed,
                                   void* user);
/* `op` and `model` may be NULL; with both NULL everything is checked.
 * `failures` receives the number of failed checks. A failed check is not an
 * error status. */
AGB_API agb_status agb_grad_check(const char* op, const char* model, int seeds, agb_check_callback on_check,
                                  void* user, int* failures);

/* ---- reports ---- */

AGB_API agb_status agb_report_read(const char* path, agb_report** out);
AGB_API void agb_report_free(agb_report* report);
AGB_API int agb_report_bin_count(const agb_report* report);
/* Number of strata: "all" plus each eco-region present. */
AGB_API int agb_report_stratum_count(const agb_report* report);
/* Name of stratum `index`; valid while the report lives. */
AGB_API const char* agb_report_stratum_name(const agb_report* report, int index);
/* `bin` < 0 selects the stratum total. `rmse` is NaN for an empty bin. `lo`
 * and `hi` may be NULL; `hi` is +inf for the open last bin. */
AGB_API agb_status agb_report_value(const agb_report* report, const char* stratum, int bin, int64_t* n,
                                    double* rmse, double* lo, double* hi);

#ifdef __cplusplus
}
#endif

#endif /* AGB_AGB_H */

/* C interface for the relevance refinery pipeline.
 *
 * All functions taking an rr_context report failures through the returned
 * rr_status; rr_last_error(ctx) holds a message for the most recent failure
 * on that context. Strings returned through char** out-parameters are heap
 * allocated and must be released with rr_string_free.
 */
#ifndef RELEVANCE_REFINERY_H
#define RELEVANCE_REFINERY_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rr_status {
  RR_OK = 0,
  RR_ERR_IO = 1,
  RR_ERR_PARSE = 2,
  RR_ERR_VALIDATION = 3,
  RR_ERR_CONFIG = 4,
  RR_ERR_USAGE = 5,
  RR_ERR_INTERNAL = 6
} rr_status;

typedef enum rr_task { RR_TASK_QC = 0, RR_TASK_QI = 1 } rr_task;

/* Tagging strategy flags, OR-able. */
enum {
  RR_TAG_LT = 1u << 0,
  RR_TAG_HCT = 1u << 1,
  RR_TAG_SIT = 1u << 2,
  RR_TAG_DG = 1u << 3
};

typedef struct rr_context rr_context;

const char* rr_version(void);

rr_context* rr_context_new(void);
void rr_context_free(rr_context* ctx);

/* Message for the most recent failed call on ctx; empty string if none.
 * The pointer stays valid until the next failed call or rr_context_free. */
const char* rr_last_error(const rr_context* ctx);

void rr_string_free(char* s);

rr_status rr_load_config(rr_context* ctx, const char* path);
rr_status rr_set_jobs(rr_context* ctx, int jobs);
/* Effective configuration as canonical JSON. */
rr_status rr_config_json(rr_context* ctx, char** out_json);

/* Synthetic corpus generation. languages_csv example: "en,es,ja". */
rr_status rr_synth(rr_context* ctx, rr_task task, const char* languages_csv,
                   int per_language_count, double positive_ratio, double noise_rate,
                   double overlap_fraction, uint64_t seed, const char* out_path);

/* Per-language counts and positive ratios as JSON. */
rr_status rr_stats(rr_context* ctx, rr_task task, const char* in_path, char** out_json);

/* Quality refinement. predictions_path, guards_path and profile_out_path may
 * be NULL. The report JSON is written to report_path and also returned via
 * out_report_json when non-NULL. */
rr_status rr_refine(rr_context* ctx, rr_task task, const char* in_path, const char* out_path,
                    const char* predictions_path, const char* guards_path,
                    const char* report_path, const char* profile_out_path,
                    char** out_report_json);

/* Tagging. rules_path and gen_file_path may be NULL (built-in rule table and
 * extractive generation). tag_flags is an OR of RR_TAG_* values. */
rr_status rr_tag(rr_context* ctx, rr_task task, const char* in_path, const char* out_path,
                 unsigned tag_flags, const char* rules_path, const char* gen_file_path);

/* Prompt construction. template_path NULL selects the built-in template for
 * the task; icl_pool_path NULL disables in-context examples. */
rr_status rr_prompt(rr_context* ctx, rr_task task, const char* in_path, const char* out_path,
                    const char* template_path, const char* icl_pool_path, int icl_pos,
                    int icl_neg, int training_export);

/* Prediction. predictor is "lexical" (profile_path required) or "external"
 * (probs_path required). Summary JSON returned via out_summary_json when
 * non-NULL. */
rr_status rr_predict(rr_context* ctx, rr_task task, const char* in_path, const char* predictor,
                     const char* profile_path, const char* probs_path, const char* out_path,
                     char** out_summary_json);

/* Scoring. labels_path is labeled JSONL or a 0/1 line file. */
rr_status rr_eval(rr_context* ctx, rr_task task, const char* preds_path,
                  const char* labels_path, char** out_report_json);

/* Ablation grid from a JSON config; returns the JSON grid, and the aligned
 * text table via out_table when non-NULL. */
rr_status rr_ablate(rr_context* ctx, const char* grid_config_path, char** out_grid_json,
                    char** out_table);

/* Small pure helpers. rr_overall_score returns NaN when either input is
 * outside [0, 1]. */
double rr_overall_score(double f1_qc, double f1_qi);
rr_status rr_f1_score(rr_context* ctx, const int32_t* preds, const int32_t* labels, size_t n,
                      double* out_f1);
rr_status rr_tag_language(rr_context* ctx, const char* language, const char* query, char** out);
rr_status rr_tag_category_path(rr_context* ctx, const char* joined_path, char** out);
rr_status rr_sha256_hex(rr_context* ctx, const void* data, size_t len, char** out_hex);
rr_status rr_file_sha256(rr_context* ctx, const char* path, char** out_hex);

#ifdef __cplusplus
}
#endif

#endif /* RELEVANCE_REFINERY_H */

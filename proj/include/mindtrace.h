#ifndef MINDTRACE_H
#define MINDTRACE_H

/* C interface to the mindtrace timeline-analysis library.
 *
 * Usage pattern: create a context, point it at the schema / lexicon /
 * stopword resources, adjust options, then run file-to-file pipeline
 * operations. All functions return MT_OK or an error status; the message
 * for the most recent failure on a context is available through
 * mt_last_error until the next call on that context.
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mt_status {
    MT_OK = 0,
    MT_ERR_PARSE = 1,      /* malformed input document */
    MT_ERR_VALIDATION = 2, /* well-formed input violating a contract */
    MT_ERR_RANGE = 3,      /* argument outside its documented range */
    MT_ERR_TRANSPORT = 4,  /* inference endpoint unreachable */
    MT_ERR_TIMEOUT = 5,    /* endpoint connection or read timed out */
    MT_ERR_ENDPOINT = 6,   /* endpoint returned a non-2xx status */
    MT_ERR_EXHAUSTED = 7,  /* structured response invalid after all retries */
    MT_ERR_INTERNAL = 8
} mt_status;

typedef struct mt_ctx mt_ctx;

const char* mt_version(void);

mt_ctx* mt_ctx_new(void);
void mt_ctx_free(mt_ctx* ctx);

/* Message of the most recent failure; empty string when the last call
 * succeeded. Owned by the context. */
const char* mt_last_error(const mt_ctx* ctx);

/* ---- resources and configuration ---- */

mt_status mt_load_schema(mt_ctx* ctx, const char* path);
mt_status mt_load_lexicons(mt_ctx* ctx, const char* negative_path, const char* positive_path);
mt_status mt_load_stopwords(mt_ctx* ctx, const char* path);

/* Backend config as JSON text; NULL or "" restores defaults. The caller is
 * responsible for layering environment or flag overrides into the JSON. */
mt_status mt_set_backend_json(mt_ctx* ctx, const char* json_text);

/* String-typed option setter. Keys:
 *   seed, jobs,
 *   tagger.k, tagger.min_match,
 *   trees.n_trees, trees.max_depth, trees.min_samples_leaf,
 *   trees.pos_weight_cap, trees.threshold,
 *   summary.direction_threshold, summary.max_features, summary.aggregate_mean,
 *   miner.batch_size
 */
mt_status mt_set_option(mt_ctx* ctx, const char* key, const char* value);

/* ---- pipeline operations (input file(s) -> output file) ---- */

mt_status mt_extract_signatures(mt_ctx* ctx, const char* timelines_path, const char* out_path);
mt_status mt_tag(mt_ctx* ctx, const char* signatures_path, const char* timelines_path,
                 const char* out_path);

mt_status mt_train_presence(mt_ctx* ctx, const char* timelines_path, const char* model_out_path);
mt_status mt_score_presence(mt_ctx* ctx, const char* model_path, const char* input_path,
                            const char* out_path);

mt_status mt_train_change(mt_ctx* ctx, const char* timelines_path, const char* model_out_path);
mt_status mt_detect_tree(mt_ctx* ctx, const char* model_path, const char* timelines_path,
                         const char* out_path);
mt_status mt_detect_llm(mt_ctx* ctx, const char* fewshot_path, const char* timelines_path,
                        const char* out_path);

mt_status mt_summarize_template(mt_ctx* ctx, const char* timelines_path, const char* out_path);
/* examples_path may be NULL for zero-shot prompting. */
mt_status mt_summarize_llm(mt_ctx* ctx, const char* timelines_path, const char* examples_path,
                           const char* out_path);

mt_status mt_mine_signatures(mt_ctx* ctx, const char* bundles_path, const char* out_path);
mt_status mt_augment(mt_ctx* ctx, const char* request_path, const char* out_path);

mt_status mt_evaluate_task1(mt_ctx* ctx, const char* preds_path, const char* gold_path,
                            const char* out_path);
mt_status mt_evaluate_task2(mt_ctx* ctx, const char* preds_path, const char* gold_path,
                            const char* out_path);
/* Leaderboard-style evaluation: correlation over the Task 1 rankings CSV and
 * rank averaging over the Task 3.1 metrics CSV. Either path may be NULL. */
mt_status mt_evaluate_rankings(mt_ctx* ctx, const char* task1_csv_path,
                               const char* task31_csv_path, const char* out_path);

mt_status mt_kfold(mt_ctx* ctx, const char* timelines_path, int k, const char* out_path);

/* ---- scalar helpers ---- */

mt_status mt_pos_weight(mt_ctx* ctx, double n_neg, double n_pos, double cap, double* out);
mt_status mt_llr_score(mt_ctx* ctx, double k11, double k12, double k21, double k22, double* out);
mt_status mt_rouge_l_recall(mt_ctx* ctx, const char* candidate, const char* reference,
                            double* out);

#ifdef __cplusplus
}
#endif

#endif /* MINDTRACE_H */

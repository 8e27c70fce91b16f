#ifndef TCR_TCR_H
#define TCR_TCR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TCR_API __declspec(dllexport)
#else
#define TCR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tcr_status {
  TCR_OK = 0,
  TCR_E_INVALID_ARGUMENT = 1,
  TCR_E_CONFIG = 2,
  TCR_E_DIMENSION = 3,
  TCR_E_DEGENERATE = 4,
  TCR_E_DOMAIN = 5,
  TCR_E_CAPACITY = 6,
  TCR_E_EMPTY_INPUT = 7,
  TCR_E_MISSING_EMBEDDING = 8,
  TCR_E_FORMAT = 9,
  TCR_E_IO = 10,
  TCR_E_REMOTE = 11,
  TCR_E_PROVIDER = 12,
  TCR_E_INTERNAL = 99
} tcr_status;

/* Message of the last failed call on the calling thread; "" after success. */
TCR_API const char* tcr_last_error(void);
TCR_API const char* tcr_status_name(tcr_status status);
TCR_API const char* tcr_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
TCR_API void tcr_string_free(char* s);

/* ---- configuration ---- */

typedef struct tcr_config tcr_config;

/* json_text may be NULL for defaults. TCR_EMBED_URL / TCR_LLM_URL override. */
TCR_API tcr_status tcr_config_create(const char* json_text, tcr_config** out);
TCR_API tcr_status tcr_config_load(const char* path, tcr_config** out);
TCR_API void tcr_config_free(tcr_config* cfg);
TCR_API tcr_status tcr_config_set_seed(tcr_config* cfg, uint64_t seed);
TCR_API tcr_status tcr_config_to_json(const tcr_config* cfg, char** out);

/* ---- pipeline stages ---- */

TCR_API tcr_status tcr_gen_data(const tcr_config* cfg, const char* triples_path, const char* qa_path);

/* Trains on the train split; summary_json may be NULL. */
TCR_API tcr_status tcr_train(const tcr_config* cfg, const char* triples_path, const char* checkpoint_path,
                             char** summary_json);

typedef struct tcr_model tcr_model;

TCR_API tcr_status tcr_model_load(const tcr_config* cfg, const char* checkpoint_path, tcr_model** out);
TCR_API void tcr_model_free(tcr_model* model);
TCR_API tcr_status tcr_model_hash(const tcr_model* model, char** out);

typedef struct tcr_signals {
  double sigma_sem;
  double sigma_fact;
  double sigma_ans;
} tcr_signals;

/* sigma_ans outside [0, 1] (e.g. NAN) asks the configured answerability provider. */
TCR_API tcr_status tcr_model_signals(const tcr_model* model, const tcr_config* cfg, const char* query,
                                     const char* context, double sigma_ans, tcr_signals* out);
TCR_API tcr_status tcr_signals_batch(const tcr_model* model, const tcr_config* cfg, const char* in_path,
                                     const char* out_path);

/* split: "train", "dev", "test" or "all". */
TCR_API tcr_status tcr_detect(const tcr_model* model, const tcr_config* cfg, const char* triples_path,
                              const char* split, char** report_json);

/* Fits on the train split and writes test-split points; pca_csv_path may be NULL. */
TCR_API tcr_status tcr_probe2d(const tcr_config* cfg, const char* triples_path, const char* points_csv_path,
                               const char* pca_csv_path, char** summary_json);

/* csv_path and surrogate_report_path may be NULL. */
TCR_API tcr_status tcr_eval(const tcr_config* cfg, const char* qa_path, const char* checkpoint_path,
                            const char* report_path, const char* csv_path, const char* surrogate_report_path);

/* ---- policy ---- */

typedef enum tcr_verdict { TCR_TRUST_MEMORY = 0, TCR_TRUST_CONTEXT = 1, TCR_FLAG_CONFLICT = 2 } tcr_verdict;

/* decision_json may be NULL. */
TCR_API tcr_status tcr_decide(const tcr_config* cfg, const tcr_signals* signals, tcr_verdict* verdict,
                              char** decision_json);
TCR_API tcr_status tcr_render_hard_prompt(const tcr_signals* signals, char** out);

/* ---- theory ---- */

typedef struct tcr_pipeline_params {
  double rho;
  double fnr;
  double fpr;
  double eps;
  double beta;
  double zeta;
} tcr_pipeline_params;

typedef struct tcr_sim_result {
  double delta_hat;
  double std_error;
  uint64_t n;
  uint64_t branch_counts[4]; /* R0D0, R0D1, R1D0, R1D1 */
} tcr_sim_result;

TCR_API void tcr_pipeline_params_default(tcr_pipeline_params* out);
TCR_API tcr_status tcr_exact_gap(const tcr_pipeline_params* p, double* out);
TCR_API tcr_status tcr_upper_bound(const tcr_pipeline_params* p, double* out);
TCR_API tcr_status tcr_simulate(const tcr_pipeline_params* p, uint64_t n, uint64_t seed, tcr_sim_result* out);

/* grid_json: {"rho": [...], ...}; unlisted parameters keep their defaults. */
TCR_API tcr_status tcr_bound_sweep(const char* grid_json, uint64_t n, uint64_t seed, char** csv);

/* ---- service ---- */

typedef struct tcr_server tcr_server;

TCR_API tcr_status tcr_server_create(const tcr_config* cfg, tcr_server** out);
/* port 0 binds an ephemeral port; bound_port may be NULL. */
TCR_API tcr_status tcr_server_bind(tcr_server* server, const char* host, int port, int* bound_port);
TCR_API tcr_status tcr_server_start(tcr_server* server);
TCR_API tcr_status tcr_server_load_checkpoint(tcr_server* server, const char* path);
TCR_API tcr_status tcr_server_wait(tcr_server* server);
TCR_API tcr_status tcr_server_stop(tcr_server* server);
TCR_API void tcr_server_free(tcr_server* server);

#ifdef __cplusplus
}
#endif

#endif

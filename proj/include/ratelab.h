/*
 * ratelab C API: a desk-scale laboratory for Bayesian posterior contraction
 * under misspecification, over finite alphabets.
 *
 * The library is a C++ core behind this flat extern "C" surface: opaque
 * handles, integer status codes, and a per-thread last-error message.
 * Every handle returned by a *_create/_load/_init/_run call owns its object
 * and must be released with the matching *_free.
 */
#ifndef RATELAB_H
#define RATELAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rl_status {
    RL_OK = 0,
    RL_ERR_NULL_ARGUMENT = 1,
    RL_ERR_DIMENSION = 2,
    RL_ERR_DOMAIN = 3,
    RL_ERR_VALIDATION = 4,
    RL_ERR_IO = 5,
    RL_ERR_SIZE_LIMIT = 6,
    RL_ERR_NO_PROJECTION = 7,
    RL_ERR_PROJECTION_TIE = 8,
    RL_ERR_NULL_CONDITIONING = 9,
    RL_ERR_UNDEFINED_POSTERIOR = 10,
    RL_ERR_UNCOVERABLE = 11,
    RL_ERR_UNRESOLVED = 12,
    RL_ERR_CONFIG = 13,
    RL_ERR_USAGE = 14,
    RL_ERR_INTERNAL = 15
} rl_status;

const char* rl_version(void);
const char* rl_status_name(rl_status status);

/* Message for the most recent failing call on this thread; empty if none. */
const char* rl_last_error(void);

/* ---- densities ------------------------------------------------------- */

typedef struct rl_density rl_density;

rl_status rl_density_create(const double* probs, size_t alphabet_size, rl_density** out);
void rl_density_free(rl_density* density);
size_t rl_density_alphabet_size(const rl_density* density);
rl_status rl_density_prob(const rl_density* density, size_t symbol, double* out);

/* Divergences and affinities. Infinite values are returned as +inf. */
rl_status rl_kl_divergence(const rl_density* p0, const rl_density* p, double* out);
rl_status rl_alpha_log_affinity(const rl_density* p0, const rl_density* p,
                                const rl_density* pstar, double alpha, double* out);
rl_status rl_sup_alpha_log_affinity(const rl_density* p0, const rl_density* p,
                                    const rl_density* pstar, double* alpha_out,
                                    double* value_out);
rl_status rl_gen_hellinger_sq(const rl_density* p1, const rl_density* p2,
                              const rl_density* p0, const rl_density* pstar, double* out);

/* ---- family + prior --------------------------------------------------- */

typedef struct rl_family rl_family;

rl_status rl_family_create(rl_family** out);
rl_status rl_family_add(rl_family* family, const char* label, const double* probs,
                        size_t alphabet_size);
/* Default prior is uniform; weights must align with the members added so far. */
rl_status rl_family_set_prior(rl_family* family, const double* weights, size_t count);
size_t rl_family_size(const rl_family* family);
void rl_family_free(rl_family* family);

/* KL projection of `truth` onto the family. `unique_out` is 0 when another
 * member attains the minimum within 1e-10; the tie is surfaced, not broken. */
rl_status rl_kl_projection(const rl_family* family, const double* truth_probs,
                           size_t alphabet_size, size_t* index_out, double* kl_out,
                           int* unique_out, double* runner_up_gap_out);

/* ---- sequential posterior --------------------------------------------- */

typedef struct rl_posterior rl_posterior;

rl_status rl_posterior_init(const rl_family* family, size_t pstar_index, rl_posterior** out);
rl_status rl_posterior_update(rl_posterior* posterior, size_t symbol);
rl_status rl_posterior_n(const rl_posterior* posterior, size_t* out);
rl_status rl_posterior_mass(const rl_posterior* posterior, const size_t* indices,
                            size_t count, double* out);
rl_status rl_posterior_log_evidence(const rl_posterior* posterior, double* out);
rl_status rl_posterior_log_ratio(const rl_posterior* posterior, size_t index, double* out);
/* Columnar snapshot (n, per-member log ratio and posterior weight). The
 * returned string lives until the next snapshot call on this handle. */
rl_status rl_posterior_snapshot_tsv(const rl_posterior* posterior, const char** out);
void rl_posterior_free(rl_posterior* posterior);

/* ---- configs and verb runs -------------------------------------------- */

typedef struct rl_config rl_config;
typedef struct rl_report rl_report;

rl_status rl_config_load(const char* path, rl_config** out);
rl_status rl_config_parse(const char* json_text, rl_config** out);
/* Canonical serialization; free with rl_string_free. */
rl_status rl_config_canonical_json(const rl_config* config, char** out);
void rl_config_free(rl_config* config);
void rl_string_free(char* text);

typedef struct rl_run_options {
    int has_seed;
    uint64_t seed;
    int has_replications;
    uint64_t replications;
    int mode;            /* 0 default, 1 exact, 2 monte-carlo (verify-decay) */
    int has_n;
    unsigned n;          /* reference n for cover/conditions/verify-* */
    const char* out_dir; /* NULL: no files written */
    const char* timestamp; /* NULL: current UTC time; pin for byte-identical reruns */
    unsigned threads;    /* 0: hardware concurrency */
} rl_run_options;

/* Subcommands: project | cover | simulate | verify-identity | verify-decay |
 * conditions | shells. A run that completes but fails its checked property
 * returns RL_OK with rl_report_passed() == 0. */
rl_status rl_run(const rl_config* config, const char* subcommand,
                 const rl_run_options* options, rl_report** out);

int rl_report_passed(const rl_report* report);
const char* rl_report_text(const rl_report* report);
const char* rl_report_summary_json(const rl_report* report);
size_t rl_report_file_count(const rl_report* report);
const char* rl_report_file_name(const rl_report* report, size_t i);
void rl_report_free(rl_report* report);

#ifdef __cplusplus
}
#endif

#endif /* RATELAB_H */

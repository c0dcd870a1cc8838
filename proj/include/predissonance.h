/* predissonance: 1D predissociation-resonance simulator, C API.
 *
 * All functionality is reachable through an opaque configuration handle plus
 * pdn_run(). Functions return PDN_OK (0) on success; on failure a
 * thread-local message is available from pdn_last_error(). Strings returned
 * through char** are heap-allocated and must be released with
 * pdn_string_free().
 */
#ifndef PREDISSONANCE_H
#define PREDISSONANCE_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
    PDN_OK = 0,
    PDN_ERR_COMPUTE = 1, /* a computation failed (or an accept run did not pass) */
    PDN_ERR_CONFIG = 2,  /* bad configuration, override, or usage */
    PDN_ERR_IO = 3,
    PDN_ERR_INVALID_ARG = 4
} pdn_status;

typedef struct pdn_config pdn_config;

pdn_status pdn_config_from_file(const char* path, pdn_config** out);
pdn_status pdn_config_from_json(const char* json_text, pdn_config** out);
/* dotted-key override, e.g. pdn_config_set(cfg, "h", "0.3") */
pdn_status pdn_config_set(pdn_config* cfg, const char* dotted_key, const char* value);
pdn_status pdn_config_json(const pdn_config* cfg, char** out_json);
/* 16 hex digits + NUL */
pdn_status pdn_config_hash(const pdn_config* cfg, char out_hex[17]);
void pdn_config_free(pdn_config* cfg);

typedef struct {
    const char* times; /* "t0:t1:n" or "t0:t1:n:log"; NULL = default grid */
    double theta;      /* distortion angle; <= 0 keeps the config value */
    int nu;            /* cutoff smoothness; < 0 keeps the config value */
} pdn_run_options;

/* command: validate | spectrum | resonances | evolve | compare | sweep | accept.
 * output_dir may be NULL (summary only; no files). The summary JSON is always
 * returned through out_json when the command ran far enough to produce one
 * (an accept run that fails its criteria returns PDN_ERR_COMPUTE *and* the
 * report). opts may be NULL. */
pdn_status pdn_run(const pdn_config* cfg, const char* command, const pdn_run_options* opts,
                   const char* output_dir, char** out_json);

const char* pdn_last_error(void);
void pdn_string_free(char* s);
const char* pdn_version(void);

#ifdef __cplusplus
}
#endif

#endif /* PREDISSONANCE_H */

#include "predissonance.h"

#include <cstring>
#include <nlohmann/json.hpp>
#include <string>

#include "core/config_io.hpp"
#include "core/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

pdn_status classify(const predisso::Error& e) {
    const std::string& code = e.code();
    if (code == "ConfigError" || code == "RampOutOfDomain") return PDN_ERR_CONFIG;
    if (code == "IoError") return PDN_ERR_IO;
    return PDN_ERR_COMPUTE;
}

template <typename Fn>
pdn_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const predisso::Error& e) {
        g_last_error = e.what();
        return classify(e);
    } catch (const std::exception& e) {
        g_last_error = std::string("InternalError: ") + e.what();
        return PDN_ERR_COMPUTE;
    }
}

}  // namespace

struct pdn_config {
    nlohmann::json raw;           // JSON form, kept for overrides
    predisso::ModelConfig parsed;  // validated view of raw
};

extern "C" {

pdn_status pdn_config_from_json(const char* json_text, pdn_config** out) {
    if (!json_text || !out) {
        g_last_error = "InvalidArg: null pointer";
        return PDN_ERR_INVALID_ARG;
    }
    return guarded([&] {
        auto j = nlohmann::json::parse(std::string(json_text), nullptr, false);
        if (j.is_discarded()) throw predisso::ConfigError("config is not valid JSON");
        auto cfg = predisso::config_from_json(j);
        *out = new pdn_config{std::move(j), std::move(cfg)};
        return PDN_OK;
    });
}

pdn_status pdn_config_from_file(const char* path, pdn_config** out) {
    if (!path || !out) {
        g_last_error = "InvalidArg: null pointer";
        return PDN_ERR_INVALID_ARG;
    }
    return guarded([&] {
        auto cfg = predisso::config_from_file(path);
        *out = new pdn_config{predisso::config_to_json(cfg), std::move(cfg)};
        return PDN_OK;
    });
}

pdn_status pdn_config_set(pdn_config* cfg, const char* dotted_key, const char* value) {
    if (!cfg || !dotted_key || !value) {
        g_last_error = "InvalidArg: null pointer";
        return PDN_ERR_INVALID_ARG;
    }
    return guarded([&] {
        nlohmann::json trial = cfg->raw;
        predisso::apply_override(trial, dotted_key, value);
        cfg->parsed = predisso::config_from_json(trial);  // validates before committing
        cfg->raw = std::move(trial);
        return PDN_OK;
    });
}

pdn_status pdn_config_json(const pdn_config* cfg, char** out_json) {
    if (!cfg || !out_json) {
        g_last_error = "InvalidArg: null pointer";
        return PDN_ERR_INVALID_ARG;
    }
    *out_json = dup_string(predisso::canonical_config_string(cfg->parsed));
    return *out_json ? PDN_OK : PDN_ERR_COMPUTE;
}

pdn_status pdn_config_hash(const pdn_config* cfg, char out_hex[17]) {
    if (!cfg || !out_hex) {
        g_last_error = "InvalidArg: null pointer";
        return PDN_ERR_INVALID_ARG;
    }
    std::string h = predisso::config_hash(cfg->parsed);
    std::memcpy(out_hex, h.c_str(), 17);
    return PDN_OK;
}

void pdn_config_free(pdn_config* cfg) { delete cfg; }

pdn_status pdn_run(const pdn_config* cfg, const char* command, const pdn_run_options* opts,
                   const char* output_dir, char** out_json) {
    if (!cfg || !command || !out_json) {
        g_last_error = "InvalidArg: null pointer";
        return PDN_ERR_INVALID_ARG;
    }
    *out_json = nullptr;
    return guarded([&]() -> pdn_status {
        predisso::RunOptions ro;
        if (opts) {
            if (opts->times) ro.times = opts->times;
            if (opts->theta > 0.0) ro.theta = opts->theta;
            if (opts->nu >= 0) ro.nu = opts->nu;
        }
        nlohmann::json summary = predisso::run_command(
            cfg->parsed, command, ro, output_dir ? std::string(output_dir) : std::string());
        *out_json = dup_string(summary.dump(2) + "\n");
        if (std::string(command) == "accept" && summary.contains("pass") &&
            !summary["pass"].get<bool>()) {
            g_last_error = "AcceptanceFailed: one or more criteria did not pass";
            return PDN_ERR_COMPUTE;
        }
        return PDN_OK;
    });
}

const char* pdn_last_error(void) { return g_last_error.c_str(); }

void pdn_string_free(char* s) { std::free(s); }

const char* pdn_version(void) { return "predissonance 1.0.0"; }

}  // extern "C"

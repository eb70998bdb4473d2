#include "gist/gist.h"

#include <cstring>
#include <string>

#include "common.hpp"
#include "json.hpp"
#include "pipeline.hpp"
#include "session.hpp"
#include "synthgen.hpp"

namespace {

thread_local std::string g_last_error = "no error";

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

gist_status classify_exception() {
    try {
        throw;
    } catch (const gist::ParseError& e) {
        g_last_error = e.what();
        return GIST_ERR_PARSE;
    } catch (const gist::InvariantError& e) {
        g_last_error = e.what();
        return GIST_ERR_INVALID;
    } catch (const gist::ConfigError& e) {
        g_last_error = e.what();
        return GIST_ERR_CONFIG;
    } catch (const gist::ContractViolation& e) {
        g_last_error = e.what();
        return GIST_ERR_CONTRACT;
    } catch (const gist::DivergenceError& e) {
        g_last_error = e.what();
        return GIST_ERR_DIVERGED;
    } catch (const gist::IoError& e) {
        g_last_error = e.what();
        return GIST_ERR_IO;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return GIST_ERR_RUNTIME;
    } catch (...) {
        g_last_error = "unknown error";
        return GIST_ERR_RUNTIME;
    }
}

template <typename Fn>
gist_status guarded(Fn&& fn) {
    try {
        fn();
        return GIST_OK;
    } catch (...) {
        return classify_exception();
    }
}

gist_status require(bool cond, const char* msg) {
    if (cond) return GIST_OK;
    g_last_error = msg;
    return GIST_ERR_CONTRACT;
}

gist_status run_stages(const char* config_json, char** summary_json, unsigned stages) {
    if (require(config_json != nullptr, "config_json must not be NULL") != GIST_OK) return GIST_ERR_CONTRACT;
    return guarded([&] {
        auto cfg = gist::pipeline::Config::from_json(config_json);
        auto res = gist::pipeline::run(cfg, stages);
        if (summary_json) *summary_json = dup_string(res.summary_json);
    });
}

}  // namespace

struct gist_session {
    gist::model::SessionRecording rec;
};

extern "C" {

const char* gist_version(void) { return "1.0.0"; }

const char* gist_status_name(gist_status status) {
    switch (status) {
        case GIST_OK: return "ok";
        case GIST_ERR_IO: return "io_error";
        case GIST_ERR_PARSE: return "parse_error";
        case GIST_ERR_INVALID: return "invariant_violation";
        case GIST_ERR_CONFIG: return "config_error";
        case GIST_ERR_CONTRACT: return "contract_violation";
        case GIST_ERR_DIVERGED: return "divergence";
        case GIST_ERR_RUNTIME: return "runtime_error";
    }
    return "unknown";
}

const char* gist_last_error(void) { return g_last_error.c_str(); }

void gist_string_free(char* s) { std::free(s); }

gist_status gist_session_load(const char* path, gist_session** out) {
    if (require(path && out, "path and out must not be NULL") != GIST_OK) return GIST_ERR_CONTRACT;
    return guarded([&] {
        auto handle = new gist_session{gist::model::load_session(path)};
        *out = handle;
    });
}

gist_status gist_session_save(const gist_session* s, const char* path) {
    if (require(s && path, "session and path must not be NULL") != GIST_OK) return GIST_ERR_CONTRACT;
    return guarded([&] { gist::model::save_session(s->rec, path); });
}

void gist_session_free(gist_session* s) { delete s; }

gist_status gist_session_participant_count(const gist_session* s, int* out) {
    if (require(s && out, "session and out must not be NULL") != GIST_OK) return GIST_ERR_CONTRACT;
    *out = s->rec.participant_count();
    return GIST_OK;
}

gist_status gist_session_span_seconds(const gist_session* s, double* out) {
    if (require(s && out, "session and out must not be NULL") != GIST_OK) return GIST_ERR_CONTRACT;
    *out = s->rec.span();
    return GIST_OK;
}

gist_status gist_session_validate_file(const char* path, char** violations_json) {
    if (require(path && violations_json, "path and out must not be NULL") != GIST_OK) return GIST_ERR_CONTRACT;
    return guarded([&] {
        auto rec = gist::model::parse_session(gist::read_text_file(path));
        gist::model::canonicalize(rec);
        auto violations = gist::model::validate_session(rec);
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& v : violations) arr.push_back({{"rule", v.rule}, {"detail", v.detail}});
        *violations_json = dup_string(arr.dump(2));
    });
}

gist_status gist_synth(const char* script_json, const char* session_path, const char* truth_csv_path) {
    if (require(script_json && session_path, "script and session path must not be NULL") != GIST_OK)
        return GIST_ERR_CONTRACT;
    return guarded([&] {
        auto script = gist::synth::parse_script(script_json);
        auto res = gist::synth::generate(script, gist::synth::default_presets());
        gist::model::save_session(res.session, session_path);
        if (truth_csv_path) gist::write_text_file(truth_csv_path, gist::synth::truth_to_csv(res));
    });
}

gist_status gist_run(const char* config_json, char** summary_json) {
    return run_stages(config_json, summary_json, gist::pipeline::kStageAll);
}
gist_status gist_sociograms(const char* config_json, char** summary_json) {
    return run_stages(config_json, summary_json, gist::pipeline::kStageSociograms);
}
gist_status gist_metrics(const char* config_json, char** summary_json) {
    return run_stages(config_json, summary_json, gist::pipeline::kStageMetrics);
}
gist_status gist_features(const char* config_json, char** summary_json) {
    return run_stages(config_json, summary_json, gist::pipeline::kStageFeatures);
}
gist_status gist_train(const char* config_json, char** summary_json) {
    return run_stages(config_json, summary_json,
                      gist::pipeline::kStageFeatures | gist::pipeline::kStageTrain | gist::pipeline::kStageCluster);
}
gist_status gist_cluster(const char* config_json, char** summary_json) {
    return run_stages(config_json, summary_json, gist::pipeline::kStageCluster);
}
gist_status gist_rules(const char* config_json, char** summary_json) {
    return run_stages(config_json, summary_json, gist::pipeline::kStageRules);
}
gist_status gist_analyze(const char* config_json, char** summary_json) {
    return run_stages(config_json, summary_json,
                      gist::pipeline::kStageMetrics | gist::pipeline::kStageCluster | gist::pipeline::kStageRules |
                          gist::pipeline::kStageAnalyze);
}

}  // extern "C"

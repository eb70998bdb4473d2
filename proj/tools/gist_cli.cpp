// gist command-line front end. Everything goes through the shared
// library's C API; this binary only parses arguments, assembles the
// config JSON, and prints results.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gist/gist.h"
#include "json.hpp"

namespace {

using nlohmann::json;

struct CommonOpts {
    std::vector<std::string> sessions;
    std::vector<std::string> truths;
    std::string config_path;
    std::string out_dir;
    std::string model_path;
    std::string tier_mode;
    std::string k_text;
    std::string lambda_text;
    double window = 32.0, stride = 16.0;
    double min_speech = 0.5, min_gaze = 0.013, max_prox = 1.5, grid_dt = 0.1;
    double lr = 3e-3;
    int epochs = 15, batch = 64;
    int fast_cap = 5000;
    int threads = 0;
    uint64_t seed = 0;
    bool no_fast_eval = false;
    bool skip_train = false;
    bool per_window_alpha = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_sessions) {
    if (needs_sessions)
        cmd->add_option("sessions", o.sessions, "session file(s), JSON-lines format")->required();
    cmd->add_option("--config", o.config_path, "JSON config file; flags override its values");
    cmd->add_option("--out", o.out_dir, "run output directory");
    cmd->add_option("--truth", o.truths, "planted-truth CSV per session (synthetic corpora)");
    cmd->add_option("--window", o.window, "window length, seconds (default 32)");
    cmd->add_option("--stride", o.stride, "window stride, seconds (default 16)");
    cmd->add_option("--min-speech", o.min_speech, "speech threshold, seconds (default 0.5)");
    cmd->add_option("--min-gaze", o.min_gaze, "gaze-overlap threshold, seconds (default 0.013)");
    cmd->add_option("--max-prox", o.max_prox, "proximity threshold, feet (default 1.5)");
    cmd->add_option("--grid-dt", o.grid_dt, "pose resample spacing, seconds (default 0.1)");
    cmd->add_option("--k", o.k_text, "cluster count, or 'auto' (default auto)");
    cmd->add_option("--lambda", o.lambda_text, "clustering loss weight, or 'sweep'");
    cmd->add_option("--seed", o.seed, "master RNG seed");
    cmd->add_option("--fast-eval-cap", o.fast_cap, "fast evaluation subsample cap (default 5000)");
    cmd->add_flag("--no-fast-eval", o.no_fast_eval, "evaluate on all segments");
    cmd->add_option("--tier-mode", o.tier_mode, "tier classification: percentile|fixed|zscore");
    cmd->add_option("--model", o.model_path, "model checkpoint to reuse");
    cmd->add_flag("--skip-train", o.skip_train, "label with --model instead of training");
    cmd->add_flag("--per-window-alpha", o.per_window_alpha, "fusion weights per window instead of per session");
    cmd->add_option("--lr", o.lr, "learning rate");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--batch", o.batch, "batch size");
    cmd->add_option("--threads", o.threads, "worker threads for model selection (0 = all)");
}

std::string build_config(const CLI::App* cmd, const CommonOpts& o) {
    json cfg = json::object();
    if (!o.config_path.empty()) {
        std::FILE* f = std::fopen(o.config_path.c_str(), "rb");
        if (!f) throw CLI::ValidationError("--config", "cannot open " + o.config_path);
        std::string text;
        char buf[4096];
        size_t n;
        while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
        std::fclose(f);
        cfg = json::parse(text);
    }
    auto set_if = [&](const char* flag, const char* key, auto value) {
        if (cmd->count(flag)) cfg[key] = value;
    };
    if (!o.sessions.empty()) cfg["sessions"] = o.sessions;
    if (cmd->count("--truth")) cfg["truths"] = o.truths;
    set_if("--out", "out", o.out_dir);
    set_if("--window", "window", o.window);
    set_if("--stride", "stride", o.stride);
    set_if("--min-speech", "min_speech", o.min_speech);
    set_if("--min-gaze", "min_gaze", o.min_gaze);
    set_if("--max-prox", "max_prox", o.max_prox);
    set_if("--grid-dt", "grid_dt", o.grid_dt);
    set_if("--seed", "seed", o.seed);
    set_if("--fast-eval-cap", "fast_eval_cap", o.fast_cap);
    if (cmd->count("--no-fast-eval")) cfg["fast_eval"] = false;
    set_if("--tier-mode", "tier_mode", o.tier_mode);
    set_if("--model", "model", o.model_path);
    if (cmd->count("--skip-train")) cfg["skip_train"] = true;
    if (cmd->count("--per-window-alpha")) cfg["per_window_alpha"] = true;
    set_if("--threads", "threads", o.threads);
    if (cmd->count("--k")) {
        if (o.k_text == "auto")
            cfg["k"] = "auto";
        else
            cfg["k"] = std::stoi(o.k_text);
    }
    if (cmd->count("--lambda")) {
        if (o.lambda_text == "sweep")
            cfg["lambda"] = "sweep";
        else
            cfg["lambda"] = std::stod(o.lambda_text);
    }
    json train = cfg.value("train", json::object());
    if (cmd->count("--lr")) train["lr"] = o.lr;
    if (cmd->count("--epochs")) train["epochs"] = o.epochs;
    if (cmd->count("--batch")) train["batch"] = o.batch;
    if (!train.empty()) cfg["train"] = train;
    return cfg.dump();
}

int run_job(gist_status (*job)(const char*, char**), const std::string& config) {
    char* summary = nullptr;
    gist_status st = job(config.c_str(), &summary);
    if (st != GIST_OK) {
        std::fprintf(stderr, "error [%s]: %s\n", gist_status_name(st), gist_last_error());
        return 1;
    }
    if (summary) {
        std::printf("%s\n", summary);
        gist_string_free(summary);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gist — windowed sociograms, network metrics, and temporal behavior clustering "
                 "for multi-participant MR session recordings"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic session from a phase script");
    std::string script_path, synth_out = "session.jsonl", synth_truth;
    uint64_t synth_seed = 0;
    synth->add_option("--script", script_path, "phase script JSON file")->required();
    synth->add_option("--out-session", synth_out, "output session file (default session.jsonl)");
    synth->add_option("--truth", synth_truth, "also write planted labels CSV here");
    synth->add_option("--seed", synth_seed, "override the script's seed");
    bool seed_given = false;
    synth->callback([&] { seed_given = synth->count("--seed") > 0; });

    // validate
    auto* validate = app.add_subcommand("validate", "check a session file against the format invariants");
    std::string validate_path;
    validate->add_option("session", validate_path, "session file")->required();

    struct JobCmd {
        const char* name;
        const char* help;
        gist_status (*fn)(const char*, char**);
        CLI::App* cmd = nullptr;
        CommonOpts opts;
    };
    std::vector<JobCmd> jobs = {
        {"sociogram", "build per-window modal and fused sociograms", &gist_sociograms},
        {"metrics", "network metrics and tier classification", &gist_metrics},
        {"features", "dyadic feature extraction and pruning", &gist_features},
        {"train", "train the clustering model and label segments", &gist_train},
        {"cluster", "label segments with an existing checkpoint", &gist_cluster},
        {"rules", "decision-rule labels per segment", &gist_rules},
        {"analyze", "membership entropies, associations, ablations", &gist_analyze},
        {"run", "full pipeline with manifest", &gist_run},
    };
    for (auto& j : jobs) {
        j.cmd = app.add_subcommand(j.name, j.help);
        add_common(j.cmd, j.opts, true);
    }

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) {
        std::FILE* f = std::fopen(script_path.c_str(), "rb");
        if (!f) {
            std::fprintf(stderr, "error: cannot open script %s\n", script_path.c_str());
            return 1;
        }
        std::string text;
        char buf[4096];
        size_t n;
        while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
        std::fclose(f);
        if (seed_given) {
            json j = json::parse(text);
            j["seed"] = synth_seed;
            text = j.dump();
        }
        gist_status st = gist_synth(text.c_str(), synth_out.c_str(),
                                    synth_truth.empty() ? nullptr : synth_truth.c_str());
        if (st != GIST_OK) {
            std::fprintf(stderr, "error [%s]: %s\n", gist_status_name(st), gist_last_error());
            return 1;
        }
        std::printf("wrote %s%s%s\n", synth_out.c_str(), synth_truth.empty() ? "" : " and ",
                    synth_truth.c_str());
        return 0;
    }

    if (validate->parsed()) {
        char* violations = nullptr;
        gist_status st = gist_session_validate_file(validate_path.c_str(), &violations);
        if (st != GIST_OK) {
            std::fprintf(stderr, "error [%s]: %s\n", gist_status_name(st), gist_last_error());
            return 1;
        }
        std::printf("%s\n", violations);
        bool clean = std::string(violations) == "[]";
        gist_string_free(violations);
        return clean ? 0 : 1;
    }

    for (auto& j : jobs)
        if (j.cmd->parsed()) return run_job(j.fn, build_config(j.cmd, j.opts));
    return 0;
}

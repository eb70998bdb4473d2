#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "deepcluster.hpp"
#include "netmetrics.hpp"
#include "sociogram.hpp"
#include "synthgen.hpp"

namespace gist::pipeline {

// Stage selection for the CLI subcommands; `run` executes everything.
enum Stage : unsigned {
    kStageSociograms = 1u << 0,
    kStageMetrics = 1u << 1,
    kStageFeatures = 1u << 2,
    kStageTrain = 1u << 3,
    kStageCluster = 1u << 4,
    kStageRules = 1u << 5,
    kStageAnalyze = 1u << 6,
    kStageAll = 0x7f,
};

struct Config {
    std::vector<std::string> sessions;
    std::vector<std::string> truths;  // optional, aligned with sessions
    std::string out_dir = "gist_run";

    double window_len = 32.0;
    double stride = 16.0;
    sociogram::Thresholds thresholds;
    double grid_dt = 0.1;

    int k = 0;  // 0 = auto (stability-informed elbow)
    double lambda = 0.5;
    bool lambda_sweep = false;
    uint64_t seed = 0;
    bool fast_eval = true;
    int fast_cap = 5000;
    netmetrics::TierMode tier_mode = netmetrics::TierMode::Percentile;
    bool per_window_alpha = false;

    deepcluster::EncoderConfig encoder;
    double lr = 3e-3;
    int epochs = 15;
    int batch = 64;
    int kmeans_restarts = 20;
    int select_k_min = 2;
    int select_k_max = 10;
    int threads = 0;  // 0 = hardware concurrency

    std::string model_path;  // load instead of training when skip_train
    bool skip_train = false;

    static Config from_json(const std::string& text);
    std::string to_canonical_json() const;
    deepcluster::TrainConfig train_config() const;
};

struct RunResult {
    std::string out_dir;
    std::string summary_json;  // headline numbers for the caller
    std::vector<std::string> warnings;
};

RunResult run(const Config& cfg, unsigned stages);

}  // namespace gist::pipeline

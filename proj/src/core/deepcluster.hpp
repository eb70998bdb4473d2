#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cluster_metrics.hpp"
#include "dyadfeat.hpp"
#include "network.hpp"

namespace gist::deepcluster {

struct TrainConfig {
    double lambda = 0.5;       // clustering-loss weight
    bool lambda_sweep = false; // sweep {0.3,0.5,0.7} against the lambda=0 baseline
    double lr = 3e-3;
    int epochs = 15;
    int batch = 64;
    uint64_t seed = 0;
    int k = 4;                 // cluster count; resolve k="auto" via select_k first
    int kmeans_restarts = 20;
    int fast_cap = 5000;       // evaluation subsample cap (fast mode)
    bool fast_eval = true;

    void validate() const;
};

struct ModelQuality {
    double silhouette = 0.0;
    double inertia = 0.0;
    double recon_error = 0.0;
    double final_loss = 0.0;
    double cross_run_ari = 1.0;  // filled by select_k contexts
    bool low_confidence = false;
};

struct ClusterModel {
    EncoderConfig enc;
    TrainConfig cfg;
    Autoencoder net;
    Eigen::MatrixXd centroids;  // k x latent
    std::vector<int> labels;    // per training segment
    Eigen::MatrixXd latents;    // per training segment, exported for plotting
    ModelQuality quality;
    std::vector<double> loss_curve;  // per-epoch mean composite loss
    std::vector<std::string> feature_names;
    int T = 0, F = 0;
};

// Alternates minibatch gradient steps on the composite loss with a per-
// epoch k-means centroid refresh, then fits the final centroids with the
// full restart budget. Deterministic given the seed.
ClusterModel train(const std::vector<dyadfeat::FeatureSegment>& segments, const EncoderConfig& enc,
                   const TrainConfig& cfg);

// Encode segments with a trained model (dropout off) and assign to the
// stored centroids.
Eigen::MatrixXd encode_segments(ClusterModel& model, const std::vector<dyadfeat::FeatureSegment>& segments);
std::vector<int> assign_segments(ClusterModel& model, const std::vector<dyadfeat::FeatureSegment>& segments);

struct KDiagnostics {
    int k = 0;
    double inertia_mean = 0.0;
    double ari_mean = 0.0;
};

struct SelectKResult {
    int chosen_k = 0;
    bool low_confidence = false;
    std::vector<KDiagnostics> per_k;
    std::vector<double> normalized_inertia;
    std::vector<double> second_difference;  // aligned with per_k; NaN at the ends
};

// Stability-informed elbow: train/cluster each k with `seeds` seeds, take
// the interior k with the largest second difference of the min-max
// normalized inertia curve among those with mean pairwise cross-seed
// ARI >= 0.8 (ties to the larger k); if none qualifies, the max-ARI k with
// the low-confidence flag set.
SelectKResult select_k(const std::vector<dyadfeat::FeatureSegment>& segments, const EncoderConfig& enc,
                       const TrainConfig& cfg, int k_min = 2, int k_max = 10, int seeds = 3, int threads = 0);

struct LambdaSweepResult {
    double chosen_lambda = 0.0;
    double baseline_recon = 0.0;
    struct Entry {
        double lambda, silhouette, recon;
        bool feasible;
    };
    std::vector<Entry> entries;
};

// Sweep lambda over {0.3, 0.5, 0.7}: best silhouette subject to
// reconstruction error <= 1.5x the lambda=0 baseline.
LambdaSweepResult sweep_lambda(const std::vector<dyadfeat::FeatureSegment>& segments, const EncoderConfig& enc,
                               const TrainConfig& cfg);

// Checkpoint round trip (single JSON document).
std::string model_to_json(const ClusterModel& model);
ClusterModel model_from_json(const std::string& text);
void save_model(const ClusterModel& model, const std::string& path);
ClusterModel load_model(const std::string& path);

}  // namespace gist::deepcluster

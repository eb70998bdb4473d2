#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "sync.hpp"

namespace gist::sociogram {

enum class Modality { Conversation = 0, Attention = 1, Proximity = 2 };

const char* modality_name(Modality m);

struct Thresholds {
    double min_speech = 0.5;          // seconds of clipped speech per segment
    double min_gaze_overlap = 0.013;  // seconds of joint fixation overlap
    double max_proximity_dist = 1.5;  // feet, inclusive
};

// N x N weighted interaction graph for one window and one modality.
// Weights are seconds of interaction; diagonal stays zero; undirected
// graphs keep W exactly symmetric.
struct ModalSociogram {
    Modality modality = Modality::Conversation;
    bool directed = false;
    sync::Window window;
    Eigen::MatrixXd weights;
};

struct FusionWeights {
    std::array<double, 3> alpha{0.0, 0.0, 0.0};  // conv, att, prox; sums to 1
    std::vector<std::string> warnings;
};

struct FusedSociogram {
    Eigen::MatrixXd weights;
    bool directed = true;
    sync::Window window;
    FusionWeights fusion;
};

struct WindowGraphs {
    ModalSociogram conv, att, prox;
};

ModalSociogram build_conversation(const sync::AlignedSession& s, const sync::Window& w, const Thresholds& th);
ModalSociogram build_attention(const sync::AlignedSession& s, const sync::Window& w, const Thresholds& th);
ModalSociogram build_proximity(const sync::AlignedSession& s, const sync::Window& w, const Thresholds& th);
std::vector<WindowGraphs> build_all(const sync::AlignedSession& s, const std::vector<sync::Window>& windows,
                                    const Thresholds& th);

// Session-level fusion weights: per dyad, total edge weight per modality
// (conversation symmetrized by summing both directions), columns z-scored,
// alpha = |PC1 loadings| normalized to sum 1. Zero-variance columns get
// alpha 0; if nothing varies, uniform weights with a warning.
FusionWeights compute_fusion_weights(const std::vector<WindowGraphs>& per_window);
// Same, restricted to a modality subset (used by leave-one-out ablation).
FusionWeights compute_fusion_weights_subset(const std::vector<WindowGraphs>& per_window,
                                            const std::array<bool, 3>& use);

// Min-max normalization over off-diagonal entries; an all-zero matrix stays
// zero, a constant nonzero matrix maps to 1.
Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& w);

FusedSociogram fuse(const ModalSociogram& conv, const ModalSociogram& att, const ModalSociogram& prox,
                    const FusionWeights& fw);

}  // namespace gist::sociogram

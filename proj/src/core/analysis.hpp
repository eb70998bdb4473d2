#pragma once

#include <array>
#include <string>
#include <vector>

#include "dyadfeat.hpp"
#include "sociogram.hpp"

namespace gist::analysis {

enum class FiredRule { EntropyRule = 0, DominanceRule, DiversityRule, Default };
const char* fired_rule_name(FiredRule r);

struct RuleLabel {
    int cluster = 0;
    FiredRule fired = FiredRule::Default;
};

// Surrogate decision hierarchy over segment-mean z-features, applied in
// the fixed order entropy -> dominance -> diversity -> default.
RuleLabel rule_classify(double entropy_z, double dominance_z, double diversity_z);

// One dyadic window with its cluster label and attribution tags.
struct LabeledWindow {
    int cluster = 0;
    int group = 0;       // session index
    long pair = 0;       // globally unique dyad id
    int actor_a = 0;     // globally unique participant ids
    int actor_b = 0;
};

struct MembershipEntropy {
    struct PerCluster {
        int cluster = 0;
        double group_bits = 0.0, pair_bits = 0.0, actor_bits = 0.0;
        long windows = 0;
        bool empty = false;
    };
    std::vector<PerCluster> clusters;
};

// Base-2 categorical entropy of each cluster's windows across groups,
// pairs, and actors (each window counted once per actor).
MembershipEntropy membership_entropy(const std::vector<LabeledWindow>& windows, int k);

struct Association {
    double chi2 = 0.0;
    double p = 1.0;
    double cramers_v = 0.0;
    long df = 0;
    long n = 0;
    std::vector<std::vector<long>> table;  // after zero-marginal drops
    std::vector<std::string> warnings;
};

// Pearson chi-square over the k x tier contingency table; zero rows and
// columns are dropped with a degrees-of-freedom adjustment.
Association crosstab_association(const std::vector<int>& cluster_labels, const std::vector<int>& tiers,
                                 int cluster_count, int tier_count = 3);

// Survival function of the chi-square distribution (regularized upper
// incomplete gamma), used for the association p-values.
double chi2_sf(double chi2, double df);

struct ClassReport {
    struct PerClass {
        int cls = 0;
        double precision = 0.0, recall = 0.0, f1 = 0.0;
        long support = 0;
        bool absent_from_truth = false;
    };
    std::vector<PerClass> classes;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double accuracy = 0.0;
    long n = 0;
};

ClassReport classification_report(const std::vector<int>& predicted, const std::vector<int>& truth);

// Spearman rank correlation with average ranks on ties.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

struct AblationResult {
    sociogram::Modality dropped = sociogram::Modality::Conversation;
    bool skipped = false;
    std::string warning;
    double rho = 1.0;
    std::array<double, 3> alpha_after{0.0, 0.0, 0.0};
};

// Leave-one-out fusion ablation: original alpha renormalized over the two
// remaining modalities, fused graphs rebuilt, and the per-dyad fused edge
// strengths (symmetrized window sums) rank-compared against full fusion.
AblationResult ablate_modality(const std::vector<sociogram::WindowGraphs>& graphs, sociogram::Modality dropped,
                               const sociogram::FusionWeights& full_weights);

}  // namespace gist::analysis

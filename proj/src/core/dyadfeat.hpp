#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "sociogram.hpp"
#include "sync.hpp"

namespace gist::dyadfeat {

// Unordered participant pair, i < j.
struct DyadId {
    int i = 0;
    int j = 1;
    bool operator==(const DyadId&) const = default;
};

std::vector<DyadId> all_dyads(int participant_count);

// Candidate pool, canonical order. The seven core behavior dimensions come
// first; correlation pruning keeps the earlier feature of a redundant pair,
// so the core set survives when a derived candidate shadows it.
enum Feature : int {
    F_EntropySpeaking = 0,
    F_DominanceRatio,
    F_MaterialDiversity,
    F_DistMean,
    F_ProxBinary,
    F_ApproachRate,
    F_SharedAttCnt,
    F_SpeakTimeI,
    F_SpeakTimeJ,
    F_SpeakTimeTotal,
    F_TurnCount,
    F_OverlapRate,
    F_SilenceFrac,
    F_MeanTurnLen,
    F_SharedAttDur,
    F_InterFixationMean,
    F_LongestJointFixation,
    F_DistMin,
    F_DistStd,
    F_ApproachFlips,
    F_RelSpeedMean,
    kFeatureCount
};

const std::vector<std::string>& feature_names();
constexpr int kCoreFeatureCount = 7;

// One dyad's full per-second series: raw values (NaN marks a bin where a
// pose-dependent feature is absent) and the per-dyad z-normalized matrix
// (absent values imputed to 0 = the mean).
struct DyadFeatureSeries {
    DyadId dyad;
    int bins = 0;
    Eigen::MatrixXd raw;  // bins x kFeatureCount
    Eigen::MatrixXd z;    // bins x kFeatureCount
};

// Candidate features of a single 1 s bin [bin_start, bin_start + 1).
struct BinFeatures {
    std::vector<double> values;    // kFeatureCount
    std::vector<uint8_t> present;  // kFeatureCount
};
BinFeatures extract_candidates(const sync::AlignedSession& s, DyadId dyad, int bin_start,
                               const sociogram::Thresholds& th);

// All bins of a session for one dyad (bins aligned to integer seconds,
// half-open). z left empty until znormalize runs.
DyadFeatureSeries extract_series(const sync::AlignedSession& s, DyadId dyad, const sociogram::Thresholds& th);

// Per-dyad per-feature z-scores over the whole session (population SD);
// zero-variance features become all-zero, absent values 0.
void znormalize(DyadFeatureSeries& series);

struct PruneResult {
    std::vector<int> kept;  // canonical order
    std::vector<std::string> kept_names;
    std::vector<std::string> log;
};

// Three-stage pruning: variance < 1e-8 (raw), |Pearson r| >= 0.95 (later
// feature of the pair dropped), then silhouette-importance ranking with a
// floor of 7 retained features.
PruneResult prune_features(const std::vector<DyadFeatureSeries>& series, int k_hint, uint64_t seed = 0,
                           int fast_cap = 5000);

struct FeatureSegment {
    DyadId dyad;
    sync::Window window;
    Eigen::MatrixXd matrix;  // T x F, z-normalized
    int session_index = 0;
};

// One T x F segment per (dyad, window); windows reaching past the series
// end are skipped.
std::vector<FeatureSegment> build_segments(const std::vector<DyadFeatureSeries>& series,
                                           const std::vector<sync::Window>& windows, const std::vector<int>& kept);

}  // namespace gist::dyadfeat

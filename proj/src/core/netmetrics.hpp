#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace gist::netmetrics {

enum class Tier { Low = 0, Medium = 1, High = 2 };
enum class TierMode { Percentile, FixedBounded, ZScore };

const char* tier_name(Tier t);
TierMode tier_mode_from_string(const std::string& s);

// Power iteration on the symmetrized weight matrix (W + Wt for directed
// graphs). Unit Euclidean norm, entries >= 0. An all-zero graph yields the
// uniform vector 1/sqrt(N) and a warning.
Eigen::VectorXd eigenvector_centrality(const Eigen::MatrixXd& w, bool directed,
                                       std::vector<std::string>* warnings = nullptr);

// Fraction of realized edges (weight > 0) out of all possible edges.
double density(const Eigen::MatrixXd& w, bool directed);

// Mean local clustering coefficient of the binarized graph; nodes with
// degree < 2 contribute 0. Undirected input only.
double avg_clustering(const Eigen::MatrixXd& w, bool directed);

// Mutual directed edges / all directed edges; 0 when the graph is empty.
// Directed input only.
double reciprocity(const Eigen::MatrixXd& w, bool directed);

// Three-tier classification. Percentile: top 20% High / bottom 40% Low /
// middle 40% Medium, ties resolved toward the lower tier in stable input
// order. FixedBounded: Low <= 0.29, Medium 0.30-0.59, High >= 0.60 (High
// >= 0.50 when group_n <= 4); values must lie in [0,1]. ZScore: High at
// z >= +1, Low at z <= -1 (population SD of the input list).
std::vector<Tier> classify_tier(const std::vector<double>& values, TierMode mode, int group_n);

}  // namespace gist::netmetrics

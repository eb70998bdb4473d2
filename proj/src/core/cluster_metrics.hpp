#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace gist::deepcluster {

struct KMeansResult {
    Eigen::MatrixXd centroids;  // k x dim
    std::vector<int> labels;
    double inertia = 0.0;
};

// Lloyd's algorithm with k-means++ seeding, best of `restarts` by inertia.
// Empty clusters are repaired by reseeding from the point farthest from its
// centroid. Deterministic given the seed.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts = 20, uint64_t seed = 0);

// One warm-started Lloyd refinement from existing centroids (used for the
// per-epoch centroid refresh during training).
KMeansResult kmeans_refine(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids);

double inertia_of(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, const std::vector<int>& labels);

// Mean silhouette with Euclidean distance. fast_cap > 0 subsamples up to
// fast_cap points (seeded) before the O(n^2) pass; a subsample covering the
// whole set reproduces the full value exactly.
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels, int fast_cap = 0,
                  uint64_t seed = 0);

// Adjusted Rand index from the pair-count contingency table.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Deterministic subsample of indices 0..n-1 (uniform without replacement,
// ascending order); returns all indices when cap >= n or cap <= 0.
std::vector<int> subsample_indices(int n, int cap, uint64_t seed);

}  // namespace gist::deepcluster

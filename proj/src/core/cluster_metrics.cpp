#include "cluster_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "common.hpp"

namespace gist::deepcluster {

namespace {

void assign_points(const Eigen::MatrixXd& pts, const Eigen::MatrixXd& cent, std::vector<int>& labels) {
    const auto n = pts.rows();
    const auto k = cent.rows();
    labels.resize(size_t(n));
    for (long i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (long c = 0; c < k; ++c) {
            double d = (pts.row(i) - cent.row(c)).squaredNorm();
            if (d < best) {
                best = d;
                arg = int(c);
            }
        }
        labels[size_t(i)] = arg;
    }
}

bool update_centroids(const Eigen::MatrixXd& pts, std::vector<int>& labels, Eigen::MatrixXd& cent) {
    const auto n = pts.rows();
    const auto k = cent.rows();
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, pts.cols());
    std::vector<long> counts(size_t(k), 0);
    for (long i = 0; i < n; ++i) {
        sums.row(labels[size_t(i)]) += pts.row(i);
        ++counts[size_t(labels[size_t(i)])];
    }
    bool repaired = false;
    for (long c = 0; c < k; ++c) {
        if (counts[size_t(c)] > 0) {
            cent.row(c) = sums.row(c) / double(counts[size_t(c)]);
        } else {
            // reseed from the point farthest from its assigned centroid
            double far_d = -1.0;
            long far_i = 0;
            for (long i = 0; i < n; ++i) {
                double d = (pts.row(i) - cent.row(labels[size_t(i)])).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far_i = i;
                }
            }
            cent.row(c) = pts.row(far_i);
            repaired = true;
        }
    }
    return repaired;
}

}  // namespace

double inertia_of(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, const std::vector<int>& labels) {
    double total = 0.0;
    for (long i = 0; i < points.rows(); ++i) total += (points.row(i) - centroids.row(labels[size_t(i)])).squaredNorm();
    return total;
}

KMeansResult kmeans_refine(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids) {
    KMeansResult r;
    r.centroids = centroids;
    assign_points(points, r.centroids, r.labels);
    for (int iter = 0; iter < 100; ++iter) {
        bool repaired = update_centroids(points, r.labels, r.centroids);
        std::vector<int> next;
        assign_points(points, r.centroids, next);
        if (!repaired && next == r.labels) break;
        r.labels = std::move(next);
    }
    r.inertia = inertia_of(points, r.centroids, r.labels);
    return r;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts, uint64_t seed) {
    const auto n = points.rows();
    if (k <= 0) throw ConfigError("kmeans requires k > 0");
    if (n < k) throw ConfigError("kmeans requires at least k points (" + std::to_string(n) + " < " +
                                 std::to_string(k) + ")");
    if (restarts < 1) restarts = 1;

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(mix_seed(seed, 0x6b6d65616e73ull, uint64_t(r)));
        // k-means++ seeding
        Eigen::MatrixXd cent(k, points.cols());
        long first = long(rng.next() % uint64_t(n));
        cent.row(0) = points.row(first);
        Eigen::VectorXd d2 = (points.rowwise() - cent.row(0)).rowwise().squaredNorm();
        for (int c = 1; c < k; ++c) {
            double total = d2.sum();
            long pick = 0;
            if (total <= 0.0) {
                pick = long(rng.next() % uint64_t(n));
            } else {
                double target = rng.uniform() * total;
                double acc = 0.0;
                for (long i = 0; i < n; ++i) {
                    acc += d2[i];
                    if (acc >= target) {
                        pick = i;
                        break;
                    }
                }
            }
            cent.row(c) = points.row(pick);
            d2 = d2.cwiseMin((points.rowwise() - cent.row(c)).rowwise().squaredNorm());
        }
        KMeansResult res = kmeans_refine(points, cent);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

std::vector<int> subsample_indices(int n, int cap, uint64_t seed) {
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[size_t(i)] = i;
    if (cap <= 0 || cap >= n) return idx;
    Rng rng(mix_seed(seed, 0x73756273616d70ull));
    // partial Fisher-Yates, then ascending order for cache-friendly passes
    for (int i = 0; i < cap; ++i) {
        int j = i + int(rng.next() % uint64_t(n - i));
        std::swap(idx[size_t(i)], idx[size_t(j)]);
    }
    idx.resize(size_t(cap));
    std::sort(idx.begin(), idx.end());
    return idx;
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels, int fast_cap, uint64_t seed) {
    if (points.rows() != long(labels.size())) throw ContractViolation("silhouette: size mismatch");
    std::vector<int> idx = subsample_indices(int(points.rows()), fast_cap, seed);
    const int n = int(idx.size());

    int max_label = 0;
    for (int i : idx) max_label = std::max(max_label, labels[size_t(i)]);
    const int k = max_label + 1;
    std::vector<long> cluster_size(size_t(k), 0);
    for (int i : idx) ++cluster_size[size_t(labels[size_t(i)])];
    int non_empty = 0;
    for (long c : cluster_size)
        if (c > 0) ++non_empty;
    if (non_empty < 2) throw ContractViolation("silhouette undefined for a single cluster");

    double total = 0.0;
    std::vector<double> sums(static_cast<size_t>(k));
    for (int a = 0; a < n; ++a) {
        std::fill(sums.begin(), sums.end(), 0.0);
        const int la = labels[size_t(idx[size_t(a)])];
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            double d = (points.row(idx[size_t(a)]) - points.row(idx[size_t(b)])).norm();
            sums[size_t(labels[size_t(idx[size_t(b)])])] += d;
        }
        double ai = cluster_size[size_t(la)] > 1 ? sums[size_t(la)] / double(cluster_size[size_t(la)] - 1) : 0.0;
        double bi = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            if (c == la || cluster_size[size_t(c)] == 0) continue;
            bi = std::min(bi, sums[size_t(c)] / double(cluster_size[size_t(c)]));
        }
        double denom = std::max(ai, bi);
        total += denom > 0.0 ? (bi - ai) / denom : 0.0;  // a=b=0 convention: 0
    }
    return total / double(n);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ContractViolation("adjusted_rand_index: length mismatch");
    const size_t n = a.size();
    if (n == 0) throw ContractViolation("adjusted_rand_index: empty labelings");

    std::map<std::pair<int, int>, long> cells;
    std::map<int, long> row, col;
    for (size_t i = 0; i < n; ++i) {
        ++cells[{a[i], b[i]}];
        ++row[a[i]];
        ++col[b[i]];
    }
    auto choose2 = [](long m) { return double(m) * double(m - 1) / 2.0; };
    double sum_cells = 0.0, sum_row = 0.0, sum_col = 0.0;
    for (const auto& [key, c] : cells) sum_cells += choose2(c);
    for (const auto& [key, c] : row) sum_row += choose2(c);
    for (const auto& [key, c] : col) sum_col += choose2(c);
    const double pairs = choose2(long(n));
    const double expected = sum_row * sum_col / pairs;
    const double maximum = 0.5 * (sum_row + sum_col);
    if (std::abs(maximum - expected) < 1e-15) return 1.0;  // both labelings trivial
    return (sum_cells - expected) / (maximum - expected);
}

}  // namespace gist::deepcluster

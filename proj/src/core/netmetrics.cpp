#include "netmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common.hpp"

namespace gist::netmetrics {

const char* tier_name(Tier t) {
    switch (t) {
        case Tier::Low: return "low";
        case Tier::Medium: return "medium";
        case Tier::High: return "high";
    }
    return "?";
}

TierMode tier_mode_from_string(const std::string& s) {
    if (s == "percentile") return TierMode::Percentile;
    if (s == "fixed") return TierMode::FixedBounded;
    if (s == "zscore") return TierMode::ZScore;
    throw ConfigError("unknown tier mode '" + s + "' (expected percentile|fixed|zscore)");
}

Eigen::VectorXd eigenvector_centrality(const Eigen::MatrixXd& w, bool directed,
                                       std::vector<std::string>* warnings) {
    const auto n = w.rows();
    if (n < 1 || w.cols() != n) throw ContractViolation("eigenvector_centrality: square matrix required");
    Eigen::MatrixXd s = directed ? Eigen::MatrixXd(w + w.transpose()) : w;

    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    const double max_w = s.cwiseAbs().maxCoeff();
    if (max_w <= 0.0) {
        if (warnings) warnings->push_back("eigenvector centrality on a degenerate (edgeless) graph");
        return x;
    }
    s /= max_w;  // eigenvector is scale invariant; keeps residuals well conditioned

    // shifted power iteration: adding c*I keeps the dominant eigenvalue
    // strictly positive so bipartite structures cannot oscillate
    const double shift = s.rowwise().sum().maxCoeff();
    for (int it = 0; it < 1000; ++it) {
        Eigen::VectorXd next = s * x + shift * x;
        double norm = next.norm();
        if (norm < 1e-300) break;
        next /= norm;
        double diff = (next - x).cwiseAbs().maxCoeff();
        x = next;
        if (diff < 1e-10) {
            double lambda = x.dot(s * x);
            if ((s * x - lambda * x).cwiseAbs().maxCoeff() < 1e-11) break;
        }
    }
    x = x.cwiseAbs();  // Perron vector is non-negative; clean up round-off signs
    x /= x.norm();
    return x;
}

double density(const Eigen::MatrixXd& w, bool directed) {
    const auto n = w.rows();
    if (n < 2) throw ContractViolation("density needs at least 2 nodes");
    long edges = 0;
    if (directed) {
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < n; ++j)
                if (i != j && w(i, j) > 0.0) ++edges;
        return double(edges) / double(n * (n - 1));
    }
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j)
            if (w(i, j) > 0.0) ++edges;
    return double(edges) / double(n * (n - 1) / 2);
}

double avg_clustering(const Eigen::MatrixXd& w, bool directed) {
    if (directed) throw ContractViolation("avg_clustering is defined for undirected graphs");
    const auto n = w.rows();
    double total = 0.0;
    for (long v = 0; v < n; ++v) {
        std::vector<long> nb;
        for (long u = 0; u < n; ++u)
            if (u != v && w(v, u) > 0.0) nb.push_back(u);
        if (nb.size() < 2) continue;  // contributes 0
        long links = 0;
        for (size_t a = 0; a < nb.size(); ++a)
            for (size_t b = a + 1; b < nb.size(); ++b)
                if (w(nb[a], nb[b]) > 0.0) ++links;
        total += 2.0 * double(links) / (double(nb.size()) * double(nb.size() - 1));
    }
    return total / double(n);
}

double reciprocity(const Eigen::MatrixXd& w, bool directed) {
    if (!directed) throw ContractViolation("reciprocity is defined for directed graphs");
    const auto n = w.rows();
    long edges = 0, mutual = 0;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            if (i == j || !(w(i, j) > 0.0)) continue;
            ++edges;
            if (w(j, i) > 0.0) ++mutual;
        }
    if (edges == 0) return 0.0;
    return double(mutual) / double(edges);
}

std::vector<Tier> classify_tier(const std::vector<double>& values, TierMode mode, int group_n) {
    if (values.empty()) throw ContractViolation("classify_tier: empty input");
    const size_t n = values.size();
    std::vector<Tier> out(n, Tier::Medium);

    switch (mode) {
        case TierMode::FixedBounded: {
            const double high_cut = group_n <= 4 ? 0.50 : 0.60;
            for (size_t i = 0; i < n; ++i) {
                double v = values[i];
                if (v < 0.0 || v > 1.0)
                    throw ContractViolation("classify_tier fixed mode requires values in [0,1], got " +
                                            fmt_double(v));
                if (v >= high_cut)
                    out[i] = Tier::High;
                else if (v >= 0.30)
                    out[i] = Tier::Medium;
                else
                    out[i] = Tier::Low;
            }
            break;
        }
        case TierMode::Percentile: {
            std::vector<size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            // stable ascending sort: tied values keep input order, so
            // earlier duplicates land in the lower tier
            std::stable_sort(idx.begin(), idx.end(),
                             [&](size_t a, size_t b) { return values[a] < values[b]; });
            const size_t low_cnt = size_t(std::floor(0.4 * double(n) + 1e-9));
            const size_t high_cnt = size_t(std::floor(0.2 * double(n) + 1e-9));
            for (size_t r = 0; r < n; ++r) {
                if (r < low_cnt)
                    out[idx[r]] = Tier::Low;
                else if (r >= n - high_cnt)
                    out[idx[r]] = Tier::High;
                else
                    out[idx[r]] = Tier::Medium;
            }
            break;
        }
        case TierMode::ZScore: {
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= double(n);
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            var /= double(n);  // population SD, same convention as feature z-scores
            double sd = std::sqrt(var);
            for (size_t i = 0; i < n; ++i) {
                if (sd < 1e-12) {
                    out[i] = Tier::Medium;
                } else {
                    double z = (values[i] - mean) / sd;
                    out[i] = z >= 1.0 ? Tier::High : (z <= -1.0 ? Tier::Low : Tier::Medium);
                }
            }
            break;
        }
    }
    return out;
}

}  // namespace gist::netmetrics

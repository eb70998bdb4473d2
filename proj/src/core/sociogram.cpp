#include "sociogram.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "common.hpp"

namespace gist::sociogram {

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::Conversation: return "conversation";
        case Modality::Attention: return "attention";
        case Modality::Proximity: return "proximity";
    }
    return "?";
}

ModalSociogram build_conversation(const sync::AlignedSession& s, const sync::Window& w, const Thresholds& th) {
    const int n = s.participant_count();
    ModalSociogram g{Modality::Conversation, true, w, Eigen::MatrixXd::Zero(n, n)};
    for (const auto& seg : s.base.speech) {
        const double delta = sync::clip_interval(seg.start, seg.end, w);
        if (delta < th.min_speech) continue;
        for (int q = 0; q < n; ++q)
            if (q != seg.speaker) g.weights(seg.speaker, q) += delta;
    }
    return g;
}

ModalSociogram build_attention(const sync::AlignedSession& s, const sync::Window& w, const Thresholds& th) {
    const int n = s.participant_count();
    ModalSociogram g{Modality::Attention, false, w, Eigen::MatrixXd::Zero(n, n)};

    // bucket fixations per (participant, object), clipped to the window
    struct Clipped {
        int participant;
        double start, end;
    };
    std::map<std::string, std::vector<Clipped>> by_object;
    for (const auto& f : s.base.gaze) {
        double a = std::max(f.start, w.t0);
        double b = std::min(f.end, w.t1);
        if (b - a <= 0.0) continue;
        by_object[f.object_id].push_back({f.participant, a, b});
    }

    for (const auto& [obj, fixes] : by_object) {
        for (size_t a = 0; a < fixes.size(); ++a) {
            for (size_t b = a + 1; b < fixes.size(); ++b) {
                const auto& fa = fixes[a];
                const auto& fb = fixes[b];
                if (fa.participant == fb.participant) continue;
                double delta = std::min(fa.end, fb.end) - std::max(fa.start, fb.start);
                if (delta < th.min_gaze_overlap) continue;
                g.weights(fa.participant, fb.participant) += delta;
                g.weights(fb.participant, fa.participant) += delta;
            }
        }
    }
    return g;
}

ModalSociogram build_proximity(const sync::AlignedSession& s, const sync::Window& w, const Thresholds& th) {
    const int n = s.participant_count();
    ModalSociogram g{Modality::Proximity, false, w, Eigen::MatrixXd::Zero(n, n)};
    const double dt = s.grid_dt;
    if (s.grid.size() < 2) return g;

    // grid intervals [t_k, t_k + dt] fully inside the window; the distance
    // test uses the interval's start sample (left Riemann convention)
    const long k0 = std::lround(std::ceil((w.t0) / dt - 1e-9));
    for (size_t k = size_t(std::max(0l, k0)); k + 1 < s.grid.size(); ++k) {
        if (s.grid[k] + dt > w.t1 + 1e-9) break;
        if (s.grid[k] < w.t0 - 1e-9) continue;
        for (int i = 0; i < n; ++i) {
            if (!s.present[i][k]) continue;
            for (int j = i + 1; j < n; ++j) {
                if (!s.present[j][k]) continue;
                double d = (s.position[i][k] - s.position[j][k]).norm();
                if (d <= th.max_proximity_dist) {
                    g.weights(i, j) += dt;
                    g.weights(j, i) += dt;
                }
            }
        }
    }
    return g;
}

std::vector<WindowGraphs> build_all(const sync::AlignedSession& s, const std::vector<sync::Window>& windows,
                                    const Thresholds& th) {
    std::vector<WindowGraphs> out;
    out.reserve(windows.size());
    for (const auto& w : windows)
        out.push_back({build_conversation(s, w, th), build_attention(s, w, th), build_proximity(s, w, th)});
    return out;
}

namespace {

FusionWeights pca_weights(const Eigen::MatrixXd& dyad_by_modality, const std::vector<int>& cols) {
    FusionWeights fw;
    const auto rows = dyad_by_modality.rows();
    const int m = int(cols.size());

    Eigen::MatrixXd z(rows, m);
    std::vector<int> varying;
    for (int c = 0; c < m; ++c) {
        Eigen::VectorXd col = dyad_by_modality.col(cols[size_t(c)]);
        double mean = col.mean();
        double var = (col.array() - mean).square().sum() / double(rows);
        if (var < 1e-24) {
            z.col(c).setZero();  // zero-variance channel: alpha stays 0
        } else {
            z.col(c) = (col.array() - mean) / std::sqrt(var);
            varying.push_back(c);
        }
    }

    if (rows < 2 || varying.empty()) {
        for (int c = 0; c < m; ++c) fw.alpha[size_t(cols[size_t(c)])] = 1.0 / double(m);
        fw.warnings.push_back("fusion: no variance across dyads in any modality; using uniform weights");
        return fw;
    }

    Eigen::MatrixXd zv(rows, varying.size());
    for (size_t c = 0; c < varying.size(); ++c) zv.col(long(c)) = z.col(varying[c]);
    Eigen::MatrixXd corr = (zv.transpose() * zv) / double(rows);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    // SelfAdjointEigenSolver sorts eigenvalues ascending; PC1 is the last
    Eigen::VectorXd pc1 = es.eigenvectors().col(corr.cols() - 1).cwiseAbs();
    double total = pc1.sum();
    if (total < 1e-15) {
        for (size_t c = 0; c < varying.size(); ++c) pc1[long(c)] = 1.0;
        total = double(varying.size());
        fw.warnings.push_back("fusion: degenerate principal component; using uniform weights over varying channels");
    }
    for (size_t c = 0; c < varying.size(); ++c)
        fw.alpha[size_t(cols[size_t(varying[c])])] = pc1[long(c)] / total;
    return fw;
}

}  // namespace

FusionWeights compute_fusion_weights_subset(const std::vector<WindowGraphs>& per_window,
                                            const std::array<bool, 3>& use) {
    if (per_window.empty()) throw ContractViolation("fusion weights need at least one window");
    const int n = int(per_window.front().conv.weights.rows());
    const int dyads = n * (n - 1) / 2;

    std::vector<int> cols;
    for (int m = 0; m < 3; ++m)
        if (use[size_t(m)]) cols.push_back(m);
    if (cols.empty()) throw ContractViolation("fusion weights need at least one modality");

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dyads, 3);
    for (const auto& wg : per_window) {
        int row = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j, ++row) {
                d(row, 0) += wg.conv.weights(i, j) + wg.conv.weights(j, i);
                d(row, 1) += wg.att.weights(i, j);
                d(row, 2) += wg.prox.weights(i, j);
            }
        }
    }
    return pca_weights(d, cols);
}

FusionWeights compute_fusion_weights(const std::vector<WindowGraphs>& per_window) {
    return compute_fusion_weights_subset(per_window, {true, true, true});
}

Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& w) {
    const auto n = w.rows();
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            if (i == j) continue;
            double v = w(i, j);
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    if (first) return out;
    if (hi - lo < 1e-15) {
        if (hi > 0.0)
            for (long i = 0; i < n; ++i)
                for (long j = 0; j < n; ++j)
                    if (i != j) out(i, j) = 1.0;
        return out;
    }
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            if (i != j) out(i, j) = (w(i, j) - lo) / (hi - lo);
    return out;
}

FusedSociogram fuse(const ModalSociogram& conv, const ModalSociogram& att, const ModalSociogram& prox,
                    const FusionWeights& fw) {
    const auto n = conv.weights.rows();
    if (att.weights.rows() != n || prox.weights.rows() != n)
        throw ContractViolation("fuse: participant count mismatch between modal graphs");
    if (std::abs(att.window.t0 - conv.window.t0) > 1e-9 || std::abs(prox.window.t0 - conv.window.t0) > 1e-9 ||
        std::abs(att.window.t1 - conv.window.t1) > 1e-9 || std::abs(prox.window.t1 - conv.window.t1) > 1e-9)
        throw ContractViolation("fuse: window mismatch between modal graphs");

    FusedSociogram out;
    out.window = conv.window;
    out.fusion = fw;
    out.weights = fw.alpha[0] * minmax_normalize(conv.weights) + fw.alpha[1] * minmax_normalize(att.weights) +
                  fw.alpha[2] * minmax_normalize(prox.weights);
    return out;
}

}  // namespace gist::sociogram

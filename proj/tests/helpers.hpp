#pragma once

// Shared builders and independent oracles for the test suites. Oracles
// deliberately re-derive results from first principles (direct enumeration,
// dense solvers) instead of calling the implementation under test.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"
#include "session.hpp"
#include "sociogram.hpp"
#include "sync.hpp"

namespace testutil {

inline gist::model::SessionRecording empty_session(int n) {
    gist::model::SessionRecording s;
    for (int p = 0; p < n; ++p) s.participants.push_back(p);
    s.clock_offsets.assign(size_t(n), 0.0);
    s.poses.resize(size_t(n));
    s.metadata["session_id"] = "test";
    return s;
}

inline void add_speech(gist::model::SessionRecording& s, int p, double a, double b) {
    s.speech.push_back({p, a, b});
}
inline void add_gaze(gist::model::SessionRecording& s, int p, const std::string& obj, double a, double b) {
    s.gaze.push_back({p, obj, a, b});
}
inline void add_pose(gist::model::SessionRecording& s, int p, double t, double x, double y, double z) {
    s.poses[size_t(p)].push_back({p, t, {x, y, z}, {1.0, 0.0, 0.0, 0.0}});
}

// static pose track at 10 Hz over [0, span]
inline void add_static_track(gist::model::SessionRecording& s, int p, double span, double x, double y,
                             double z = 0.0) {
    for (int k = 0; k * 0.1 <= span + 1e-9; ++k) add_pose(s, p, k * 0.1, x, y, z);
}

// Randomized valid session for property tests (N <= 4, short spans).
inline gist::model::SessionRecording random_session(gist::Rng& rng, int n, double span) {
    auto s = empty_session(n);
    for (int p = 0; p < n; ++p) {
        // non-overlapping speech per speaker
        double t = rng.uniform(0.0, 2.0);
        while (t < span - 0.2) {
            double len = rng.uniform(0.05, 3.0);
            double end = std::min(span, t + len);
            if (end - t > 0.02) add_speech(s, p, t, end);
            t = end + rng.uniform(0.05, 4.0);
        }
        // fixations over a tiny object vocabulary (overlaps allowed)
        int fixations = int(rng.next() % 12);
        for (int f = 0; f < fixations; ++f) {
            double a = rng.uniform(0.0, span - 0.05);
            double b = std::min(span, a + rng.uniform(0.02, 2.0));
            if (b > a) add_gaze(s, p, "obj_" + std::to_string(rng.next() % 3), a, b);
        }
        // wandering pose track
        double x = rng.uniform(-2.0, 2.0), y = rng.uniform(-2.0, 2.0);
        for (int k = 0; k * 0.1 <= span + 1e-9; ++k) {
            x += 0.05 * rng.normal();
            y += 0.05 * rng.normal();
            add_pose(s, p, k * 0.1, x, y, 0.0);
        }
    }
    gist::model::canonicalize(s);
    return s;
}

// ---- brute-force sociogram oracles (independent enumeration) ----------

inline Eigen::MatrixXd oracle_conversation(const gist::model::SessionRecording& s, double t0, double t1,
                                           double min_speech) {
    const int n = int(s.participants.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const auto& seg : s.speech) {
        double lo = seg.start > t0 ? seg.start : t0;
        double hi = seg.end < t1 ? seg.end : t1;
        double delta = hi - lo;
        if (delta >= min_speech)
            for (int q = 0; q < n; ++q)
                if (q != seg.speaker) w(seg.speaker, q) += delta;
    }
    return w;
}

inline Eigen::MatrixXd oracle_attention(const gist::model::SessionRecording& s, double t0, double t1,
                                        double min_gaze) {
    const int n = int(s.participants.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (size_t a = 0; a < s.gaze.size(); ++a)
        for (size_t b = a + 1; b < s.gaze.size(); ++b) {
            const auto& fa = s.gaze[a];
            const auto& fb = s.gaze[b];
            if (fa.participant == fb.participant || fa.object_id != fb.object_id) continue;
            double a0 = std::max(fa.start, t0), a1 = std::min(fa.end, t1);
            double b0 = std::max(fb.start, t0), b1 = std::min(fb.end, t1);
            double delta = std::min(a1, b1) - std::max(a0, b0);
            if (delta >= min_gaze) {
                w(fa.participant, fb.participant) += delta;
                w(fb.participant, fa.participant) += delta;
            }
        }
    return w;
}

// enumerates every (grid sample, pair); positions interpolated directly
inline Eigen::MatrixXd oracle_proximity(const gist::model::SessionRecording& s, double t0, double t1,
                                        double max_dist, double dt) {
    const int n = int(s.participants.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    double span = s.span();
    auto pos_at = [&](int p, double t, Eigen::Vector3d& out) {
        const auto& pp = s.poses[size_t(p)];
        if (pp.empty() || t < pp.front().t - 1e-9 || t > pp.back().t + 1e-9) return false;
        for (size_t k = 0; k + 1 < pp.size() || k < pp.size(); ++k) {
            if (k + 1 >= pp.size()) {
                out = Eigen::Vector3d(pp[k].position[0], pp[k].position[1], pp[k].position[2]);
                return true;
            }
            if (t <= pp[k + 1].t + 1e-12) {
                if (t <= pp[k].t) {
                    out = Eigen::Vector3d(pp[k].position[0], pp[k].position[1], pp[k].position[2]);
                    return true;
                }
                double u = (t - pp[k].t) / (pp[k + 1].t - pp[k].t);
                for (int c = 0; c < 3; ++c) out[c] = pp[k].position[c] + u * (pp[k + 1].position[c] - pp[k].position[c]);
                return true;
            }
        }
        return false;
    };
    for (int k = 0; k * dt <= span + 1e-9; ++k) {
        double t = k * dt;
        if (t < t0 - 1e-9 || t + dt > t1 + 1e-9) continue;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                Eigen::Vector3d pi, pj;
                if (!pos_at(i, t, pi) || !pos_at(j, t, pj)) continue;
                if ((pi - pj).norm() <= max_dist) {
                    w(i, j) += dt;
                    w(j, i) += dt;
                }
            }
    }
    return w;
}

// dense symmetric eigensolver oracle: principal eigenvector, |entries|
inline Eigen::VectorXd oracle_principal_eigenvector(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd v = es.eigenvectors().col(sym.cols() - 1).cwiseAbs();
    return v / v.norm();
}

}  // namespace testutil

#include "sync.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace gist::sync {

namespace {

std::array<double, 4> slerp(const std::array<double, 4>& a, std::array<double, 4> b, double u) {
    double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
    if (dot < 0.0) {
        for (auto& c : b) c = -c;
        dot = -dot;
    }
    std::array<double, 4> out{};
    if (dot > 1.0 - 1e-9) {
        for (int i = 0; i < 4; ++i) out[i] = a[i] + u * (b[i] - a[i]);
    } else {
        double theta = std::acos(std::clamp(dot, -1.0, 1.0));
        double s = std::sin(theta);
        double wa = std::sin((1.0 - u) * theta) / s;
        double wb = std::sin(u * theta) / s;
        for (int i = 0; i < 4; ++i) out[i] = wa * a[i] + wb * b[i];
    }
    double norm = std::sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2] + out[3] * out[3]);
    for (auto& c : out) c /= norm;
    return out;
}

}  // namespace

AlignedSession align(const model::SessionRecording& s, double grid_dt) {
    if (!(grid_dt > 0.0)) throw ConfigError("grid_dt must be positive");

    AlignedSession a;
    a.grid_dt = grid_dt;
    a.base = s;
    const int n = s.participant_count();
    if (int(a.base.clock_offsets.size()) != n) throw InvariantError("clock_offsets size mismatch");

    for (auto& seg : a.base.speech) {
        double off = a.base.clock_offsets[seg.speaker];
        seg.start += off;
        seg.end += off;
    }
    for (auto& g : a.base.gaze) {
        double off = a.base.clock_offsets[g.participant];
        g.start += off;
        g.end += off;
    }
    for (int p = 0; p < n; ++p)
        for (auto& ps : a.base.poses[p]) ps.t += a.base.clock_offsets[p];
    for (auto& off : a.base.clock_offsets) off = 0.0;
    model::canonicalize(a.base);

    // negative timestamps after alignment violate the aligned-session invariant
    double min_t = 0.0;
    for (const auto& seg : a.base.speech) min_t = std::min(min_t, seg.start);
    for (const auto& g : a.base.gaze) min_t = std::min(min_t, g.start);
    for (const auto& pp : a.base.poses)
        if (!pp.empty()) min_t = std::min(min_t, pp.front().t);
    if (min_t < -1e-12)
        throw InvariantError("clock alignment produced negative timestamp " + fmt_double(min_t) +
                             "; offsets must keep the session non-negative");

    a.span = a.base.span();
    const int k_max = int(std::floor(a.span / grid_dt + 1e-9));
    a.grid.resize(size_t(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) a.grid[size_t(k)] = k * grid_dt;

    a.present.assign(size_t(n), std::vector<uint8_t>(a.grid.size(), 0));
    a.position.assign(size_t(n), std::vector<Eigen::Vector3d>(a.grid.size(), Eigen::Vector3d::Zero()));
    a.orientation.assign(size_t(n), std::vector<std::array<double, 4>>(a.grid.size(), {1.0, 0.0, 0.0, 0.0}));

    for (int p = 0; p < n; ++p) {
        const auto& pp = a.base.poses[p];
        if (pp.empty()) {
            a.warnings.push_back("participant " + std::to_string(p) + " has no pose samples; marked pose-absent");
            continue;
        }
        const double t_first = pp.front().t;
        const double t_last = pp.back().t;
        size_t seg = 0;  // index of left sample of the bracketing pair
        for (size_t k = 0; k < a.grid.size(); ++k) {
            const double t = a.grid[k];
            if (t < t_first - 1e-9 || t > t_last + 1e-9) continue;
            while (seg + 1 < pp.size() && pp[seg + 1].t < t) ++seg;
            a.present[p][k] = 1;
            if (pp.size() == 1 || t <= t_first) {
                a.position[p][k] = Eigen::Vector3d(pp.front().position[0], pp.front().position[1],
                                                   pp.front().position[2]);
                a.orientation[p][k] = pp.front().orientation;
            } else if (t >= t_last) {
                a.position[p][k] =
                    Eigen::Vector3d(pp.back().position[0], pp.back().position[1], pp.back().position[2]);
                a.orientation[p][k] = pp.back().orientation;
            } else {
                const auto& l = pp[seg];
                const auto& r = pp[seg + 1];
                double u = (t - l.t) / (r.t - l.t);
                Eigen::Vector3d pl(l.position[0], l.position[1], l.position[2]);
                Eigen::Vector3d pr(r.position[0], r.position[1], r.position[2]);
                a.position[p][k] = pl + u * (pr - pl);
                a.orientation[p][k] = slerp(l.orientation, r.orientation, u);
            }
        }
    }
    return a;
}

double clip_interval(double start, double end, const Window& w) {
    if (!(end > start)) throw ContractViolation("clip_interval requires end > start");
    return std::min(end, w.t1) - std::max(start, w.t0);
}

double interval_overlap(double a_start, double a_end, double b_start, double b_end) {
    if (!(a_end > a_start) || !(b_end > b_start)) throw ContractViolation("interval_overlap requires end > start");
    return std::max(0.0, std::min(a_end, b_end) - std::max(a_start, b_start));
}

std::vector<Window> make_windows(double session_span, double window_len, double stride) {
    if (!(window_len > 0.0)) throw ConfigError("window length must be positive");
    if (!(stride > 0.0) || stride > window_len + 1e-12) throw ConfigError("stride must satisfy 0 < stride <= window");
    std::vector<Window> out;
    for (int k = 0;; ++k) {
        double t0 = k * stride;
        double t1 = t0 + window_len;
        if (t1 > session_span + 1e-9) break;
        out.push_back({t0, t1, k});
    }
    return out;
}

}  // namespace gist::sync

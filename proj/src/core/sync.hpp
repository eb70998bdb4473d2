#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "session.hpp"

namespace gist::sync {

struct Window {
    double t0 = 0.0;
    double t1 = 0.0;
    int index = 0;
};

// Session with per-device clock offsets applied and poses resampled onto a
// shared uniform grid. Samples outside a participant's pose coverage are
// absent, never extrapolated. Immutable after construction.
struct AlignedSession {
    model::SessionRecording base;  // offsets applied, streams re-sorted
    double grid_dt = 0.1;
    std::vector<double> grid;                            // k * grid_dt, k = 0..K
    std::vector<std::vector<uint8_t>> present;           // [participant][grid index]
    std::vector<std::vector<Eigen::Vector3d>> position;  // [participant][grid index]
    std::vector<std::vector<std::array<double, 4>>> orientation;  // slerped, same indexing
    std::vector<std::string> warnings;
    double span = 0.0;

    int participant_count() const { return base.participant_count(); }
};

AlignedSession align(const model::SessionRecording& s, double grid_dt = 0.1);

// min(end, w.t1) - max(start, w.t0); negative or zero means no overlap.
// Returned as-is, callers apply their own thresholds.
double clip_interval(double start, double end, const Window& w);

// Overlap duration of two intervals, floored at 0.
double interval_overlap(double a_start, double a_end, double b_start, double b_end);

// Windows [k*stride, k*stride + window_len] while t1 <= span. Empty when
// span < window_len.
std::vector<Window> make_windows(double session_span, double window_len, double stride);

}  // namespace gist::sync

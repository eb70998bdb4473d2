#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "sync.hpp"

using namespace gist;
using namespace gist::sync;

TEST_CASE("clip_interval matches hand arithmetic") {
    Window w{0.0, 32.0, 0};
    CHECK(clip_interval(10.0, 15.0, w) == doctest::Approx(5.0));
    CHECK(clip_interval(30.0, 40.0, w) == doctest::Approx(2.0));
    CHECK(clip_interval(40.0, 50.0, w) == doctest::Approx(-8.0));  // negative, not clamped
    CHECK_THROWS_AS(clip_interval(5.0, 5.0, w), ContractViolation);
}

TEST_CASE("interval_overlap floors at zero and is symmetric") {
    CHECK(interval_overlap(0.0, 1.0, 0.5, 2.0) == doctest::Approx(0.5));
    CHECK(interval_overlap(0.0, 1.0, 1.0, 2.0) == doctest::Approx(0.0));
    CHECK(interval_overlap(0.0, 5.0, 1.0, 2.0) == doctest::Approx(1.0));  // containment

    Rng rng(7);
    for (int it = 0; it < 200; ++it) {
        double a0 = rng.uniform(0.0, 10.0), a1 = a0 + rng.uniform(0.01, 5.0);
        double b0 = rng.uniform(0.0, 10.0), b1 = b0 + rng.uniform(0.01, 5.0);
        double ab = interval_overlap(a0, a1, b0, b1);
        CHECK(ab == doctest::Approx(interval_overlap(b0, b1, a0, a1)));
        CHECK(ab >= 0.0);
        if (a1 <= b0 || b1 <= a0) CHECK(ab == 0.0);
    }
}

TEST_CASE("make_windows enumerates [k*stride, k*stride+len]") {
    auto w = make_windows(64.0, 32.0, 16.0);
    REQUIRE(w.size() == 3);
    CHECK(w[0].t0 == 0.0);
    CHECK(w[0].t1 == 32.0);
    CHECK(w[1].t0 == 16.0);
    CHECK(w[2].t0 == 32.0);
    CHECK(w[2].t1 == 64.0);
    CHECK(w[2].index == 2);

    auto exact = make_windows(32.0, 32.0, 16.0);
    REQUIRE(exact.size() == 1);
    CHECK(exact[0].t0 == 0.0);
    CHECK(exact[0].t1 == 32.0);

    CHECK(make_windows(10.0, 32.0, 16.0).empty());
    CHECK_THROWS_AS(make_windows(10.0, 32.0, 40.0), ConfigError);
}

TEST_CASE("half-overlap windows cover interior points exactly twice") {
    auto windows = make_windows(96.0, 32.0, 16.0);
    Rng rng(11);
    for (int it = 0; it < 100; ++it) {
        double t = rng.uniform(32.0, 64.0);  // interior band
        int count = 0;
        for (const auto& w : windows)
            if (t >= w.t0 && t < w.t1) ++count;
        CHECK(count == 2);
    }
}

TEST_CASE("align with zero offsets and on-grid poses is the identity") {
    auto s = testutil::empty_session(2);
    testutil::add_static_track(s, 0, 5.0, 1.0, 2.0);
    testutil::add_static_track(s, 1, 5.0, 3.0, 2.0);
    auto a = align(s, 0.1);
    REQUIRE(a.grid.size() == 51);
    for (size_t k = 0; k < a.grid.size(); ++k) {
        REQUIRE(a.present[0][k]);
        CHECK((a.position[0][k] - Eigen::Vector3d(1.0, 2.0, 0.0)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("clock offset shifts every stream of that participant") {
    auto s = testutil::empty_session(2);
    testutil::add_speech(s, 1, 1.0, 2.0);
    testutil::add_gaze(s, 1, "o", 0.5, 1.5);
    testutil::add_pose(s, 1, 0.0, 0, 0, 0);
    testutil::add_pose(s, 1, 1.0, 1, 0, 0);
    testutil::add_speech(s, 0, 1.0, 2.0);
    testutil::add_pose(s, 0, 0.0, 0, 0, 0);
    s.clock_offsets[1] = 0.5;

    auto a = align(s, 0.1);
    // participant 1 shifted by +0.5, participant 0 untouched
    for (const auto& seg : a.base.speech) {
        if (seg.speaker == 1) {
            CHECK(seg.start == doctest::Approx(1.5));
            CHECK(seg.end == doctest::Approx(2.5));
        } else {
            CHECK(seg.start == doctest::Approx(1.0));
        }
    }
    CHECK(a.base.gaze[0].start == doctest::Approx(1.0));
    CHECK(a.base.poses[1][0].t == doctest::Approx(0.5));
    CHECK(a.base.clock_offsets[1] == 0.0);
}

TEST_CASE("linear interpolation onto the grid") {
    auto s = testutil::empty_session(2);
    testutil::add_pose(s, 0, 0.0, 0.0, 0.0, 0.0);
    testutil::add_pose(s, 0, 1.0, 1.0, 0.0, 0.0);
    testutil::add_pose(s, 1, 0.0, 5.0, 5.0, 0.0);
    testutil::add_pose(s, 1, 1.0, 5.0, 5.0, 0.0);
    auto a = align(s, 0.25);
    REQUIRE(a.grid.size() == 5);
    CHECK(a.position[0][1].x() == doctest::Approx(0.25));
    CHECK(a.position[0][2].x() == doctest::Approx(0.5));
    CHECK(a.position[0][3].x() == doctest::Approx(0.75));
}

TEST_CASE("samples outside pose coverage are absent, never extrapolated") {
    auto s = testutil::empty_session(2);
    testutil::add_pose(s, 0, 1.0, 0, 0, 0);
    testutil::add_pose(s, 0, 2.0, 1, 0, 0);
    testutil::add_speech(s, 1, 0.0, 4.0);  // extends span to 4 s
    auto a = align(s, 0.5);
    CHECK_FALSE(a.present[0][0]);  // t=0 before first sample
    CHECK(a.present[0][2]);        // t=1.0
    CHECK(a.present[0][4]);        // t=2.0
    CHECK_FALSE(a.present[0][6]);  // t=3.0 after last sample
    CHECK_FALSE(a.present[1][0]);  // no poses at all
    CHECK(a.warnings.size() == 1); // pose-absent participant warning
}

TEST_CASE("negative post-alignment timestamps are rejected") {
    auto s = testutil::empty_session(2);
    testutil::add_speech(s, 0, 0.2, 1.0);
    s.clock_offsets[0] = -0.5;
    CHECK_THROWS_AS(align(s, 0.1), InvariantError);
}

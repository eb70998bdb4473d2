#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dyadfeat.hpp"
#include "session.hpp"
#include "sync.hpp"

namespace gist::synth {

// The four planted dyadic behavior modes the clusterer should rediscover.
enum class BehaviorMode : int {
    RhythmicLeaderFollower = 0,
    AnimatedCollaboration = 1,
    MonotoneFocus = 2,
    InstructorDemonstration = 3,
};
constexpr int kModeCount = 4;
const char* mode_name(BehaviorMode m);

struct Phase {
    double duration = 0.0;  // seconds
    int mode = 0;
};

struct PhaseScript {
    int n_participants = 2;
    uint64_t seed = 0;
    int object_vocab = 8;
    std::string session_id = "synth";
    // aligned with dyadfeat::all_dyads(n_participants)
    std::vector<std::vector<Phase>> per_dyad;

    double total_duration() const;
    void validate() const;
};

PhaseScript parse_script(const std::string& json_text);
std::string script_to_json(const PhaseScript& script);

// Generative parameters of one mode. Speech runs as a leader/follower turn
// cycle, gaze as sequential (optionally bursty) joint-fixation events over
// a per-mode object set, poses as a smoothed oscillating dyadic distance.
struct ModePreset {
    // speech
    double turn_period = 8.0;
    double leader_share = 0.9;     // leader's share of speaking time
    double activity = 0.9;         // speaking fraction of the cycle
    double overlap_frac = 0.0;     // follower onset overlap into the leader turn
    double turn_jitter = 0.25;
    double share_jitter = 0.05;
    double response_gap = 0.3;     // seconds between leader end and follower start
    bool paired_response = false;  // rare tight call-response pairs instead of turn cycles
    // gaze
    double event_rate = 1.5;     // joint fixations per second (steady mode)
    double event_dur = 0.3;
    int object_count = 4;
    double repeat_prob = 0.3;    // chance the next event revisits the same object
    int burst_size = 1;          // > 1 switches to bursty arrivals
    double burst_rate = 0.0;     // bursts per second when bursty
    // pose
    double dist_mean = 3.0;      // feet
    double osc_amp = 0.1;
    double osc_period = 8.0;
    double walk_noise = 0.02;

    double effective_fixation_rate() const {
        return burst_size > 1 ? burst_rate * double(burst_size) : event_rate;
    }
    void validate(int vocab) const;
};

// Presets tuned so the four modes' z-profiles reproduce the qualitative
// cluster signature: mode 0 high dominance / low entropy / far apart,
// mode 1 high entropy / rich shared attention / close, mode 2 narrow
// repetitive focus, mode 3 varied content with muted speech.
std::array<ModePreset, kModeCount> default_presets();

struct DyadTruth {
    dyadfeat::DyadId dyad;
    std::vector<int> window_modes;  // per 32s/16s window, majority phase coverage
};

struct GenerateResult {
    model::SessionRecording session;
    std::vector<DyadTruth> truth;
    std::vector<sync::Window> truth_windows;
};

GenerateResult generate(const PhaseScript& script, const std::array<ModePreset, kModeCount>& presets);

std::string truth_to_csv(const GenerateResult& r);
// (dyad_i, dyad_j, window_index) -> mode rows
std::vector<std::array<int, 4>> parse_truth_csv(const std::string& text);

// Convenience: uniform-phase corpus script, each dyad cycling the four
// modes in a seeded order with equal total duration per mode.
PhaseScript make_cycle_script(int n_participants, int cycles, double phase_duration, uint64_t seed,
                              const std::string& session_id = "synth");

}  // namespace gist::synth

#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace gist::model {

// Session-relative seconds. Distances are feet throughout.
using Timestamp = double;
using ParticipantId = int;

struct SpeechSegment {
    ParticipantId speaker = 0;
    Timestamp start = 0.0;
    Timestamp end = 0.0;
    bool operator==(const SpeechSegment&) const = default;
};

// Gaze is stored as per-object fixation intervals; the ray/scene
// intersection happens upstream (or in the synthetic generator).
struct GazeFixation {
    ParticipantId participant = 0;
    std::string object_id;
    Timestamp start = 0.0;
    Timestamp end = 0.0;
    bool operator==(const GazeFixation&) const = default;
};

struct PoseSample {
    ParticipantId participant = 0;
    Timestamp t = 0.0;
    std::array<double, 3> position{};     // feet
    std::array<double, 4> orientation{};  // unit quaternion (w,x,y,z)
    bool operator==(const PoseSample&) const = default;
};

struct SessionRecording {
    std::vector<ParticipantId> participants;    // must be 0..N-1
    std::vector<SpeechSegment> speech;
    std::vector<GazeFixation> gaze;
    std::vector<std::vector<PoseSample>> poses; // indexed by participant
    std::vector<double> clock_offsets;          // seconds, one per participant
    std::map<std::string, std::string> metadata;

    int participant_count() const { return int(participants.size()); }
    // Largest end/t across all streams; 0 for a session with no records.
    double span() const;
    bool operator==(const SessionRecording&) const = default;
};

struct Violation {
    std::string rule;
    std::string detail;
};

// Sorts streams into canonical order: speech by (speaker,start,end), gaze
// by (participant,start,object,end), poses per participant by t. Stable
// and idempotent.
void canonicalize(SessionRecording& s);

// Total: returns violations instead of throwing. Empty list iff all type
// invariants hold.
std::vector<Violation> validate_session(const SessionRecording& s);

// Canonical JSON-lines serialization (header line first, then speech,
// gaze, pose records). Deterministic bytes for a given session.
std::string serialize_session(const SessionRecording& s);
SessionRecording parse_session(const std::string& text);

// parse + canonicalize + validate; throws ParseError / InvariantError.
SessionRecording load_session(const std::string& path);
void save_session(const SessionRecording& s, const std::string& path);

}  // namespace gist::model

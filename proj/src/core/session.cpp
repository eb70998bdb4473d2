#include "session.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common.hpp"
#include "json.hpp"

namespace gist::model {

using nlohmann::json;

double SessionRecording::span() const {
    double s = 0.0;
    for (const auto& seg : speech) s = std::max(s, seg.end);
    for (const auto& g : gaze) s = std::max(s, g.end);
    for (const auto& pp : poses)
        for (const auto& p : pp) s = std::max(s, p.t);
    return s;
}

void canonicalize(SessionRecording& s) {
    std::stable_sort(s.speech.begin(), s.speech.end(), [](const SpeechSegment& a, const SpeechSegment& b) {
        if (a.speaker != b.speaker) return a.speaker < b.speaker;
        if (a.start != b.start) return a.start < b.start;
        return a.end < b.end;
    });
    std::stable_sort(s.gaze.begin(), s.gaze.end(), [](const GazeFixation& a, const GazeFixation& b) {
        if (a.participant != b.participant) return a.participant < b.participant;
        if (a.start != b.start) return a.start < b.start;
        if (a.object_id != b.object_id) return a.object_id < b.object_id;
        return a.end < b.end;
    });
    for (auto& pp : s.poses)
        std::stable_sort(pp.begin(), pp.end(), [](const PoseSample& a, const PoseSample& b) { return a.t < b.t; });
}

namespace {

bool finite(double v) { return std::isfinite(v); }

void check_participant(const SessionRecording& s, ParticipantId p, const std::string& where,
                       std::vector<Violation>& out) {
    if (p < 0 || p >= s.participant_count())
        out.push_back({"missing-participant", where + " references unknown participant " + std::to_string(p)});
}

}  // namespace

std::vector<Violation> validate_session(const SessionRecording& s) {
    std::vector<Violation> v;

    const int n = s.participant_count();
    if (n < 2) v.push_back({"participants", "session needs at least 2 participants, has " + std::to_string(n)});
    for (int i = 0; i < n; ++i)
        if (s.participants[i] != i) {
            v.push_back({"participants", "participant list must be 0..N-1 in order"});
            break;
        }
    if (int(s.clock_offsets.size()) != n)
        v.push_back({"clock-offsets", "expected " + std::to_string(n) + " clock offsets, found " +
                                          std::to_string(s.clock_offsets.size())});
    for (size_t i = 0; i < s.clock_offsets.size(); ++i)
        if (!finite(s.clock_offsets[i]))
            v.push_back({"clock-offsets", "non-finite offset for participant " + std::to_string(i)});
    if (int(s.poses.size()) != n)
        v.push_back({"poses", "pose stream list must have one entry per participant"});

    for (size_t k = 0; k < s.speech.size(); ++k) {
        const auto& seg = s.speech[k];
        check_participant(s, seg.speaker, "speech[" + std::to_string(k) + "]", v);
        if (!finite(seg.start) || !finite(seg.end))
            v.push_back({"speech-finite", "speech[" + std::to_string(k) + "] has non-finite timestamps"});
        else if (!(seg.end > seg.start))
            v.push_back({"speech-interval", "speech[" + std::to_string(k) + "] end <= start"});
    }
    // same-speaker overlap check on a per-speaker time-sorted view
    {
        std::vector<size_t> idx(s.speech.size());
        for (size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            if (s.speech[a].speaker != s.speech[b].speaker) return s.speech[a].speaker < s.speech[b].speaker;
            return s.speech[a].start < s.speech[b].start;
        });
        for (size_t k = 0; k + 1 < idx.size(); ++k) {
            const auto& a = s.speech[idx[k]];
            const auto& b = s.speech[idx[k + 1]];
            if (a.speaker == b.speaker && finite(a.end) && finite(b.start) && b.start < a.end)
                v.push_back({"speech-overlap", "speech[" + std::to_string(idx[k]) + "] and speech[" +
                                                   std::to_string(idx[k + 1]) + "] overlap for speaker " +
                                                   std::to_string(a.speaker)});
        }
    }

    for (size_t k = 0; k < s.gaze.size(); ++k) {
        const auto& g = s.gaze[k];
        check_participant(s, g.participant, "gaze[" + std::to_string(k) + "]", v);
        if (g.object_id.empty()) v.push_back({"gaze-object", "gaze[" + std::to_string(k) + "] has empty object id"});
        if (!finite(g.start) || !finite(g.end))
            v.push_back({"gaze-finite", "gaze[" + std::to_string(k) + "] has non-finite timestamps"});
        else if (!(g.end > g.start))
            v.push_back({"gaze-interval", "gaze[" + std::to_string(k) + "] end <= start"});
    }

    for (size_t p = 0; p < s.poses.size(); ++p) {
        const auto& pp = s.poses[p];
        for (size_t k = 0; k < pp.size(); ++k) {
            const auto& ps = pp[k];
            if (ps.participant != int(p))
                v.push_back({"pose-participant",
                             "pose[" + std::to_string(p) + "][" + std::to_string(k) + "] participant mismatch"});
            bool ok = finite(ps.t);
            for (double c : ps.position) ok = ok && finite(c);
            for (double c : ps.orientation) ok = ok && finite(c);
            if (!ok) {
                v.push_back({"pose-finite", "pose[" + std::to_string(p) + "][" + std::to_string(k) + "] non-finite"});
                continue;
            }
            double norm = std::sqrt(ps.orientation[0] * ps.orientation[0] + ps.orientation[1] * ps.orientation[1] +
                                    ps.orientation[2] * ps.orientation[2] + ps.orientation[3] * ps.orientation[3]);
            if (std::abs(norm - 1.0) > 1e-6)
                v.push_back({"pose-quaternion", "pose[" + std::to_string(p) + "][" + std::to_string(k) +
                                                    "] quaternion norm " + fmt_double(norm)});
            if (k > 0 && !(pp[k].t > pp[k - 1].t))
                v.push_back({"pose-ordering", "pose stream of participant " + std::to_string(p) +
                                                  " not strictly increasing at sample " + std::to_string(k)});
        }
    }

    size_t records = s.speech.size() + s.gaze.size();
    for (const auto& pp : s.poses) records += pp.size();
    if (records == 0) v.push_back({"empty-session", "session carries no data records"});

    return v;
}

namespace {

std::string pose_line(const PoseSample& p) {
    std::string out = "{\"type\":\"pose\",\"p\":" + std::to_string(p.participant) + ",\"t\":" + fmt_double(p.t) +
                      ",\"pos\":[" + fmt_double(p.position[0]) + "," + fmt_double(p.position[1]) + "," +
                      fmt_double(p.position[2]) + "],\"quat\":[" + fmt_double(p.orientation[0]) + "," +
                      fmt_double(p.orientation[1]) + "," + fmt_double(p.orientation[2]) + "," +
                      fmt_double(p.orientation[3]) + "]}";
    return out;
}

}  // namespace

std::string serialize_session(const SessionRecording& sin) {
    SessionRecording s = sin;
    canonicalize(s);

    std::string out;
    out += "{\"type\":\"header\",\"participants\":[";
    for (size_t i = 0; i < s.participants.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(s.participants[i]);
    }
    out += "],\"clock_offsets\":[";
    for (size_t i = 0; i < s.clock_offsets.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(s.clock_offsets[i]);
    }
    out += "],\"metadata\":{";
    bool first = true;
    for (const auto& [k, val] : s.metadata) {
        if (!first) out += ',';
        first = false;
        out += '"' + json_escape(k) + "\":\"" + json_escape(val) + '"';
    }
    out += "}}\n";

    for (const auto& seg : s.speech)
        out += "{\"type\":\"speech\",\"p\":" + std::to_string(seg.speaker) + ",\"start\":" + fmt_double(seg.start) +
               ",\"end\":" + fmt_double(seg.end) + "}\n";
    for (const auto& g : s.gaze)
        out += "{\"type\":\"gaze\",\"p\":" + std::to_string(g.participant) + ",\"obj\":\"" +
               json_escape(g.object_id) + "\",\"start\":" + fmt_double(g.start) + ",\"end\":" + fmt_double(g.end) +
               "}\n";
    for (const auto& pp : s.poses)
        for (const auto& p : pp) out += pose_line(p) + "\n";
    return out;
}

namespace {

double num_field(const json& j, const char* key, int line) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw ParseError(line, std::string("missing numeric field '") + key + "'");
    return it->get<double>();
}

int int_field(const json& j, const char* key, int line) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer())
        throw ParseError(line, std::string("missing integer field '") + key + "'");
    return it->get<int>();
}

}  // namespace

SessionRecording parse_session(const std::string& text) {
    SessionRecording s;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(lineno, e.what());
        }
        if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
            throw ParseError(lineno, "record without string 'type'");
        const std::string type = j["type"].get<std::string>();

        if (type == "header") {
            if (have_header) throw ParseError(lineno, "duplicate header record");
            if (lineno != 1) throw ParseError(lineno, "header must be the first line");
            have_header = true;
            if (!j.contains("participants") || !j["participants"].is_array())
                throw ParseError(lineno, "header missing 'participants' array");
            for (const auto& e : j["participants"]) {
                if (!e.is_number_integer()) throw ParseError(lineno, "participant ids must be integers");
                s.participants.push_back(e.get<int>());
            }
            if (!j.contains("clock_offsets") || !j["clock_offsets"].is_array())
                throw ParseError(lineno, "header missing 'clock_offsets' array");
            for (const auto& e : j["clock_offsets"]) {
                if (!e.is_number()) throw ParseError(lineno, "clock offsets must be numbers");
                s.clock_offsets.push_back(e.get<double>());
            }
            if (j.contains("metadata")) {
                if (!j["metadata"].is_object()) throw ParseError(lineno, "'metadata' must be an object");
                for (auto it = j["metadata"].begin(); it != j["metadata"].end(); ++it) {
                    if (!it.value().is_string()) throw ParseError(lineno, "metadata values must be strings");
                    s.metadata[it.key()] = it.value().get<std::string>();
                }
            }
            s.poses.resize(s.participants.size());
        } else if (type == "speech") {
            if (!have_header) throw ParseError(lineno, "record before header");
            SpeechSegment seg;
            seg.speaker = int_field(j, "p", lineno);
            seg.start = num_field(j, "start", lineno);
            seg.end = num_field(j, "end", lineno);
            s.speech.push_back(seg);
        } else if (type == "gaze") {
            if (!have_header) throw ParseError(lineno, "record before header");
            GazeFixation g;
            g.participant = int_field(j, "p", lineno);
            auto it = j.find("obj");
            if (it == j.end() || !it->is_string()) throw ParseError(lineno, "gaze record missing string 'obj'");
            g.object_id = it->get<std::string>();
            g.start = num_field(j, "start", lineno);
            g.end = num_field(j, "end", lineno);
            s.gaze.push_back(g);
        } else if (type == "pose") {
            if (!have_header) throw ParseError(lineno, "record before header");
            PoseSample p;
            p.participant = int_field(j, "p", lineno);
            p.t = num_field(j, "t", lineno);
            auto pos = j.find("pos");
            auto quat = j.find("quat");
            if (pos == j.end() || !pos->is_array() || pos->size() != 3)
                throw ParseError(lineno, "pose record needs 'pos' with 3 numbers");
            if (quat == j.end() || !quat->is_array() || quat->size() != 4)
                throw ParseError(lineno, "pose record needs 'quat' with 4 numbers");
            for (int i = 0; i < 3; ++i) p.position[i] = (*pos)[i].get<double>();
            for (int i = 0; i < 4; ++i) p.orientation[i] = (*quat)[i].get<double>();
            if (p.participant < 0 || p.participant >= int(s.poses.size()))
                throw ParseError(lineno, "pose references unknown participant " + std::to_string(p.participant));
            s.poses[p.participant].push_back(p);
        } else {
            throw ParseError(lineno, "unknown record type '" + type + "'");
        }
    }
    if (!have_header) throw ParseError(1, "missing header record");
    return s;
}

SessionRecording load_session(const std::string& path) {
    SessionRecording s = parse_session(read_text_file(path));
    canonicalize(s);
    auto violations = validate_session(s);
    if (!violations.empty()) {
        std::string msg = "session invalid (" + std::to_string(violations.size()) + " violation" +
                          (violations.size() == 1 ? "" : "s") + "): [" + violations.front().rule + "] " +
                          violations.front().detail;
        throw InvariantError(msg);
    }
    return s;
}

void save_session(const SessionRecording& s, const std::string& path) {
    write_text_file(path, serialize_session(s));
}

}  // namespace gist::model

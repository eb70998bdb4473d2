#include "synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "common.hpp"
#include "json.hpp"

namespace gist::synth {

using nlohmann::json;

const char* mode_name(BehaviorMode m) {
    switch (m) {
        case BehaviorMode::RhythmicLeaderFollower: return "rhythmic_leader_follower";
        case BehaviorMode::AnimatedCollaboration: return "animated_collaboration";
        case BehaviorMode::MonotoneFocus: return "monotone_focus";
        case BehaviorMode::InstructorDemonstration: return "instructor_demonstration";
    }
    return "?";
}

double PhaseScript::total_duration() const {
    if (per_dyad.empty()) return 0.0;
    double total = 0.0;
    for (const auto& ph : per_dyad.front()) total += ph.duration;
    return total;
}

void PhaseScript::validate() const {
    if (n_participants < 2) throw ConfigError("script: need at least 2 participants");
    const auto dyads = dyadfeat::all_dyads(n_participants);
    if (per_dyad.size() != dyads.size())
        throw ConfigError("script: expected " + std::to_string(dyads.size()) + " dyad phase lists, found " +
                          std::to_string(per_dyad.size()));
    if (object_vocab < 1) throw ConfigError("script: object vocabulary must be >= 1");
    double ref = -1.0;
    for (size_t d = 0; d < per_dyad.size(); ++d) {
        if (per_dyad[d].empty()) throw ConfigError("script: dyad " + std::to_string(d) + " has no phases");
        double total = 0.0;
        for (const auto& ph : per_dyad[d]) {
            if (!(ph.duration > 0.0)) throw ConfigError("script: phase durations must be positive");
            if (ph.mode < 0 || ph.mode >= kModeCount) throw ConfigError("script: mode out of range");
            total += ph.duration;
        }
        if (ref < 0.0)
            ref = total;
        else if (std::abs(total - ref) > 1e-9)
            throw ConfigError("script: total duration must match across dyads");
    }
}

PhaseScript parse_script(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(1, std::string("script: ") + e.what());
    }
    PhaseScript s;
    s.n_participants = j.value("n_participants", 2);
    s.seed = j.value("seed", uint64_t(0));
    s.object_vocab = j.value("object_vocab", 8);
    s.session_id = j.value("session_id", std::string("synth"));

    const auto dyads = dyadfeat::all_dyads(s.n_participants);
    auto parse_phases = [](const json& arr) {
        std::vector<Phase> out;
        for (const auto& p : arr) out.push_back({p.at("duration").get<double>(), p.at("mode").get<int>()});
        return out;
    };
    if (j.contains("dyad_phases")) {
        s.per_dyad.assign(dyads.size(), {});
        std::vector<bool> seen(dyads.size(), false);
        for (const auto& e : j["dyad_phases"]) {
            int i = e.at("i").get<int>();
            int jj = e.at("j").get<int>();
            auto it = std::find_if(dyads.begin(), dyads.end(),
                                   [&](const dyadfeat::DyadId& d) { return d.i == i && d.j == jj; });
            if (it == dyads.end())
                throw ConfigError("script: unknown dyad (" + std::to_string(i) + "," + std::to_string(jj) + ")");
            size_t at = size_t(it - dyads.begin());
            seen[at] = true;
            s.per_dyad[at] = parse_phases(e.at("phases"));
        }
        for (size_t d = 0; d < seen.size(); ++d)
            if (!seen[d]) throw ConfigError("script: dyad_phases must cover every dyad");
    } else if (j.contains("phases")) {
        auto phases = parse_phases(j["phases"]);
        s.per_dyad.assign(dyads.size(), phases);
    } else {
        throw ConfigError("script: needs 'phases' or 'dyad_phases'");
    }
    s.validate();
    return s;
}

std::string script_to_json(const PhaseScript& script) {
    json j;
    j["n_participants"] = script.n_participants;
    j["seed"] = script.seed;
    j["object_vocab"] = script.object_vocab;
    j["session_id"] = script.session_id;
    const auto dyads = dyadfeat::all_dyads(script.n_participants);
    json dp = json::array();
    for (size_t d = 0; d < dyads.size(); ++d) {
        json phases = json::array();
        for (const auto& ph : script.per_dyad[d]) phases.push_back({{"duration", ph.duration}, {"mode", ph.mode}});
        dp.push_back({{"i", dyads[d].i}, {"j", dyads[d].j}, {"phases", phases}});
    }
    j["dyad_phases"] = std::move(dp);
    return j.dump(2);
}

void ModePreset::validate(int vocab) const {
    if (!(turn_period > 0.2)) throw ConfigError("preset: turn period too small");
    if (leader_share < 0.0 || leader_share > 1.0) throw ConfigError("preset: leader share outside [0,1]");
    if (activity < 0.0 || activity > 1.0) throw ConfigError("preset: activity outside [0,1]");
    if (overlap_frac < 0.0 || overlap_frac > 1.0) throw ConfigError("preset: overlap fraction outside [0,1]");
    if (object_count < 1 || object_count > vocab)
        throw ConfigError("preset: object count must lie in [1, vocabulary size]");
    if (event_dur <= 0.0) throw ConfigError("preset: event duration must be positive");
    if (burst_size < 1) throw ConfigError("preset: burst size must be >= 1");
    if (burst_size == 1 && event_rate > 0.0 && 1.0 / event_rate <= event_dur)
        throw ConfigError("preset: fixation rate too high for the event duration");
    if (dist_mean - osc_amp <= 0.0) throw ConfigError("preset: oscillation would drive distance negative");
    if (osc_period <= 0.0 || walk_noise < 0.0) throw ConfigError("preset: invalid pose parameters");
}

std::array<ModePreset, kModeCount> default_presets() {
    std::array<ModePreset, kModeCount> p;
    // structured turn-based leadership: one dominant voice, predictable
    // pacing, group spread out
    p[0] = ModePreset{10.0, 0.93, 0.95, 0.0, 0.2, 0.03, 0.25, false,
                      1.8, 0.30, 4, 0.35, 1, 0.0,
                      4.0, 0.15, 8.0, 0.02};
    // animated synchronous collaboration: a full jittered alternation with
    // overlap inside every second, rich joint attention, close quarters
    p[1] = ModePreset{1.0, 0.50, 0.97, 0.65, 0.2, 0.20, 0.05, false,
                      2.0, 0.30, 5, 0.30, 1, 0.0,
                      1.0, 0.30, 3.5, 0.03};
    // monotone focus: balanced sparse exchange, repeated fixation bursts on
    // a single object
    p[2] = ModePreset{10.0, 0.50, 0.50, 0.0, 0.25, 0.05, 2.2, false,
                      0.0, 0.32, 1, 0.0, 3, 0.33,
                      2.5, 0.05, 10.0, 0.015};
    // instructor demonstration: sparse balanced call-response murmurs, gaze
    // roaming varied content together
    p[3] = ModePreset{9.0, 0.50, 0.05, 0.0, 0.30, 0.10, 0.05, true,
                      1.9, 0.30, 8, 0.25, 1, 0.0,
                      2.0, 0.12, 6.0, 0.02};
    return p;
}

namespace {

struct RawSeg {
    int speaker;
    double start, end;
};

// leader/follower turn cycle for one dyad over [t0, t1); paired_response
// mode instead drops sparse call-response bursts
void gen_speech_phase(const ModePreset& m, double t0, double t1, int pi, int pj, Rng& rng,
                      std::vector<RawSeg>& out) {
    if (m.paired_response) {
        // tight i/j exchange every turn_period seconds; both parts land in
        // the same short burst so speaking time stays balanced throughout
        const double each = 0.5 * m.activity * m.turn_period;
        double t = t0;
        bool i_first = true;
        while (t < t1 - 1e-9) {
            double anchor = t + rng.uniform(0.2, std::max(0.3, m.turn_period - 1.0));
            double len = std::max(0.12, each * (1.0 + m.turn_jitter * (2.0 * rng.uniform() - 1.0)));
            double a0 = anchor, a1 = anchor + len;
            double b0 = a1 + m.response_gap * (0.6 + 0.8 * rng.uniform());
            double b1 = b0 + len;
            int first = i_first ? pi : pj;
            int second = i_first ? pj : pi;
            for (auto [p, a, b] : {std::tuple{first, a0, a1}, std::tuple{second, b0, b1}}) {
                a = std::max(a, t0);
                b = std::min(b, t1);
                if (b - a >= 0.1) out.push_back({p, a, b});
            }
            i_first = !i_first;
            t += m.turn_period * (1.0 + m.turn_jitter * (2.0 * rng.uniform() - 1.0));
        }
        return;
    }

    double t = t0;
    bool leader_is_i = true;
    while (t < t1 - 1e-9) {
        double cycle = m.turn_period * (1.0 + m.turn_jitter * (2.0 * rng.uniform() - 1.0));
        cycle = std::max(0.4, cycle);
        double share = std::clamp(m.leader_share + m.share_jitter * (2.0 * rng.uniform() - 1.0), 0.05, 0.95);
        double speak_total = m.activity * cycle;
        double lead_len = share * speak_total;
        double follow_len = speak_total - lead_len;
        double gap_total = cycle - speak_total;
        double g1 = std::min(gap_total, m.response_gap * (0.5 + rng.uniform()));

        int lead = leader_is_i ? pi : pj;
        int follow = leader_is_i ? pj : pi;
        double overlap = m.overlap_frac * std::min(lead_len, follow_len) * rng.uniform();

        double lead_start = t;
        double lead_end = t + lead_len;
        double follow_start = lead_end + g1 - overlap;
        double follow_end = follow_start + follow_len;

        for (auto [p, a, b] : {std::tuple{lead, lead_start, lead_end}, std::tuple{follow, follow_start, follow_end}}) {
            a = std::max(a, t0);
            b = std::min(b, t1);
            if (b - a >= 0.1) out.push_back({p, a, b});
        }
        t += cycle;
        leader_is_i = !leader_is_i;
    }
}

struct RawFix {
    int participant;
    int object;
    double start, end;
};

void gen_gaze_phase(const ModePreset& m, double t0, double t1, int pi, int pj, Rng& rng,
                    std::vector<RawFix>& out) {
    int last_obj = -1;
    auto pick_object = [&]() {
        if (m.object_count == 1) return 0;
        if (last_obj >= 0 && rng.uniform() < m.repeat_prob) return last_obj;
        int o = int(rng.next() % uint64_t(m.object_count));
        return o;
    };
    auto emit = [&](double start, int obj) {
        double ja = 0.02 * rng.uniform(), jb = 0.02 * rng.uniform();
        double jc = 0.02 * rng.uniform(), jd = 0.02 * rng.uniform();
        double a0 = std::max(t0, start - ja), a1 = std::min(t1, start + m.event_dur + jb);
        double b0 = std::max(t0, start - jc), b1 = std::min(t1, start + m.event_dur + jd);
        if (a1 - a0 >= 0.05) out.push_back({pi, obj, a0, a1});
        if (b1 - b0 >= 0.05) out.push_back({pj, obj, b0, b1});
        last_obj = obj;
    };

    if (m.burst_size > 1) {
        if (m.burst_rate <= 0.0) return;
        double t = t0 + rng.exponential(m.burst_rate);
        while (t < t1 - m.event_dur) {
            int obj = pick_object();
            for (int r = 0; r < m.burst_size; ++r) {
                double start = t + double(r) * (m.event_dur + 0.06);
                if (start + m.event_dur > t1) break;
                emit(start, obj);
            }
            t += double(m.burst_size) * (m.event_dur + 0.06) + rng.exponential(m.burst_rate);
        }
        return;
    }
    if (m.event_rate <= 0.0) return;
    const double residual = 1.0 / m.event_rate - m.event_dur;
    double t = t0 + rng.exponential(1.0 / std::max(1e-6, residual));
    while (t + m.event_dur <= t1) {
        emit(t, pick_object());
        t += m.event_dur + rng.exponential(1.0 / std::max(1e-6, residual));
    }
}

}  // namespace

GenerateResult generate(const PhaseScript& script, const std::array<ModePreset, kModeCount>& presets) {
    script.validate();
    for (const auto& p : presets) p.validate(script.object_vocab);

    const int n = script.n_participants;
    const auto dyads = dyadfeat::all_dyads(n);
    const double total = script.total_duration();

    GenerateResult res;
    auto& s = res.session;
    s.participants.resize(size_t(n));
    for (int p = 0; p < n; ++p) s.participants[size_t(p)] = p;
    s.clock_offsets.assign(size_t(n), 0.0);
    s.poses.resize(size_t(n));
    s.metadata["session_id"] = script.session_id;
    s.metadata["task"] = "synthetic_phase_script";
    s.metadata["synth_seed"] = std::to_string(script.seed);
    s.metadata["generator"] = "gist-synthgen-v1 splitmix64+box-muller";

    // phase boundaries per dyad
    std::vector<std::vector<double>> starts(dyads.size());
    for (size_t d = 0; d < dyads.size(); ++d) {
        double t = 0.0;
        for (const auto& ph : script.per_dyad[d]) {
            starts[d].push_back(t);
            t += ph.duration;
        }
    }
    auto mode_at = [&](size_t d, double t) {
        const auto& phases = script.per_dyad[d];
        for (size_t k = phases.size(); k-- > 0;)
            if (t >= starts[d][k] - 1e-12) return phases[k].mode;
        return phases.front().mode;
    };

    // speech + gaze per dyad
    std::vector<RawSeg> segs;
    std::vector<RawFix> fixes;
    for (size_t d = 0; d < dyads.size(); ++d) {
        Rng rng_s(mix_seed(script.seed, 0x7370656563ull, uint64_t(d)));
        Rng rng_g(mix_seed(script.seed, 0x67617a65ull, uint64_t(d)));
        for (size_t k = 0; k < script.per_dyad[d].size(); ++k) {
            const auto& ph = script.per_dyad[d][k];
            const auto& m = presets[size_t(ph.mode)];
            double t0 = starts[d][k], t1 = t0 + ph.duration;
            gen_speech_phase(m, t0, t1, dyads[d].i, dyads[d].j, rng_s, segs);
            gen_gaze_phase(m, t0, t1, dyads[d].i, dyads[d].j, rng_g, fixes);
        }
    }

    // per-speaker conflict resolution: keep the earliest non-overlapping
    // segments (multi-dyad scripts can collide on a shared participant)
    std::stable_sort(segs.begin(), segs.end(), [](const RawSeg& a, const RawSeg& b) {
        if (a.speaker != b.speaker) return a.speaker < b.speaker;
        if (a.start != b.start) return a.start < b.start;
        return a.end < b.end;
    });
    double open_end = -1.0;
    int open_speaker = -1;
    for (const auto& seg : segs) {
        if (seg.speaker != open_speaker) {
            open_speaker = seg.speaker;
            open_end = -1.0;
        }
        if (seg.start < open_end) continue;  // drop the later colliding turn
        s.speech.push_back({seg.speaker, seg.start, seg.end});
        open_end = seg.end;
    }

    for (const auto& f : fixes)
        s.gaze.push_back({f.participant, "obj_" + std::to_string(f.object), f.start, f.end});

    // poses: smoothed per-dyad target distances; exact pairwise realization
    // for two-participant sessions, polygon layout otherwise
    const double dt = 0.1;
    const int steps = int(std::lround(total / dt));
    std::vector<Rng> rng_p;
    std::vector<double> phase0, psi0, ou;
    for (size_t d = 0; d < dyads.size(); ++d) {
        rng_p.emplace_back(mix_seed(script.seed, 0x706f7365ull, uint64_t(d)));
        phase0.push_back(rng_p.back().uniform(0.0, 6.2831853));
        psi0.push_back(rng_p.back().uniform(0.0, 6.2831853));
        ou.push_back(0.0);
    }
    std::vector<double> dist(dyads.size(), 0.0);
    const double max_step = 2.0 * dt;  // 2 ft/s walking limit

    for (int k = 0; k <= steps; ++k) {
        const double t = k * dt;
        for (size_t d = 0; d < dyads.size(); ++d) {
            const auto& m = presets[size_t(mode_at(d, std::min(t, total - 1e-6)))];
            ou[d] = ou[d] * (1.0 - dt / 2.0) + m.walk_noise * std::sqrt(dt) * rng_p[d].normal();
            double target = m.dist_mean + m.osc_amp * std::sin(6.2831853 * t / m.osc_period + phase0[d]) + ou[d];
            target = std::max(0.2, target);
            if (k == 0)
                dist[d] = target;
            else
                dist[d] += std::clamp(target - dist[d], -max_step, max_step);
        }
        if (n == 2) {
            double psi = psi0[0] + 0.25 * std::sin(6.2831853 * t / 70.0);
            double mx = 0.4 * std::sin(6.2831853 * t / 45.0);
            double my = 0.4 * std::cos(6.2831853 * t / 60.0);
            double ux = std::cos(psi), uy = std::sin(psi);
            double h = dist[0] / 2.0;
            s.poses[0].push_back({0, t, {mx - h * ux, my - h * uy, 5.5}, {1.0, 0.0, 0.0, 0.0}});
            s.poses[1].push_back({1, t, {mx + h * ux, my + h * uy, 5.5}, {1.0, 0.0, 0.0, 0.0}});
        } else {
            for (int p = 0; p < n; ++p) {
                double r = 0.0;
                int cnt = 0;
                for (size_t d = 0; d < dyads.size(); ++d)
                    if (dyads[d].i == p || dyads[d].j == p) {
                        r += dist[d];
                        ++cnt;
                    }
                r = (r / double(cnt)) / (2.0 * std::sin(3.14159265358979 / double(n)));
                double ang = 6.2831853 * double(p) / double(n);
                s.poses[size_t(p)].push_back(
                    {p, t, {r * std::cos(ang), r * std::sin(ang), 5.5}, {1.0, 0.0, 0.0, 0.0}});
            }
        }
    }

    model::canonicalize(s);

    // ground truth per (dyad, 32s/16s window): majority phase coverage,
    // ties toward the earlier phase
    res.truth_windows = sync::make_windows(total, 32.0, 16.0);
    for (size_t d = 0; d < dyads.size(); ++d) {
        DyadTruth tr;
        tr.dyad = dyads[d];
        for (const auto& w : res.truth_windows) {
            double best_cov = -1.0;
            int best_mode = script.per_dyad[d].front().mode;
            for (size_t k = 0; k < script.per_dyad[d].size(); ++k) {
                double p0 = starts[d][k];
                double p1 = p0 + script.per_dyad[d][k].duration;
                double cov = std::min(p1, w.t1) - std::max(p0, w.t0);
                if (cov > best_cov + 1e-9) {  // strict improvement keeps the earlier phase on ties
                    best_cov = cov;
                    best_mode = script.per_dyad[d][k].mode;
                }
            }
            tr.window_modes.push_back(best_mode);
        }
        res.truth.push_back(std::move(tr));
    }
    return res;
}

std::string truth_to_csv(const GenerateResult& r) {
    std::string out = "dyad_i,dyad_j,window_index,mode\n";
    for (const auto& tr : r.truth)
        for (size_t w = 0; w < tr.window_modes.size(); ++w)
            out += std::to_string(tr.dyad.i) + "," + std::to_string(tr.dyad.j) + "," + std::to_string(w) + "," +
                   std::to_string(tr.window_modes[w]) + "\n";
    return out;
}

std::vector<std::array<int, 4>> parse_truth_csv(const std::string& text) {
    std::vector<std::array<int, 4>> rows;
    size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (first) {
            first = false;
            continue;
        }
        if (line.empty()) continue;
        std::array<int, 4> row{};
        int field = 0;
        size_t at = 0;
        while (field < 4) {
            size_t comma = line.find(',', at);
            std::string tok = comma == std::string::npos ? line.substr(at) : line.substr(at, comma - at);
            row[size_t(field++)] = std::stoi(tok);
            if (comma == std::string::npos) break;
            at = comma + 1;
        }
        if (field != 4) throw ParseError(int(rows.size() + 2), "truth csv: expected 4 fields");
        rows.push_back(row);
    }
    return rows;
}

PhaseScript make_cycle_script(int n_participants, int cycles, double phase_duration, uint64_t seed,
                              const std::string& session_id) {
    PhaseScript s;
    s.n_participants = n_participants;
    s.seed = seed;
    s.object_vocab = 8;
    s.session_id = session_id;
    const auto dyads = dyadfeat::all_dyads(n_participants);
    for (size_t d = 0; d < dyads.size(); ++d) {
        Rng rng(mix_seed(seed, 0x6379636c65ull, uint64_t(d)));
        std::vector<Phase> phases;
        for (int c = 0; c < cycles; ++c) {
            std::array<int, kModeCount> order{0, 1, 2, 3};
            for (int i = kModeCount - 1; i > 0; --i)
                std::swap(order[size_t(i)], order[size_t(rng.next() % uint64_t(i + 1))]);
            for (int m : order) phases.push_back({phase_duration, m});
        }
        s.per_dyad.push_back(std::move(phases));
    }
    return s;
}

}  // namespace gist::synth

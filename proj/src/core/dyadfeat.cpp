#include "dyadfeat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cluster_metrics.hpp"
#include "common.hpp"

namespace gist::dyadfeat {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kStateDt = 0.1;  // speech-state sampling resolution inside a bin
}

std::vector<DyadId> all_dyads(int participant_count) {
    std::vector<DyadId> out;
    for (int i = 0; i < participant_count; ++i)
        for (int j = i + 1; j < participant_count; ++j) out.push_back({i, j});
    return out;
}

const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> names = {
        "entropy_speaking", "dominance_ratio", "material_diversity", "dist_mean", "prox_binary",
        "approach_rate", "shared_att_cnt", "speak_time_i", "speak_time_j", "speak_time_total",
        "turn_count", "overlap_rate", "silence_frac", "mean_turn_len", "shared_att_dur",
        "inter_fixation_mean", "longest_joint_fixation", "dist_min", "dist_std", "approach_flips",
        "rel_speed_mean"};
    return names;
}

namespace {

struct Interval {
    double start, end;
};

struct JointEvent {
    int object;
    double start, end;
};

// Per-dyad extraction context, built once per series.
struct DyadContext {
    std::vector<Interval> speech_i, speech_j;
    std::vector<JointEvent> events;  // sorted by start
};

double overlap_with(const std::vector<Interval>& segs, double a, double b) {
    double total = 0.0;
    for (const auto& s : segs) {
        if (s.start >= b) break;
        total += std::max(0.0, std::min(s.end, b) - std::max(s.start, a));
    }
    return total;
}

double pairwise_overlap_in(const std::vector<Interval>& xs, const std::vector<Interval>& ys, double a, double b) {
    double total = 0.0;
    for (const auto& x : xs) {
        if (x.start >= b) break;
        double xa = std::max(x.start, a), xb = std::min(x.end, b);
        if (xb <= xa) continue;
        for (const auto& y : ys) {
            if (y.start >= xb) break;
            total += std::max(0.0, std::min(y.end, xb) - std::max(y.start, xa));
        }
    }
    return total;
}

bool covered_at(const std::vector<Interval>& segs, double t) {
    for (const auto& s : segs) {
        if (s.start > t) return false;
        if (t < s.end) return true;
    }
    return false;
}

DyadContext build_context(const sync::AlignedSession& s, DyadId d, const sociogram::Thresholds& th) {
    DyadContext ctx;
    for (const auto& seg : s.base.speech) {
        if (seg.speaker == d.i) ctx.speech_i.push_back({seg.start, seg.end});
        if (seg.speaker == d.j) ctx.speech_j.push_back({seg.start, seg.end});
    }

    // joint fixation events: same-object overlaps of length >= min gaze
    std::map<std::string, int> object_index;
    std::map<int, std::vector<Interval>> fix_i, fix_j;
    for (const auto& g : s.base.gaze) {
        if (g.participant != d.i && g.participant != d.j) continue;
        auto [it, inserted] = object_index.try_emplace(g.object_id, int(object_index.size()));
        auto& bucket = g.participant == d.i ? fix_i[it->second] : fix_j[it->second];
        bucket.push_back({g.start, g.end});
    }
    for (const auto& [obj, xs] : fix_i) {
        auto jt = fix_j.find(obj);
        if (jt == fix_j.end()) continue;
        for (const auto& x : xs) {
            for (const auto& y : jt->second) {
                double a = std::max(x.start, y.start);
                double b = std::min(x.end, y.end);
                if (b - a >= th.min_gaze_overlap) ctx.events.push_back({obj, a, b});
            }
        }
    }
    std::sort(ctx.events.begin(), ctx.events.end(), [](const JointEvent& a, const JointEvent& b) {
        if (a.start != b.start) return a.start < b.start;
        if (a.end != b.end) return a.end < b.end;
        return a.object < b.object;
    });
    return ctx;
}

BinFeatures extract_bin(const sync::AlignedSession& s, DyadId d, const DyadContext& ctx, int bin_start,
                        const sociogram::Thresholds& th) {
    BinFeatures out;
    out.values.assign(kFeatureCount, 0.0);
    out.present.assign(kFeatureCount, 1);
    const double a = double(bin_start);
    const double b = a + 1.0;

    // --- speech ---
    const double t_i = overlap_with(ctx.speech_i, a, b);
    const double t_j = overlap_with(ctx.speech_j, a, b);
    const double both = pairwise_overlap_in(ctx.speech_i, ctx.speech_j, a, b);
    out.values[F_SpeakTimeI] = t_i;
    out.values[F_SpeakTimeJ] = t_j;
    out.values[F_SpeakTimeTotal] = t_i + t_j;
    out.values[F_OverlapRate] = both;
    out.values[F_SilenceFrac] = std::max(0.0, 1.0 - (t_i + t_j - both));
    out.values[F_DominanceRatio] = (t_i + t_j) > 0.0 ? std::abs(t_i - t_j) / (t_i + t_j) : 0.0;

    int turn_count = 0;
    double turn_len_sum = 0.0;
    int turn_len_n = 0;
    for (const auto* stream : {&ctx.speech_i, &ctx.speech_j}) {
        for (const auto& seg : *stream) {
            if (seg.start >= b) break;
            if (seg.start >= a) ++turn_count;
            if (seg.end > a && seg.start < b) {
                turn_len_sum += seg.end - seg.start;
                ++turn_len_n;
            }
        }
    }
    out.values[F_TurnCount] = double(turn_count);
    out.values[F_MeanTurnLen] = turn_len_n > 0 ? turn_len_sum / double(turn_len_n) : 0.0;

    // four-state speech entropy sampled at 0.1 s within the bin
    {
        int counts[4] = {0, 0, 0, 0};
        const int samples = int(std::lround(1.0 / kStateDt));
        for (int k = 0; k < samples; ++k) {
            double t = a + (double(k) + 0.5) * kStateDt;
            bool i_on = covered_at(ctx.speech_i, t);
            bool j_on = covered_at(ctx.speech_j, t);
            ++counts[(i_on ? 1 : 0) + (j_on ? 2 : 0)];
        }
        double h = 0.0;
        for (int c : counts) {
            if (c == 0) continue;
            double p = double(c) / double(samples);
            h -= p * std::log2(p);
        }
        out.values[F_EntropySpeaking] = h;
    }

    // --- shared attention ---
    {
        int cnt = 0;
        double dur = 0.0, longest = 0.0;
        std::vector<int> objects;
        std::vector<double> starts_in_bin;
        for (const auto& ev : ctx.events) {
            if (ev.start >= b) break;
            double clip = std::min(ev.end, b) - std::max(ev.start, a);
            if (clip <= 0.0) continue;
            ++cnt;
            dur += clip;
            longest = std::max(longest, clip);
            objects.push_back(ev.object);
            if (ev.start >= a) starts_in_bin.push_back(ev.start);
        }
        std::sort(objects.begin(), objects.end());
        objects.erase(std::unique(objects.begin(), objects.end()), objects.end());
        out.values[F_SharedAttCnt] = double(cnt);
        out.values[F_SharedAttDur] = dur;
        out.values[F_LongestJointFixation] = longest;
        out.values[F_MaterialDiversity] = double(objects.size());
        double mifi = 0.0;
        if (starts_in_bin.size() >= 2) {
            for (size_t k = 1; k < starts_in_bin.size(); ++k) mifi += starts_in_bin[k] - starts_in_bin[k - 1];
            mifi /= double(starts_in_bin.size() - 1);
        }
        out.values[F_InterFixationMean] = mifi;
    }

    // --- proximity ---
    {
        const double dt = s.grid_dt;
        const long k0 = std::lround(std::ceil(a / dt - 1e-9));
        std::vector<double> dists;
        std::vector<double> derivs;
        double rel_speed_sum = 0.0;
        int rel_speed_n = 0;
        int close_cnt = 0;
        for (long k = std::max(0l, k0); k < long(s.grid.size()); ++k) {
            if (s.grid[size_t(k)] >= b - 1e-9) break;
            bool valid = s.present[size_t(d.i)][size_t(k)] && s.present[size_t(d.j)][size_t(k)];
            if (!valid) continue;
            double dist = (s.position[size_t(d.i)][size_t(k)] - s.position[size_t(d.j)][size_t(k)]).norm();
            dists.push_back(dist);
            if (dist <= th.max_proximity_dist) ++close_cnt;
            if (k + 1 < long(s.grid.size()) && s.present[size_t(d.i)][size_t(k + 1)] &&
                s.present[size_t(d.j)][size_t(k + 1)]) {
                double dist2 =
                    (s.position[size_t(d.i)][size_t(k + 1)] - s.position[size_t(d.j)][size_t(k + 1)]).norm();
                derivs.push_back((dist2 - dist) / dt);
                Eigen::Vector3d vi = s.position[size_t(d.i)][size_t(k + 1)] - s.position[size_t(d.i)][size_t(k)];
                Eigen::Vector3d vj = s.position[size_t(d.j)][size_t(k + 1)] - s.position[size_t(d.j)][size_t(k)];
                rel_speed_sum += (vi - vj).norm() / dt;
                ++rel_speed_n;
            }
        }
        if (dists.empty()) {
            for (int f : {F_DistMean, F_DistMin, F_DistStd, F_ProxBinary}) {
                out.values[size_t(f)] = kNaN;
                out.present[size_t(f)] = 0;
            }
        } else {
            double mean = 0.0, mn = dists[0];
            for (double v : dists) {
                mean += v;
                mn = std::min(mn, v);
            }
            mean /= double(dists.size());
            double var = 0.0;
            for (double v : dists) var += (v - mean) * (v - mean);
            var /= double(dists.size());
            out.values[F_DistMean] = mean;
            out.values[F_DistMin] = mn;
            out.values[F_DistStd] = std::sqrt(var);
            out.values[F_ProxBinary] = double(close_cnt) / double(dists.size());
        }
        if (derivs.empty()) {
            for (int f : {F_ApproachRate, F_ApproachFlips, F_RelSpeedMean}) {
                out.values[size_t(f)] = kNaN;
                out.present[size_t(f)] = 0;
            }
        } else {
            double mean = 0.0;
            int flips = 0;
            for (size_t k = 0; k < derivs.size(); ++k) {
                mean += derivs[k];
                if (k > 0 && derivs[k] * derivs[k - 1] < 0.0) ++flips;
            }
            out.values[F_ApproachRate] = mean / double(derivs.size());
            out.values[F_ApproachFlips] = double(flips);
            out.values[F_RelSpeedMean] = rel_speed_sum / double(rel_speed_n);
        }
    }
    return out;
}

}  // namespace

BinFeatures extract_candidates(const sync::AlignedSession& s, DyadId dyad, int bin_start,
                               const sociogram::Thresholds& th) {
    if (bin_start < 0 || double(bin_start) >= s.span)
        throw ContractViolation("extract_candidates: bin outside session span");
    DyadContext ctx = build_context(s, dyad, th);
    return extract_bin(s, dyad, ctx, bin_start, th);
}

DyadFeatureSeries extract_series(const sync::AlignedSession& s, DyadId dyad, const sociogram::Thresholds& th) {
    DyadFeatureSeries out;
    out.dyad = dyad;
    out.bins = int(std::floor(s.span + 1e-9));
    out.raw.resize(out.bins, kFeatureCount);
    DyadContext ctx = build_context(s, dyad, th);
    for (int bin = 0; bin < out.bins; ++bin) {
        BinFeatures f = extract_bin(s, dyad, ctx, bin, th);
        for (int c = 0; c < kFeatureCount; ++c) out.raw(bin, c) = f.present[size_t(c)] ? f.values[size_t(c)] : kNaN;
    }
    return out;
}

void znormalize(DyadFeatureSeries& series) {
    series.z = Eigen::MatrixXd::Zero(series.bins, kFeatureCount);
    for (int c = 0; c < kFeatureCount; ++c) {
        double sum = 0.0;
        long n = 0;
        for (int r = 0; r < series.bins; ++r) {
            double v = series.raw(r, c);
            if (std::isnan(v)) continue;
            sum += v;
            ++n;
        }
        if (n == 0) continue;  // entirely absent: stays 0
        double mean = sum / double(n);
        double var = 0.0;
        for (int r = 0; r < series.bins; ++r) {
            double v = series.raw(r, c);
            if (std::isnan(v)) continue;
            var += (v - mean) * (v - mean);
        }
        var /= double(n);  // population SD
        if (var < 1e-24) continue;  // zero-variance: all zeros
        double sd = std::sqrt(var);
        for (int r = 0; r < series.bins; ++r) {
            double v = series.raw(r, c);
            series.z(r, c) = std::isnan(v) ? 0.0 : (v - mean) / sd;
        }
    }
}

PruneResult prune_features(const std::vector<DyadFeatureSeries>& series, int k_hint, uint64_t seed, int fast_cap) {
    if (series.empty()) throw ContractViolation("prune_features: no series");
    const auto& names = feature_names();
    PruneResult res;

    long total_bins = 0;
    for (const auto& s : series) total_bins += s.bins;

    // step 1: pre-normalization variance
    std::vector<bool> alive(kFeatureCount, true);
    for (int c = 0; c < kFeatureCount; ++c) {
        double sum = 0.0, sum2 = 0.0;
        long n = 0;
        for (const auto& s : series)
            for (int r = 0; r < s.bins; ++r) {
                double v = s.raw(r, c);
                if (std::isnan(v)) continue;
                sum += v;
                sum2 += v * v;
                ++n;
            }
        double var = n > 0 ? std::max(0.0, sum2 / double(n) - (sum / double(n)) * (sum / double(n))) : 0.0;
        if (var < 1e-8) {
            alive[size_t(c)] = false;
            res.log.push_back("dropped " + names[size_t(c)] + ": variance " + fmt_double(var) + " < 1e-8");
        }
    }

    // step 2: pairwise correlation on pooled z-series; the later feature of
    // a redundant pair goes
    Eigen::MatrixXd pooled(total_bins, kFeatureCount);
    {
        long row = 0;
        for (const auto& s : series) {
            if (s.z.rows() != s.bins) throw ContractViolation("prune_features: znormalize must run first");
            pooled.block(row, 0, s.bins, kFeatureCount) = s.z;
            row += s.bins;
        }
    }
    for (int b = 0; b < kFeatureCount; ++b) {
        if (!alive[size_t(b)]) continue;
        for (int a = 0; a < b; ++a) {
            if (!alive[size_t(a)]) continue;
            Eigen::VectorXd x = pooled.col(a), y = pooled.col(b);
            double mx = x.mean(), my = y.mean();
            double sxy = ((x.array() - mx) * (y.array() - my)).sum();
            double sxx = (x.array() - mx).square().sum();
            double syy = (y.array() - my).square().sum();
            if (sxx < 1e-24 || syy < 1e-24) continue;
            double r = sxy / std::sqrt(sxx * syy);
            if (std::abs(r) >= 0.95) {
                alive[size_t(b)] = false;
                res.log.push_back("dropped " + names[size_t(b)] + ": |r|=" + fmt_double(std::abs(r)) +
                                  " with " + names[size_t(a)]);
                break;
            }
        }
    }

    std::vector<int> survivors;
    for (int c = 0; c < kFeatureCount; ++c)
        if (alive[size_t(c)]) survivors.push_back(c);

    if (int(survivors.size()) < kCoreFeatureCount) {
        res.log.push_back("warning: only " + std::to_string(survivors.size()) +
                          " features survive variance/correlation pruning; keeping all of them");
        res.kept = survivors;
        for (int c : res.kept) res.kept_names.push_back(names[size_t(c)]);
        return res;
    }

    // step 3: silhouette importance on a k-means clustering of per-bin
    // vectors (fixed seed); drop features whose ablation does not cost more
    // than 1e-3 silhouette, never going below the 7-feature floor
    std::vector<int> rows = deepcluster::subsample_indices(int(total_bins), fast_cap, seed);
    Eigen::MatrixXd sub(long(rows.size()), long(survivors.size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < survivors.size(); ++c) sub(long(r), long(c)) = pooled(rows[r], survivors[c]);

    const int k = std::max(2, k_hint);
    auto clustered_silhouette = [&](const Eigen::MatrixXd& pts) {
        auto km = deepcluster::kmeans(pts, std::min<int>(k, int(pts.rows())), 10, seed);
        try {
            return deepcluster::silhouette(pts, km.labels);
        } catch (const ContractViolation&) {
            return 0.0;  // degenerate clustering (all points coincide)
        }
    };
    double base = clustered_silhouette(sub);

    std::vector<std::pair<double, int>> drops;  // (silhouette drop, survivor idx)
    for (size_t f = 0; f < survivors.size(); ++f) {
        Eigen::MatrixXd ablated(sub.rows(), sub.cols() - 1);
        long col = 0;
        for (size_t c = 0; c < survivors.size(); ++c) {
            if (c == f) continue;
            ablated.col(col++) = sub.col(long(c));
        }
        double drop = base - clustered_silhouette(ablated);
        drops.push_back({drop, int(f)});
    }
    std::stable_sort(drops.begin(), drops.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<bool> keep(survivors.size(), true);
    int remaining = int(survivors.size());
    for (const auto& [drop, f] : drops) {
        if (remaining <= kCoreFeatureCount) break;
        if (drop > 1e-3) break;
        keep[size_t(f)] = false;
        --remaining;
        res.log.push_back("dropped " + names[size_t(survivors[size_t(f)])] + ": silhouette drop " +
                          fmt_double(drop) + " <= 1e-3");
    }
    for (size_t f = 0; f < survivors.size(); ++f)
        if (keep[f]) res.kept.push_back(survivors[f]);
    for (int c : res.kept) res.kept_names.push_back(names[size_t(c)]);
    return res;
}

std::vector<FeatureSegment> build_segments(const std::vector<DyadFeatureSeries>& series,
                                           const std::vector<sync::Window>& windows, const std::vector<int>& kept) {
    if (kept.empty()) throw ContractViolation("build_segments: empty retained feature set");
    std::vector<FeatureSegment> out;
    for (const auto& s : series) {
        if (s.z.rows() != s.bins) throw ContractViolation("build_segments: znormalize must run first");
        for (const auto& w : windows) {
            const int r0 = int(std::lround(w.t0));
            const int rows = int(std::lround(w.t1 - w.t0));
            if (r0 + rows > s.bins) continue;  // window past series end
            FeatureSegment seg;
            seg.dyad = s.dyad;
            seg.window = w;
            seg.matrix.resize(rows, long(kept.size()));
            for (int r = 0; r < rows; ++r)
                for (size_t c = 0; c < kept.size(); ++c) seg.matrix(r, long(c)) = s.z(r0 + r, kept[c]);
            out.push_back(std::move(seg));
        }
    }
    return out;
}

}  // namespace gist::dyadfeat

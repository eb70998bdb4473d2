#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "common.hpp"
#include "json.hpp"

namespace gist::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

deepcluster::TrainConfig Config::train_config() const {
    deepcluster::TrainConfig tc;
    tc.lambda = lambda;
    tc.lambda_sweep = lambda_sweep;
    tc.lr = lr;
    tc.epochs = epochs;
    tc.batch = batch;
    tc.seed = seed;
    tc.k = k > 0 ? k : 4;
    tc.kmeans_restarts = kmeans_restarts;
    tc.fast_cap = fast_cap;
    tc.fast_eval = fast_eval;
    return tc;
}

Config Config::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(1, std::string("config: ") + e.what());
    }
    Config c;
    if (j.contains("sessions")) c.sessions = j["sessions"].get<std::vector<std::string>>();
    if (j.contains("truths")) c.truths = j["truths"].get<std::vector<std::string>>();
    c.out_dir = j.value("out", c.out_dir);
    c.window_len = j.value("window", c.window_len);
    c.stride = j.value("stride", c.stride);
    c.thresholds.min_speech = j.value("min_speech", c.thresholds.min_speech);
    c.thresholds.min_gaze_overlap = j.value("min_gaze", c.thresholds.min_gaze_overlap);
    c.thresholds.max_proximity_dist = j.value("max_prox", c.thresholds.max_proximity_dist);
    c.grid_dt = j.value("grid_dt", c.grid_dt);
    if (j.contains("k")) {
        if (j["k"].is_string() && j["k"] == "auto")
            c.k = 0;
        else
            c.k = j["k"].get<int>();
    }
    if (j.contains("lambda")) {
        if (j["lambda"].is_string() && j["lambda"] == "sweep")
            c.lambda_sweep = true;
        else
            c.lambda = j["lambda"].get<double>();
    }
    c.seed = j.value("seed", c.seed);
    c.fast_eval = j.value("fast_eval", c.fast_eval);
    c.fast_cap = j.value("fast_eval_cap", c.fast_cap);
    if (j.contains("tier_mode")) c.tier_mode = netmetrics::tier_mode_from_string(j["tier_mode"].get<std::string>());
    c.per_window_alpha = j.value("per_window_alpha", c.per_window_alpha);
    if (j.contains("encoder")) {
        const auto& e = j["encoder"];
        c.encoder.kernel1 = e.value("kernel1", c.encoder.kernel1);
        c.encoder.filters1 = e.value("filters1", c.encoder.filters1);
        c.encoder.kernel2 = e.value("kernel2", c.encoder.kernel2);
        c.encoder.filters2 = e.value("filters2", c.encoder.filters2);
        c.encoder.pool = e.value("pool", c.encoder.pool);
        c.encoder.hidden = e.value("hidden", c.encoder.hidden);
        c.encoder.latent = e.value("latent", c.encoder.latent);
        c.encoder.dropout = e.value("dropout", c.encoder.dropout);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        c.lr = t.value("lr", c.lr);
        c.epochs = t.value("epochs", c.epochs);
        c.batch = t.value("batch", c.batch);
        c.kmeans_restarts = t.value("kmeans_restarts", c.kmeans_restarts);
    }
    c.select_k_min = j.value("select_k_min", c.select_k_min);
    c.select_k_max = j.value("select_k_max", c.select_k_max);
    c.threads = j.value("threads", c.threads);
    c.model_path = j.value("model", c.model_path);
    c.skip_train = j.value("skip_train", c.skip_train);
    return c;
}

std::string Config::to_canonical_json() const {
    json j;
    j["sessions"] = sessions;
    j["truths"] = truths;
    j["out"] = out_dir;
    j["window"] = window_len;
    j["stride"] = stride;
    j["min_speech"] = thresholds.min_speech;
    j["min_gaze"] = thresholds.min_gaze_overlap;
    j["max_prox"] = thresholds.max_proximity_dist;
    j["grid_dt"] = grid_dt;
    j["k"] = k;
    j["lambda"] = lambda;
    j["lambda_sweep"] = lambda_sweep;
    j["seed"] = seed;
    j["fast_eval"] = fast_eval;
    j["fast_eval_cap"] = fast_cap;
    j["tier_mode"] = tier_mode == netmetrics::TierMode::Percentile
                         ? "percentile"
                         : (tier_mode == netmetrics::TierMode::FixedBounded ? "fixed" : "zscore");
    j["per_window_alpha"] = per_window_alpha;
    j["encoder"] = {{"kernel1", encoder.kernel1}, {"filters1", encoder.filters1}, {"kernel2", encoder.kernel2},
                    {"filters2", encoder.filters2}, {"pool", encoder.pool},       {"hidden", encoder.hidden},
                    {"latent", encoder.latent},     {"dropout", encoder.dropout}};
    j["train"] = {{"lr", lr}, {"epochs", epochs}, {"batch", batch}, {"kmeans_restarts", kmeans_restarts}};
    j["select_k_min"] = select_k_min;
    j["select_k_max"] = select_k_max;
    j["model"] = model_path;
    j["skip_train"] = skip_train;
    return j.dump();
}

namespace {

struct SessionState {
    std::string name;
    std::string path;
    uint64_t digest = 0;
    sync::AlignedSession aligned;
    std::vector<sync::Window> windows;
    std::vector<sociogram::WindowGraphs> graphs;
    sociogram::FusionWeights fusion;
    std::vector<sociogram::FusedSociogram> fused;
    std::vector<sociogram::FusionWeights> window_fusion;  // per-window alpha mode
    std::vector<dyadfeat::DyadFeatureSeries> series;
    // truth per (dyad index, window index), -1 when unknown
    std::vector<std::vector<int>> truth;
};

struct MetricRow {
    int window = 0;
    std::string modality;
    std::string metric;
    int node = -1;  // -1 = graph level
    double value = 0.0;
    netmetrics::Tier tier = netmetrics::Tier::Medium;
};

struct SegmentRef {
    int session = 0;
    int dyad_index = 0;
    int window = 0;
};

std::string basename_of(const std::string& path) {
    fs::path p(path);
    std::string stem = p.stem().string();
    return stem.empty() ? std::string("session") : stem;
}

class Exporter {
  public:
    explicit Exporter(const std::string& out_dir) : root_(out_dir) {}

    void write(const std::string& rel, const std::string& content) {
        fs::path full = fs::path(root_) / rel;
        fs::create_directories(full.parent_path());
        write_text_file(full.string(), content);
        files_[rel] = fnv1a64(content);
    }

    const std::map<std::string, uint64_t>& files() const { return files_; }
    const std::string& root() const { return root_; }

  private:
    std::string root_;
    std::map<std::string, uint64_t> files_;
};

template <typename Fn>
auto stage_guard(const std::string& stage, const std::string& input_digest, Fn&& fn) {
    try {
        return fn();
    } catch (const GistError&) {
        throw;  // already descriptive
    } catch (const std::exception& e) {
        throw GistError("stage '" + stage + "' failed (input " + input_digest + "): " + e.what());
    }
}

json alpha_json(const sociogram::FusionWeights& fw) {
    return {{"alpha_conv", fw.alpha[0]}, {"alpha_att", fw.alpha[1]}, {"alpha_prox", fw.alpha[2]}};
}

}  // namespace

RunResult run(const Config& cfg, unsigned stages) {
    if (cfg.sessions.empty()) throw ConfigError("no session files given");
    if (!cfg.truths.empty() && cfg.truths.size() != cfg.sessions.size())
        throw ConfigError("truth file list must align with session list");
    cfg.encoder.validate(int(std::lround(cfg.window_len)));

    const bool need_graphs = stages & (kStageSociograms | kStageMetrics | kStageAnalyze);
    const bool need_features = stages & (kStageFeatures | kStageTrain | kStageCluster | kStageRules | kStageAnalyze);
    const bool need_model = stages & (kStageTrain | kStageCluster | kStageAnalyze);

    Exporter out(cfg.out_dir);
    RunResult result;
    result.out_dir = cfg.out_dir;
    json summary;

    // ---- load + align ----
    std::vector<SessionState> sessions(cfg.sessions.size());
    std::set<std::string> used_names;
    for (size_t i = 0; i < cfg.sessions.size(); ++i) {
        auto& st = sessions[i];
        st.path = cfg.sessions[i];
        st.digest = stage_guard("load", basename_of(st.path), [&] { return digest_file(st.path); });
        const std::string dg = hex64(st.digest);
        stage_guard("load", dg, [&] {
            model::SessionRecording rec = model::load_session(st.path);
            st.name = basename_of(st.path);
            while (used_names.count(st.name)) st.name += "_";
            used_names.insert(st.name);
            return 0;
        });
        stage_guard("align", dg, [&] {
            model::SessionRecording rec = model::load_session(st.path);
            st.aligned = sync::align(rec, cfg.grid_dt);
            st.windows = sync::make_windows(st.aligned.span, cfg.window_len, cfg.stride);
            for (const auto& w : st.aligned.warnings) result.warnings.push_back(st.name + ": " + w);
            return 0;
        });
        if (!cfg.truths.empty()) {
            stage_guard("truth", dg, [&] {
                auto rows = synth::parse_truth_csv(read_text_file(cfg.truths[i]));
                const auto dyads = dyadfeat::all_dyads(st.aligned.participant_count());
                st.truth.assign(dyads.size(), std::vector<int>(st.windows.size(), -1));
                for (const auto& r : rows) {
                    for (size_t d = 0; d < dyads.size(); ++d)
                        if (dyads[d].i == r[0] && dyads[d].j == r[1] && r[2] >= 0 &&
                            r[2] < int(st.windows.size()))
                            st.truth[d][size_t(r[2])] = r[3];
                }
                return 0;
            });
        }
    }

    // ---- sociograms + fusion ----
    if (need_graphs) {
        for (auto& st : sessions) {
            const std::string dg = hex64(st.digest);
            stage_guard("sociogram", dg, [&] {
                st.graphs = sociogram::build_all(st.aligned, st.windows, cfg.thresholds);
                st.fusion = sociogram::compute_fusion_weights(st.graphs);
                for (const auto& w : st.fusion.warnings) result.warnings.push_back(st.name + ": " + w);
                for (size_t wi = 0; wi < st.graphs.size(); ++wi) {
                    const auto& fw = cfg.per_window_alpha
                                         ? (st.window_fusion.push_back(sociogram::compute_fusion_weights(
                                                {st.graphs[wi]})),
                                            st.window_fusion.back())
                                         : st.fusion;
                    st.fused.push_back(sociogram::fuse(st.graphs[wi].conv, st.graphs[wi].att, st.graphs[wi].prox, fw));
                }
                return 0;
            });
        }
    }

    if (stages & kStageSociograms) {
        for (const auto& st : sessions) {
            std::string csv = "window_index,modality,src,dst,weight\n";
            json adjacency;
            adjacency["session"] = st.name;
            json windows_json = json::array();
            for (size_t wi = 0; wi < st.graphs.size(); ++wi) {
                const auto& wg = st.graphs[wi];
                const int n = int(wg.conv.weights.rows());
                auto emit = [&](const char* name, const Eigen::MatrixXd& w, bool directed) {
                    for (int a = 0; a < n; ++a)
                        for (int b = 0; b < n; ++b) {
                            if (a == b || !(w(a, b) > 0.0)) continue;
                            if (!directed && a > b) continue;  // undirected: one row per pair
                            csv += std::to_string(wi) + "," + name + "," + std::to_string(a) + "," +
                                   std::to_string(b) + "," + fmt_double(w(a, b)) + "\n";
                        }
                };
                emit("conversation", wg.conv.weights, true);
                emit("attention", wg.att.weights, false);
                emit("proximity", wg.prox.weights, false);
                emit("fused", st.fused[wi].weights, true);

                auto mat = [&](const Eigen::MatrixXd& m) {
                    json rows = json::array();
                    for (int a = 0; a < n; ++a) {
                        json row = json::array();
                        for (int b = 0; b < n; ++b) row.push_back(m(a, b));
                        rows.push_back(std::move(row));
                    }
                    return rows;
                };
                json w;
                w["index"] = wi;
                w["t0"] = st.windows[wi].t0;
                w["t1"] = st.windows[wi].t1;
                w["conversation"] = mat(wg.conv.weights);
                w["attention"] = mat(wg.att.weights);
                w["proximity"] = mat(wg.prox.weights);
                w["fused"] = mat(st.fused[wi].weights);
                windows_json.push_back(std::move(w));
            }
            adjacency["windows"] = std::move(windows_json);
            out.write("sociograms/" + st.name + "_edges.csv", csv);
            out.write("sociograms/" + st.name + "_adjacency.json", adjacency.dump(2) + "\n");
            json fusion = alpha_json(st.fusion);
            if (cfg.per_window_alpha) {
                json per_window = json::array();
                for (const auto& fw : st.window_fusion) per_window.push_back(alpha_json(fw));
                fusion["per_window"] = std::move(per_window);
            }
            out.write("sociograms/" + st.name + "_fusion.json", fusion.dump(2) + "\n");
        }
    }

    // ---- network metrics ----
    std::vector<std::vector<MetricRow>> metrics(sessions.size());
    if (stages & (kStageMetrics | kStageAnalyze)) {
        for (size_t si = 0; si < sessions.size(); ++si) {
            auto& st = sessions[si];
            stage_guard("metrics", hex64(st.digest), [&] {
                auto& rows = metrics[si];
                const int n = st.aligned.participant_count();
                for (size_t wi = 0; wi < st.graphs.size(); ++wi) {
                    const auto& wg = st.graphs[wi];
                    struct G {
                        const char* name;
                        const Eigen::MatrixXd* w;
                        bool directed;
                    };
                    const G gs[4] = {{"conversation", &wg.conv.weights, true},
                                     {"attention", &wg.att.weights, false},
                                     {"proximity", &wg.prox.weights, false},
                                     {"fused", &st.fused[wi].weights, true}};
                    for (const auto& g : gs) {
                        std::vector<std::string> warn;
                        Eigen::VectorXd ev = netmetrics::eigenvector_centrality(*g.w, g.directed, &warn);
                        for (int p = 0; p < n; ++p)
                            rows.push_back({int(wi), g.name, "eigenvector", p, ev[p], netmetrics::Tier::Medium});
                        rows.push_back(
                            {int(wi), g.name, "density", -1, netmetrics::density(*g.w, g.directed), {}});
                        if (g.directed)
                            rows.push_back({int(wi), g.name, "reciprocity", -1,
                                            netmetrics::reciprocity(*g.w, g.directed), {}});
                        else
                            rows.push_back({int(wi), g.name, "clustering", -1,
                                            netmetrics::avg_clustering(*g.w, g.directed), {}});
                    }
                }
                // session-relative tier classification per (modality, metric)
                std::map<std::pair<std::string, std::string>, std::vector<size_t>> groups;
                for (size_t r = 0; r < rows.size(); ++r) groups[{rows[r].modality, rows[r].metric}].push_back(r);
                for (const auto& [key, idx] : groups) {
                    std::vector<double> values;
                    values.reserve(idx.size());
                    for (size_t r : idx) values.push_back(rows[r].value);
                    auto tiers = netmetrics::classify_tier(values, cfg.tier_mode, n);
                    for (size_t t = 0; t < idx.size(); ++t) rows[idx[t]].tier = tiers[t];
                }
                return 0;
            });
        }
    }
    if (stages & kStageMetrics) {
        for (size_t si = 0; si < sessions.size(); ++si) {
            std::string csv = "window_index,modality,metric,node_or_graph,value,tier\n";
            for (const auto& r : metrics[si])
                csv += std::to_string(r.window) + "," + r.modality + "," + r.metric + "," +
                       (r.node < 0 ? std::string("graph") : "p" + std::to_string(r.node)) + "," +
                       fmt_double(r.value) + "," + netmetrics::tier_name(r.tier) + "\n";
            out.write("metrics/" + sessions[si].name + "_metrics.csv", csv);
        }
    }

    // ---- features ----
    dyadfeat::PruneResult pruned;
    std::vector<dyadfeat::FeatureSegment> segments;
    std::vector<SegmentRef> seg_refs;
    if (need_features) {
        for (auto& st : sessions) {
            stage_guard("features", hex64(st.digest), [&] {
                const auto dyads = dyadfeat::all_dyads(st.aligned.participant_count());
                for (const auto& d : dyads) {
                    auto series = dyadfeat::extract_series(st.aligned, d, cfg.thresholds);
                    dyadfeat::znormalize(series);
                    st.series.push_back(std::move(series));
                }
                return 0;
            });
        }
        stage_guard("prune", "all-sessions", [&] {
            std::vector<dyadfeat::DyadFeatureSeries> all;
            for (const auto& st : sessions)
                for (const auto& s : st.series) all.push_back(s);
            pruned = dyadfeat::prune_features(all, cfg.k > 0 ? cfg.k : 4, cfg.seed, cfg.fast_eval ? cfg.fast_cap : 0);
            for (const auto& line : pruned.log) result.warnings.push_back("prune: " + line);
            return 0;
        });
        for (size_t si = 0; si < sessions.size(); ++si) {
            auto& st = sessions[si];
            stage_guard("segments", hex64(st.digest), [&] {
                auto segs = dyadfeat::build_segments(st.series, st.windows, pruned.kept);
                const auto dyads = dyadfeat::all_dyads(st.aligned.participant_count());
                for (auto& sg : segs) {
                    sg.session_index = int(si);
                    int di = 0;
                    for (size_t d = 0; d < dyads.size(); ++d)
                        if (dyads[d] == sg.dyad) di = int(d);
                    seg_refs.push_back({int(si), di, sg.window.index});
                    segments.push_back(std::move(sg));
                }
                return 0;
            });
        }
    }

    if (stages & kStageFeatures) {
        for (const auto& st : sessions) {
            std::string csv = "dyad_i,dyad_j,bin_start,feature_name,raw_value,z_value\n";
            const auto& names = dyadfeat::feature_names();
            for (const auto& s : st.series)
                for (int b = 0; b < s.bins; ++b)
                    for (int f = 0; f < dyadfeat::kFeatureCount; ++f) {
                        double raw = s.raw(b, f);
                        csv += std::to_string(s.dyad.i) + "," + std::to_string(s.dyad.j) + "," +
                               std::to_string(b) + "," + names[size_t(f)] + "," +
                               (std::isnan(raw) ? "nan" : fmt_double(raw)) + "," + fmt_double(s.z(b, f)) + "\n";
                    }
            out.write("features/" + st.name + "_features.csv", csv);
        }
        json retained = json::array();
        for (const auto& n : pruned.kept_names) retained.push_back(n);
        out.write("features/retained_features.json", retained.dump(2) + "\n");
    }

    // ---- model: train / load ----
    deepcluster::ClusterModel model;
    bool have_model = false;
    std::vector<int> labels;
    if (need_model) {
        if (segments.empty()) throw ConfigError("no segments available for clustering");
        deepcluster::TrainConfig tc = cfg.train_config();
        if (cfg.skip_train || (!cfg.model_path.empty() && (stages & kStageCluster) && !(stages & kStageTrain))) {
            if (cfg.model_path.empty()) throw ConfigError("skip-train requires a model checkpoint path");
            stage_guard("cluster", "checkpoint", [&] {
                model = deepcluster::load_model(cfg.model_path);
                if (model.F != int(segments.front().matrix.cols()))
                    throw ContractViolation("checkpoint feature count " + std::to_string(model.F) +
                                            " does not match segments (" +
                                            std::to_string(segments.front().matrix.cols()) + ")");
                labels = deepcluster::assign_segments(model, segments);
                return 0;
            });
        } else {
            if (cfg.k == 0) {
                stage_guard("select_k", "segments", [&] {
                    auto sel = deepcluster::select_k(segments, cfg.encoder, tc, cfg.select_k_min, cfg.select_k_max,
                                                     3, cfg.threads);
                    tc.k = sel.chosen_k;
                    if (sel.low_confidence)
                        result.warnings.push_back("select_k: ARI stability gate failed; max-ARI fallback k=" +
                                                  std::to_string(sel.chosen_k));
                    json diag;
                    diag["chosen_k"] = sel.chosen_k;
                    diag["low_confidence"] = sel.low_confidence;
                    json per_k = json::array();
                    for (size_t i = 0; i < sel.per_k.size(); ++i)
                        per_k.push_back({{"k", sel.per_k[i].k},
                                         {"inertia_mean", sel.per_k[i].inertia_mean},
                                         {"ari_mean", sel.per_k[i].ari_mean},
                                         {"normalized_inertia", sel.normalized_inertia[i]}});
                    diag["per_k"] = std::move(per_k);
                    out.write("analysis/select_k.json", diag.dump(2) + "\n");
                    summary["select_k"] = sel.chosen_k;
                    return 0;
                });
            }
            if (cfg.lambda_sweep) {
                stage_guard("lambda_sweep", "segments", [&] {
                    auto sw = deepcluster::sweep_lambda(segments, cfg.encoder, tc);
                    tc.lambda = sw.chosen_lambda;
                    json sj;
                    sj["chosen_lambda"] = sw.chosen_lambda;
                    sj["baseline_recon"] = sw.baseline_recon;
                    json entries = json::array();
                    for (const auto& e : sw.entries)
                        entries.push_back({{"lambda", e.lambda},
                                           {"silhouette", e.silhouette},
                                           {"recon", e.recon},
                                           {"feasible", e.feasible}});
                    sj["entries"] = std::move(entries);
                    out.write("analysis/lambda_sweep.json", sj.dump(2) + "\n");
                    summary["lambda"] = sw.chosen_lambda;
                    return 0;
                });
            }
            stage_guard("train", "segments", [&] {
                model = deepcluster::train(segments, cfg.encoder, tc);
                model.feature_names = pruned.kept_names;
                labels = model.labels;
                return 0;
            });
        }
        have_model = true;
        summary["k"] = int(model.centroids.rows());
        summary["silhouette"] = model.quality.silhouette;
        summary["recon_error"] = model.quality.recon_error;
    }

    if ((stages & kStageTrain) && have_model)
        out.write("model/checkpoint.json", deepcluster::model_to_json(model) + "\n");

    if ((stages & (kStageTrain | kStageCluster)) && have_model) {
        Eigen::MatrixXd latents = deepcluster::encode_segments(model, segments);
        std::map<int, std::string> label_csv, latent_csv;
        for (size_t si = 0; si < sessions.size(); ++si) {
            label_csv[int(si)] = "dyad_i,dyad_j,window_index,cluster\n";
            std::string head = "dyad_i,dyad_j,window_index";
            for (int z = 0; z < int(latents.cols()); ++z) head += ",z" + std::to_string(z);
            latent_csv[int(si)] = head + "\n";
        }
        for (size_t g = 0; g < segments.size(); ++g) {
            const auto& ref = seg_refs[g];
            const auto& d = segments[g].dyad;
            label_csv[ref.session] += std::to_string(d.i) + "," + std::to_string(d.j) + "," +
                                      std::to_string(ref.window) + "," + std::to_string(labels[g]) + "\n";
            std::string row = std::to_string(d.i) + "," + std::to_string(d.j) + "," + std::to_string(ref.window);
            for (int z = 0; z < int(latents.cols()); ++z) row += "," + fmt_double(latents(long(g), z));
            latent_csv[ref.session] += row + "\n";
        }
        for (size_t si = 0; si < sessions.size(); ++si) {
            out.write("labels/" + sessions[si].name + "_labels.csv", label_csv[int(si)]);
            out.write("latents/" + sessions[si].name + "_latents.csv", latent_csv[int(si)]);
        }
    }

    // ---- rule classifier ----
    std::vector<int> rule_labels;
    std::vector<analysis::FiredRule> rule_fired;
    if (stages & (kStageRules | kStageAnalyze)) {
        stage_guard("rules", "segments", [&] {
            rule_labels.reserve(segments.size());
            for (size_t g = 0; g < segments.size(); ++g) {
                const auto& ref = seg_refs[g];
                const auto& st = sessions[size_t(ref.session)];
                const auto& series = st.series[size_t(ref.dyad_index)];
                const auto& w = segments[g].window;
                const int r0 = int(std::lround(w.t0));
                const int rows = int(std::lround(w.t1 - w.t0));
                double e = 0.0, dom = 0.0, div = 0.0;
                for (int r = 0; r < rows; ++r) {
                    e += series.z(r0 + r, dyadfeat::F_EntropySpeaking);
                    dom += series.z(r0 + r, dyadfeat::F_DominanceRatio);
                    div += series.z(r0 + r, dyadfeat::F_MaterialDiversity);
                }
                auto rl = analysis::rule_classify(e / rows, dom / rows, div / rows);
                rule_labels.push_back(rl.cluster);
                rule_fired.push_back(rl.fired);
            }
            return 0;
        });
    }
    if (stages & kStageRules) {
        std::map<int, std::string> csvs;
        for (size_t si = 0; si < sessions.size(); ++si)
            csvs[int(si)] = "dyad_i,dyad_j,window_index,cluster,fired_rule\n";
        for (size_t g = 0; g < segments.size(); ++g) {
            const auto& ref = seg_refs[g];
            const auto& d = segments[g].dyad;
            csvs[ref.session] += std::to_string(d.i) + "," + std::to_string(d.j) + "," +
                                 std::to_string(ref.window) + "," + std::to_string(rule_labels[g]) + "," +
                                 analysis::fired_rule_name(rule_fired[g]) + "\n";
        }
        for (size_t si = 0; si < sessions.size(); ++si)
            out.write("rules/" + sessions[si].name + "_rules.csv", csvs[int(si)]);
    }

    // ---- analysis: entropies, associations, ablation, reports ----
    if (stages & kStageAnalyze) {
        const int k = have_model ? int(model.centroids.rows()) : 4;

        stage_guard("analyze", "labels", [&] {
            // membership entropy over (group, pair, actor)
            std::vector<analysis::LabeledWindow> lws;
            for (size_t g = 0; g < segments.size(); ++g) {
                const auto& ref = seg_refs[g];
                const auto& d = segments[g].dyad;
                analysis::LabeledWindow lw;
                lw.cluster = have_model ? labels[g] : rule_labels[g];
                lw.group = ref.session;
                lw.pair = long(ref.session) * 10000 + d.i * 100 + d.j;
                lw.actor_a = ref.session * 100 + d.i;
                lw.actor_b = ref.session * 100 + d.j;
                lws.push_back(lw);
            }
            auto me = analysis::membership_entropy(lws, k);
            json mj = json::array();
            for (const auto& pc : me.clusters)
                mj.push_back({{"cluster", pc.cluster},
                              {"group_entropy_bits", pc.group_bits},
                              {"pair_entropy_bits", pc.pair_bits},
                              {"actor_entropy_bits", pc.actor_bits},
                              {"windows", pc.windows},
                              {"empty", pc.empty}});
            out.write("analysis/membership_entropy.json", mj.dump(2) + "\n");

            // cluster shares
            std::vector<long> counts(size_t(k), 0);
            for (const auto& lw : lws) ++counts[size_t(lw.cluster)];
            json shares = json::array();
            for (int c = 0; c < k; ++c)
                shares.push_back({{"cluster", c},
                                  {"count", counts[size_t(c)]},
                                  {"share", double(counts[size_t(c)]) / double(lws.size())}});
            out.write("analysis/cluster_shares.json", shares.dump(2) + "\n");
            return 0;
        });

        // cluster z-profiles over retained features
        if (have_model && !segments.empty()) {
            std::string csv = "cluster,feature,mean_z\n";
            const long F = segments.front().matrix.cols();
            std::vector<std::vector<double>> sums(size_t(k), std::vector<double>(size_t(F), 0.0));
            std::vector<long> counts(size_t(k), 0);
            for (size_t g = 0; g < segments.size(); ++g) {
                ++counts[size_t(labels[g])];
                for (long f = 0; f < F; ++f) sums[size_t(labels[g])][size_t(f)] += segments[g].matrix.col(f).mean();
            }
            for (int c = 0; c < k; ++c)
                for (long f = 0; f < F; ++f)
                    csv += std::to_string(c) + "," + pruned.kept_names[size_t(f)] + "," +
                           fmt_double(counts[size_t(c)] > 0 ? sums[size_t(c)][size_t(f)] / double(counts[size_t(c)])
                                                            : 0.0) +
                           "\n";
            out.write("analysis/cluster_profiles.csv", csv);
        }

        // associations between cluster labels and tiered window metrics
        stage_guard("associations", "labels", [&] {
            struct Probe {
                std::string modality, metric;
                bool dyad_mean;  // eigenvector: mean of the dyad's two node scores
            };
            const std::vector<Probe> probes = {
                {"conversation", "reciprocity", false}, {"conversation", "eigenvector", true},
                {"fused", "eigenvector", true},         {"proximity", "eigenvector", true},
                {"attention", "eigenvector", true},     {"conversation", "density", false},
                {"attention", "clustering", false},     {"proximity", "clustering", false},
            };
            std::string csv = "metric,chi2,df,p,cramers_v,n,warnings\n";
            json aj = json::array();
            for (const auto& probe : probes) {
                // metric value per (session, window[, dyad])
                std::vector<int> lab;
                std::vector<double> val;
                std::vector<int> val_session;
                for (size_t g = 0; g < segments.size(); ++g) {
                    const auto& ref = seg_refs[g];
                    const auto& rows = metrics[size_t(ref.session)];
                    double v = 0.0;
                    bool found = false;
                    if (probe.dyad_mean) {
                        double a = 0.0, b = 0.0;
                        bool fa = false, fb = false;
                        for (const auto& r : rows) {
                            if (r.window != ref.window || r.modality != probe.modality ||
                                r.metric != probe.metric)
                                continue;
                            if (r.node == segments[g].dyad.i) {
                                a = r.value;
                                fa = true;
                            }
                            if (r.node == segments[g].dyad.j) {
                                b = r.value;
                                fb = true;
                            }
                        }
                        found = fa && fb;
                        v = (a + b) / 2.0;
                    } else {
                        for (const auto& r : rows) {
                            if (r.window == ref.window && r.modality == probe.modality &&
                                r.metric == probe.metric && r.node < 0) {
                                v = r.value;
                                found = true;
                                break;
                            }
                        }
                    }
                    if (!found) continue;
                    lab.push_back(have_model ? labels[g] : rule_labels[g]);
                    val.push_back(v);
                    val_session.push_back(ref.session);
                }
                if (lab.empty()) continue;
                // session-relative tiers over the paired values
                std::vector<int> tiers(val.size(), 1);
                for (size_t si = 0; si < sessions.size(); ++si) {
                    std::vector<double> vv;
                    std::vector<size_t> idx;
                    for (size_t i = 0; i < val.size(); ++i)
                        if (val_session[i] == int(si)) {
                            vv.push_back(val[i]);
                            idx.push_back(i);
                        }
                    if (vv.empty()) continue;
                    auto tt = netmetrics::classify_tier(vv, cfg.tier_mode,
                                                        sessions[si].aligned.participant_count());
                    for (size_t i = 0; i < idx.size(); ++i) tiers[idx[i]] = int(tt[i]);
                }
                auto assoc = analysis::crosstab_association(lab, tiers, k, 3);
                std::string warn;
                for (const auto& w : assoc.warnings) warn += (warn.empty() ? "" : "; ") + w;
                const std::string name = probe.modality + "_" + probe.metric;
                csv += name + "," + fmt_double(assoc.chi2) + "," + std::to_string(assoc.df) + "," +
                       fmt_double(assoc.p) + "," + fmt_double(assoc.cramers_v) + "," + std::to_string(assoc.n) +
                       ",\"" + warn + "\"\n";
                aj.push_back({{"metric", name},
                              {"chi2", assoc.chi2},
                              {"df", assoc.df},
                              {"p", assoc.p},
                              {"cramers_v", assoc.cramers_v},
                              {"n", assoc.n}});
            }
            out.write("analysis/associations.csv", csv);
            out.write("analysis/associations.json", aj.dump(2) + "\n");
            return 0;
        });

        // leave-one-out modality ablation per session
        stage_guard("ablation", "graphs", [&] {
            json abl = json::object();
            for (const auto& st : sessions) {
                json per = json::array();
                for (auto m : {sociogram::Modality::Conversation, sociogram::Modality::Attention,
                               sociogram::Modality::Proximity}) {
                    auto r = analysis::ablate_modality(st.graphs, m, st.fusion);
                    json e;
                    e["dropped"] = sociogram::modality_name(m);
                    e["skipped"] = r.skipped;
                    if (r.skipped) {
                        e["warning"] = r.warning;
                        result.warnings.push_back(st.name + ": " + r.warning);
                    } else {
                        e["spearman_rho"] = r.rho;
                        e["alpha_after"] = {r.alpha_after[0], r.alpha_after[1], r.alpha_after[2]};
                    }
                    per.push_back(std::move(e));
                }
                abl[st.name] = std::move(per);
            }
            out.write("analysis/ablation.json", abl.dump(2) + "\n");
            return 0;
        });

        // classification report against planted truth, when provided
        if (!cfg.truths.empty()) {
            stage_guard("report", "truth", [&] {
                std::vector<int> truth_modes, pred_rules, pred_clusters;
                for (size_t g = 0; g < segments.size(); ++g) {
                    const auto& ref = seg_refs[g];
                    const auto& st = sessions[size_t(ref.session)];
                    if (st.truth.empty()) continue;
                    int t = st.truth[size_t(ref.dyad_index)][size_t(ref.window)];
                    if (t < 0) continue;
                    truth_modes.push_back(t);
                    pred_rules.push_back(rule_labels[g]);
                    if (have_model) pred_clusters.push_back(labels[g]);
                }
                json rj;
                auto report_json = [](const analysis::ClassReport& rep) {
                    json classes = json::array();
                    for (const auto& pc : rep.classes)
                        classes.push_back({{"class", pc.cls},
                                           {"precision", pc.precision},
                                           {"recall", pc.recall},
                                           {"f1", pc.f1},
                                           {"support", pc.support},
                                           {"absent_from_truth", pc.absent_from_truth}});
                    return json{{"classes", classes},
                                {"macro_precision", rep.macro_precision},
                                {"macro_recall", rep.macro_recall},
                                {"macro_f1", rep.macro_f1},
                                {"accuracy", rep.accuracy},
                                {"n", rep.n}};
                };
                if (!truth_modes.empty()) {
                    rj["rules_vs_truth"] = report_json(analysis::classification_report(pred_rules, truth_modes));
                    if (have_model) {
                        rj["clusters_vs_truth_ari"] = deepcluster::adjusted_rand_index(pred_clusters, truth_modes);
                        // majority mapping cluster -> mode, then a mapped report
                        std::map<int, std::map<int, long>> vote;
                        for (size_t i = 0; i < pred_clusters.size(); ++i)
                            ++vote[pred_clusters[i]][truth_modes[i]];
                        std::map<int, int> mapping;
                        for (const auto& [c, votes] : vote) {
                            int best_mode = 0;
                            long best = -1;
                            for (const auto& [m, cnt] : votes)
                                if (cnt > best) {
                                    best = cnt;
                                    best_mode = m;
                                }
                            mapping[c] = best_mode;
                        }
                        std::vector<int> mapped;
                        for (int c : pred_clusters) mapped.push_back(mapping[c]);
                        rj["cluster_to_mode"] = json::object();
                        for (const auto& [c, m] : mapping) rj["cluster_to_mode"][std::to_string(c)] = m;
                        rj["mapped_clusters_vs_truth"] =
                            report_json(analysis::classification_report(mapped, truth_modes));
                        // surrogate fidelity: rules vs (mapped) cluster labels
                        long agree = 0;
                        for (size_t i = 0; i < mapped.size(); ++i)
                            if (mapped[i] == pred_rules[i]) ++agree;
                        rj["rule_cluster_agreement"] = double(agree) / double(mapped.size());
                    }
                    summary["rules_accuracy"] = rj["rules_vs_truth"]["accuracy"];
                }
                out.write("analysis/classification_report.json", rj.dump(2) + "\n");
                return 0;
            });
        }
    }

    // ---- manifest ----
    summary["sessions"] = int(sessions.size());
    summary["segments"] = int(segments.size());
    summary["retained_features"] = pruned.kept_names;
    json manifest;
    manifest["format"] = "gist-run-manifest-v1";
    manifest["config"] = json::parse(cfg.to_canonical_json());
    manifest["config_hash"] = hex64(fnv1a64(cfg.to_canonical_json()));
    manifest["seed"] = cfg.seed;
    json inputs = json::object();
    for (const auto& st : sessions) inputs[st.name] = hex64(st.digest);
    manifest["inputs"] = std::move(inputs);
    json files = json::object();
    for (const auto& [rel, dg] : out.files()) files[rel] = hex64(dg);
    manifest["files"] = std::move(files);
    manifest["warnings"] = result.warnings;
    manifest["summary"] = summary;
    out.write("manifest.json", manifest.dump(2) + "\n");

    result.summary_json = summary.dump(2);
    return result;
}

}  // namespace gist::pipeline

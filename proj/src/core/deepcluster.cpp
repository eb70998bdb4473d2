#include "deepcluster.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "common.hpp"
#include "json.hpp"

namespace gist::deepcluster {

using nlohmann::json;

void TrainConfig::validate() const {
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must lie in [0,1]");
    if (lr <= 0.0) throw ConfigError("learning rate must be positive");
    if (epochs < 1) throw ConfigError("epoch count must be >= 1");
    if (batch < 1) throw ConfigError("batch size must be >= 1");
    if (k < 1) throw ConfigError("cluster count must be >= 1 (resolve k=auto via select_k)");
}

namespace {

std::vector<Eigen::MatrixXd> segment_matrices(const std::vector<dyadfeat::FeatureSegment>& segments) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(segments.size());
    for (const auto& s : segments) out.push_back(s.matrix);
    return out;
}

Eigen::MatrixXd encode_matrices(Autoencoder& net, const std::vector<Eigen::MatrixXd>& mats, int batch) {
    const int n = int(mats.size());
    Eigen::MatrixXd latents(n, net.config().latent);
    for (int at = 0; at < n; at += batch) {
        std::vector<int> idx;
        for (int i = at; i < std::min(n, at + batch); ++i) idx.push_back(i);
        Seq x = make_batch(mats, idx);
        Eigen::MatrixXd z = net.encode(x, false);
        for (size_t b = 0; b < idx.size(); ++b) latents.row(idx[b]) = z.row(long(b));
    }
    return latents;
}

double mean_recon_error(Autoencoder& net, const std::vector<Eigen::MatrixXd>& mats, int batch) {
    const int n = int(mats.size());
    double total = 0.0;
    long count = 0;
    for (int at = 0; at < n; at += batch) {
        std::vector<int> idx;
        for (int i = at; i < std::min(n, at + batch); ++i) idx.push_back(i);
        Seq x = make_batch(mats, idx);
        Eigen::MatrixXd latent;
        Seq recon;
        net.forward(x, false, latent, recon);
        for (size_t t = 0; t < x.size(); ++t) {
            total += (recon[t] - x[t]).squaredNorm();
            count += x[t].size();
        }
    }
    return count > 0 ? total / double(count) : 0.0;
}

}  // namespace

ClusterModel train(const std::vector<dyadfeat::FeatureSegment>& segments, const EncoderConfig& enc,
                   const TrainConfig& cfg) {
    cfg.validate();
    if (segments.empty()) throw ConfigError("train: no segments");
    if (int(segments.size()) < cfg.k)
        throw ConfigError("train: k=" + std::to_string(cfg.k) + " exceeds segment count " +
                          std::to_string(segments.size()));
    const int T = int(segments.front().matrix.rows());
    const int F = int(segments.front().matrix.cols());
    enc.validate(T);

    ClusterModel model;
    model.enc = enc;
    model.cfg = cfg;
    model.T = T;
    model.F = F;
    model.net = Autoencoder(enc, T, F, cfg.seed);

    const auto mats = segment_matrices(segments);
    const int n = int(mats.size());

    Eigen::MatrixXd latents = encode_matrices(model.net, mats, cfg.batch);
    KMeansResult km = kmeans(latents, cfg.k, cfg.kmeans_restarts, cfg.seed);
    std::vector<int> assignments = km.labels;
    Eigen::MatrixXd centroids = km.centroids;

    Rng order_rng(mix_seed(cfg.seed, 0x6f72646572ull));
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[size_t(i)] = i;

    int adam_t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // deterministic shuffle per epoch
        for (int i = n - 1; i > 0; --i)
            std::swap(order[size_t(i)], order[size_t(order_rng.next() % uint64_t(i + 1))]);

        double epoch_loss = 0.0;
        int batches = 0;
        for (int at = 0; at < n; at += cfg.batch) {
            std::vector<int> idx(order.begin() + at, order.begin() + std::min(n, at + cfg.batch));
            Seq x = make_batch(mats, idx);
            std::vector<int> batch_assign(idx.size());
            for (size_t b = 0; b < idx.size(); ++b) batch_assign[b] = assignments[size_t(idx[b])];

            model.net.zero_grads();
            double loss = composite_loss(model.net, x, centroids, batch_assign, cfg.lambda, true, true);
            if (!std::isfinite(loss)) throw DivergenceError(epoch, "composite loss diverged");
            model.net.adam_step(cfg.lr, ++adam_t);
            epoch_loss += loss;
            ++batches;
        }
        model.loss_curve.push_back(epoch_loss / std::max(1, batches));

        // per-epoch centroid refresh on current latents
        latents = encode_matrices(model.net, mats, cfg.batch);
        KMeansResult refreshed = kmeans_refine(latents, centroids);
        centroids = refreshed.centroids;
        assignments = refreshed.labels;
    }

    // final clustering with the full restart budget
    latents = encode_matrices(model.net, mats, cfg.batch);
    KMeansResult final_km = kmeans(latents, cfg.k, cfg.kmeans_restarts, cfg.seed);
    model.centroids = final_km.centroids;
    model.labels = final_km.labels;
    model.latents = latents;
    model.quality.inertia = final_km.inertia;
    model.quality.recon_error = mean_recon_error(model.net, mats, cfg.batch);
    model.quality.final_loss = model.loss_curve.empty() ? 0.0 : model.loss_curve.back();
    if (cfg.k >= 2) {
        model.quality.silhouette =
            silhouette(latents, model.labels, cfg.fast_eval ? cfg.fast_cap : 0, cfg.seed);
    }
    return model;
}

Eigen::MatrixXd encode_segments(ClusterModel& model, const std::vector<dyadfeat::FeatureSegment>& segments) {
    return encode_matrices(model.net, segment_matrices(segments), model.cfg.batch);
}

std::vector<int> assign_segments(ClusterModel& model, const std::vector<dyadfeat::FeatureSegment>& segments) {
    Eigen::MatrixXd latents = encode_segments(model, segments);
    std::vector<int> labels(static_cast<size_t>(latents.rows()));
    for (long i = 0; i < latents.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (long c = 0; c < model.centroids.rows(); ++c) {
            double d = (latents.row(i) - model.centroids.row(c)).squaredNorm();
            if (d < best) {
                best = d;
                arg = int(c);
            }
        }
        labels[size_t(i)] = arg;
    }
    return labels;
}

SelectKResult select_k(const std::vector<dyadfeat::FeatureSegment>& segments, const EncoderConfig& enc,
                       const TrainConfig& cfg, int k_min, int k_max, int seeds, int threads) {
    if (k_min < 1 || k_max < k_min) throw ConfigError("select_k: invalid k range");
    if (seeds < 2) throw ConfigError("select_k: needs at least 2 seeds for stability");
    k_max = std::min<int>(k_max, int(segments.size()));
    if (k_max < k_min) throw ConfigError("select_k: fewer segments than k_min");

    struct Job {
        int k, seed_index;
        double inertia = 0.0;
        std::vector<int> labels;
    };
    std::vector<Job> jobs;
    for (int k = k_min; k <= k_max; ++k)
        for (int s = 0; s < seeds; ++s) jobs.push_back({k, s});

    const int hw = threads > 0 ? threads : int(std::max(1u, std::thread::hardware_concurrency()));
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= jobs.size()) break;
            Job& job = jobs[i];
            TrainConfig jc = cfg;
            jc.k = job.k;
            jc.seed = mix_seed(cfg.seed, uint64_t(job.k), uint64_t(job.seed_index));
            ClusterModel m = train(segments, enc, jc);
            job.inertia = m.quality.inertia;
            job.labels = std::move(m.labels);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min<int>(hw, int(jobs.size())); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    SelectKResult res;
    const int nk = k_max - k_min + 1;
    res.per_k.resize(size_t(nk));
    // fast-mode subsample for the pairwise ARI comparisons
    std::vector<int> ari_idx =
        subsample_indices(int(segments.size()), cfg.fast_eval ? cfg.fast_cap : 0, cfg.seed);
    for (int ki = 0; ki < nk; ++ki) {
        const int k = k_min + ki;
        auto& d = res.per_k[size_t(ki)];
        d.k = k;
        std::vector<const Job*> mine;
        for (const auto& j : jobs)
            if (j.k == k) mine.push_back(&j);
        for (const auto* j : mine) d.inertia_mean += j->inertia;
        d.inertia_mean /= double(mine.size());
        double ari_sum = 0.0;
        int pairs = 0;
        for (size_t a = 0; a < mine.size(); ++a)
            for (size_t b = a + 1; b < mine.size(); ++b) {
                std::vector<int> la, lb;
                la.reserve(ari_idx.size());
                lb.reserve(ari_idx.size());
                for (int i : ari_idx) {
                    la.push_back(mine[a]->labels[size_t(i)]);
                    lb.push_back(mine[b]->labels[size_t(i)]);
                }
                ari_sum += adjusted_rand_index(la, lb);
                ++pairs;
            }
        d.ari_mean = pairs > 0 ? ari_sum / double(pairs) : 1.0;
    }

    // min-max normalized inertia curve and its second difference
    double lo = res.per_k.front().inertia_mean, hi = lo;
    for (const auto& d : res.per_k) {
        lo = std::min(lo, d.inertia_mean);
        hi = std::max(hi, d.inertia_mean);
    }
    res.normalized_inertia.resize(size_t(nk));
    for (int i = 0; i < nk; ++i)
        res.normalized_inertia[size_t(i)] =
            hi - lo > 1e-15 ? (res.per_k[size_t(i)].inertia_mean - lo) / (hi - lo) : 0.0;
    res.second_difference.assign(size_t(nk), std::numeric_limits<double>::quiet_NaN());
    for (int i = 1; i + 1 < nk; ++i)
        res.second_difference[size_t(i)] = res.normalized_inertia[size_t(i - 1)] -
                                           2.0 * res.normalized_inertia[size_t(i)] +
                                           res.normalized_inertia[size_t(i + 1)];

    // largest k at the elbow whose cross-seed ARI clears the gate
    int best = -1;
    for (int i = 1; i + 1 < nk; ++i) {
        if (res.per_k[size_t(i)].ari_mean < 0.8) continue;
        if (best < 0 || res.second_difference[size_t(i)] >= res.second_difference[size_t(best)] - 1e-12) {
            if (best < 0 || res.second_difference[size_t(i)] > res.second_difference[size_t(best)] + 1e-12 ||
                res.per_k[size_t(i)].k > res.per_k[size_t(best)].k)
                best = i;
        }
    }
    if (best >= 0) {
        res.chosen_k = res.per_k[size_t(best)].k;
        res.low_confidence = false;
    } else {
        int arg = 0;
        for (int i = 1; i < nk; ++i)
            if (res.per_k[size_t(i)].ari_mean > res.per_k[size_t(arg)].ari_mean) arg = i;
        res.chosen_k = res.per_k[size_t(arg)].k;
        res.low_confidence = true;
    }
    return res;
}

LambdaSweepResult sweep_lambda(const std::vector<dyadfeat::FeatureSegment>& segments, const EncoderConfig& enc,
                               const TrainConfig& cfg) {
    LambdaSweepResult res;
    TrainConfig base = cfg;
    base.lambda = 0.0;
    base.lambda_sweep = false;
    ClusterModel m0 = train(segments, enc, base);
    res.baseline_recon = m0.quality.recon_error;

    double best_sil = -2.0;
    for (double lam : {0.3, 0.5, 0.7}) {
        TrainConfig tc = cfg;
        tc.lambda = lam;
        tc.lambda_sweep = false;
        ClusterModel m = train(segments, enc, tc);
        bool feasible = m.quality.recon_error <= 1.5 * res.baseline_recon;
        res.entries.push_back({lam, m.quality.silhouette, m.quality.recon_error, feasible});
        if (feasible && m.quality.silhouette > best_sil) {
            best_sil = m.quality.silhouette;
            res.chosen_lambda = lam;
        }
    }
    if (best_sil <= -2.0) {
        // nothing met the fidelity bound; fall back to the lowest-recon sweep point
        double best_recon = std::numeric_limits<double>::infinity();
        for (const auto& e : res.entries)
            if (e.recon < best_recon) {
                best_recon = e.recon;
                res.chosen_lambda = e.lambda;
            }
    }
    return res;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(long(j.size()), long(j[0].size()));
    for (size_t i = 0; i < j.size(); ++i)
        for (size_t c = 0; c < j[i].size(); ++c) m(long(i), long(c)) = j[i][c].get<double>();
    return m;
}

}  // namespace

std::string model_to_json(const ClusterModel& model) {
    json j;
    j["format"] = "gist-cluster-model-v1";
    j["encoder"] = {{"kernel1", model.enc.kernel1}, {"filters1", model.enc.filters1},
                    {"kernel2", model.enc.kernel2}, {"filters2", model.enc.filters2},
                    {"pool", model.enc.pool},       {"hidden", model.enc.hidden},
                    {"latent", model.enc.latent},   {"dropout", model.enc.dropout}};
    j["train"] = {{"lambda", model.cfg.lambda}, {"lr", model.cfg.lr},   {"epochs", model.cfg.epochs},
                  {"batch", model.cfg.batch},   {"seed", model.cfg.seed}, {"k", model.cfg.k},
                  {"kmeans_restarts", model.cfg.kmeans_restarts}, {"fast_cap", model.cfg.fast_cap},
                  {"fast_eval", model.cfg.fast_eval}};
    j["T"] = model.T;
    j["F"] = model.F;
    j["feature_names"] = model.feature_names;
    j["centroids"] = matrix_to_json(model.centroids);
    j["quality"] = {{"silhouette", model.quality.silhouette},
                    {"inertia", model.quality.inertia},
                    {"recon_error", model.quality.recon_error},
                    {"final_loss", model.quality.final_loss},
                    {"cross_run_ari", model.quality.cross_run_ari},
                    {"low_confidence", model.quality.low_confidence}};
    j["loss_curve"] = model.loss_curve;
    json params = json::object();
    for (const ParamBlock* b : model.net.blocks()) {
        json blk;
        blk["rows"] = b->value.rows();
        blk["cols"] = b->value.cols();
        json data = json::array();
        for (long c = 0; c < b->value.cols(); ++c)
            for (long r = 0; r < b->value.rows(); ++r) data.push_back(b->value(r, c));
        blk["data"] = std::move(data);
        params[b->name] = std::move(blk);
    }
    j["params"] = std::move(params);
    return j.dump();
}

ClusterModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(1, std::string("model checkpoint: ") + e.what());
    }
    if (!j.contains("format") || j["format"] != "gist-cluster-model-v1")
        throw ParseError(1, "model checkpoint: unknown format");

    ClusterModel m;
    const auto& e = j["encoder"];
    m.enc.kernel1 = e["kernel1"].get<int>();
    m.enc.filters1 = e["filters1"].get<int>();
    m.enc.kernel2 = e["kernel2"].get<int>();
    m.enc.filters2 = e["filters2"].get<int>();
    m.enc.pool = e["pool"].get<int>();
    m.enc.hidden = e["hidden"].get<int>();
    m.enc.latent = e["latent"].get<int>();
    m.enc.dropout = e["dropout"].get<double>();
    const auto& t = j["train"];
    m.cfg.lambda = t["lambda"].get<double>();
    m.cfg.lr = t["lr"].get<double>();
    m.cfg.epochs = t["epochs"].get<int>();
    m.cfg.batch = t["batch"].get<int>();
    m.cfg.seed = t["seed"].get<uint64_t>();
    m.cfg.k = t["k"].get<int>();
    m.cfg.kmeans_restarts = t["kmeans_restarts"].get<int>();
    m.cfg.fast_cap = t["fast_cap"].get<int>();
    m.cfg.fast_eval = t["fast_eval"].get<bool>();
    m.T = j["T"].get<int>();
    m.F = j["F"].get<int>();
    if (j.contains("feature_names")) m.feature_names = j["feature_names"].get<std::vector<std::string>>();
    m.centroids = matrix_from_json(j["centroids"]);
    const auto& q = j["quality"];
    m.quality.silhouette = q["silhouette"].get<double>();
    m.quality.inertia = q["inertia"].get<double>();
    m.quality.recon_error = q["recon_error"].get<double>();
    m.quality.final_loss = q["final_loss"].get<double>();
    m.quality.cross_run_ari = q["cross_run_ari"].get<double>();
    m.quality.low_confidence = q["low_confidence"].get<bool>();
    m.loss_curve = j["loss_curve"].get<std::vector<double>>();

    m.net = Autoencoder(m.enc, m.T, m.F, m.cfg.seed);
    for (ParamBlock* b : m.net.blocks()) {
        if (!j["params"].contains(b->name)) throw ParseError(1, "model checkpoint: missing block " + b->name);
        const auto& blk = j["params"][b->name];
        long rows = blk["rows"].get<long>();
        long cols = blk["cols"].get<long>();
        if (rows != b->value.rows() || cols != b->value.cols())
            throw ParseError(1, "model checkpoint: shape mismatch for " + b->name);
        const auto& data = blk["data"];
        if (long(data.size()) != rows * cols) throw ParseError(1, "model checkpoint: data size mismatch");
        size_t at = 0;
        for (long c = 0; c < cols; ++c)
            for (long r = 0; r < rows; ++r) b->value(r, c) = data[at++].get<double>();
    }
    return m;
}

void save_model(const ClusterModel& model, const std::string& path) {
    write_text_file(path, model_to_json(model));
}

ClusterModel load_model(const std::string& path) { return model_from_json(read_text_file(path)); }

}  // namespace gist::deepcluster

#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "common.hpp"

namespace gist::analysis {

const char* fired_rule_name(FiredRule r) {
    switch (r) {
        case FiredRule::EntropyRule: return "entropy_rule";
        case FiredRule::DominanceRule: return "dominance_rule";
        case FiredRule::DiversityRule: return "diversity_rule";
        case FiredRule::Default: return "default";
    }
    return "?";
}

RuleLabel rule_classify(double entropy_z, double dominance_z, double diversity_z) {
    if (entropy_z > 1.2) return {1, FiredRule::EntropyRule};
    if (dominance_z < -0.7) return {3, FiredRule::DominanceRule};
    if (diversity_z < -0.3) return {2, FiredRule::DiversityRule};
    return {0, FiredRule::Default};
}

namespace {

double entropy_bits(const std::map<long, long>& counts, long total) {
    if (total <= 0) return 0.0;
    double h = 0.0;
    for (const auto& [key, c] : counts) {
        if (c <= 0) continue;
        double p = double(c) / double(total);
        h -= p * std::log2(p);
    }
    return h;
}

}  // namespace

MembershipEntropy membership_entropy(const std::vector<LabeledWindow>& windows, int k) {
    if (windows.empty()) throw ContractViolation("membership_entropy: no labeled windows");
    MembershipEntropy out;
    for (int c = 0; c < k; ++c) {
        std::map<long, long> by_group, by_pair, by_actor;
        long n = 0, actor_n = 0;
        for (const auto& w : windows) {
            if (w.cluster != c) continue;
            ++n;
            ++by_group[w.group];
            ++by_pair[w.pair];
            ++by_actor[w.actor_a];  // each window counts once per actor
            ++by_actor[w.actor_b];
            actor_n += 2;
        }
        MembershipEntropy::PerCluster pc;
        pc.cluster = c;
        pc.windows = n;
        pc.empty = n == 0;
        pc.group_bits = entropy_bits(by_group, n);
        pc.pair_bits = entropy_bits(by_pair, n);
        pc.actor_bits = entropy_bits(by_actor, actor_n);
        out.clusters.push_back(pc);
    }
    return out;
}

namespace {

// regularized incomplete gamma, series + continued fraction
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -double(i) * (double(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double chi2_sf(double chi2, double df) {
    if (df <= 0.0) return 1.0;
    if (chi2 <= 0.0) return 1.0;
    const double a = df / 2.0, x = chi2 / 2.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

Association crosstab_association(const std::vector<int>& cluster_labels, const std::vector<int>& tiers,
                                 int cluster_count, int tier_count) {
    if (cluster_labels.size() != tiers.size())
        throw ContractViolation("crosstab_association: label/tier length mismatch");
    if (cluster_labels.empty()) throw ContractViolation("crosstab_association: empty inputs");

    std::vector<std::vector<long>> table(size_t(cluster_count), std::vector<long>(size_t(tier_count), 0));
    for (size_t i = 0; i < cluster_labels.size(); ++i) {
        int r = cluster_labels[i], c = tiers[i];
        if (r < 0 || r >= cluster_count || c < 0 || c >= tier_count)
            throw ContractViolation("crosstab_association: label outside table bounds");
        ++table[size_t(r)][size_t(c)];
    }

    Association out;
    out.n = long(cluster_labels.size());

    // drop zero marginals with a df adjustment
    std::vector<int> rows, cols;
    for (int r = 0; r < cluster_count; ++r) {
        long sum = std::accumulate(table[size_t(r)].begin(), table[size_t(r)].end(), 0l);
        if (sum > 0)
            rows.push_back(r);
        else
            out.warnings.push_back("dropped empty cluster row " + std::to_string(r));
    }
    for (int c = 0; c < tier_count; ++c) {
        long sum = 0;
        for (int r = 0; r < cluster_count; ++r) sum += table[size_t(r)][size_t(c)];
        if (sum > 0)
            cols.push_back(c);
        else
            out.warnings.push_back("dropped empty tier column " + std::to_string(c));
    }
    if (rows.size() < 2 || cols.size() < 2) {
        out.warnings.push_back("association degenerate after dropping empty marginals");
        out.table.assign(rows.size(), std::vector<long>(cols.size(), 0));
        for (size_t r = 0; r < rows.size(); ++r)
            for (size_t c = 0; c < cols.size(); ++c) out.table[r][c] = table[size_t(rows[r])][size_t(cols[c])];
        return out;
    }

    out.table.assign(rows.size(), std::vector<long>(cols.size(), 0));
    std::vector<double> row_sum(rows.size(), 0.0), col_sum(cols.size(), 0.0);
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < cols.size(); ++c) {
            out.table[r][c] = table[size_t(rows[r])][size_t(cols[c])];
            row_sum[r] += double(out.table[r][c]);
            col_sum[c] += double(out.table[r][c]);
        }

    double chi2 = 0.0;
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < cols.size(); ++c) {
            double expected = row_sum[r] * col_sum[c] / double(out.n);
            double diff = double(out.table[r][c]) - expected;
            chi2 += diff * diff / expected;
        }
    out.chi2 = chi2;
    out.df = long(rows.size() - 1) * long(cols.size() - 1);
    out.p = chi2_sf(chi2, double(out.df));
    const long min_dim = long(std::min(rows.size(), cols.size()));
    out.cramers_v = std::sqrt(chi2 / (double(out.n) * double(min_dim - 1)));
    return out;
}

ClassReport classification_report(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size()) throw ContractViolation("classification_report: length mismatch");
    if (predicted.empty()) throw ContractViolation("classification_report: empty inputs");

    std::set<int> classes(truth.begin(), truth.end());
    classes.insert(predicted.begin(), predicted.end());

    ClassReport rep;
    rep.n = long(predicted.size());
    long correct = 0;
    for (size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++correct;
    rep.accuracy = double(correct) / double(rep.n);

    for (int cls : classes) {
        long tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < predicted.size(); ++i) {
            bool p = predicted[i] == cls, t = truth[i] == cls;
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
        }
        ClassReport::PerClass pc;
        pc.cls = cls;
        pc.support = tp + fn;
        pc.absent_from_truth = pc.support == 0;
        pc.precision = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 0.0;
        pc.recall = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 0.0;  // undefined -> 0, flagged
        pc.f1 = (pc.precision + pc.recall) > 0.0 ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall)
                                                 : 0.0;
        rep.classes.push_back(pc);
    }
    for (const auto& pc : rep.classes) {
        rep.macro_precision += pc.precision;
        rep.macro_recall += pc.recall;
        rep.macro_f1 += pc.f1;
    }
    const double k = double(rep.classes.size());
    rep.macro_precision /= k;
    rep.macro_recall /= k;
    rep.macro_f1 /= k;
    return rep;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        double avg = (double(i) + double(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ContractViolation("spearman_rho: length mismatch");
    if (a.size() < 2) throw ContractViolation("spearman_rho: needs at least 2 items");
    std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
    if (ra == rb) return 1.0;
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= double(ra.size());
    mb /= double(rb.size());
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa < 1e-15 || sbb < 1e-15) return 0.0;  // one ranking constant and they differ
    return sab / std::sqrt(saa * sbb);
}

AblationResult ablate_modality(const std::vector<sociogram::WindowGraphs>& graphs, sociogram::Modality dropped,
                               const sociogram::FusionWeights& full_weights) {
    using sociogram::Modality;
    AblationResult res;
    res.dropped = dropped;
    if (graphs.empty()) throw ContractViolation("ablate_modality: no windows");

    const int n = int(graphs.front().conv.weights.rows());
    const auto dyads = dyadfeat::all_dyads(n);
    if (dyads.size() < 2) {
        res.skipped = true;
        res.warning = "ablation skipped: rank correlation needs at least 2 dyads";
        return res;
    }

    // variance of per-dyad modality totals for the remaining channels
    const int dm = int(dropped);
    int varying_remaining = 0;
    for (int m = 0; m < 3; ++m) {
        if (m == dm) continue;
        std::vector<double> totals(dyads.size(), 0.0);
        for (const auto& wg : graphs) {
            const Eigen::MatrixXd& w = m == 0 ? wg.conv.weights : (m == 1 ? wg.att.weights : wg.prox.weights);
            for (size_t d = 0; d < dyads.size(); ++d)
                totals[d] += w(dyads[d].i, dyads[d].j) + (m == 0 ? w(dyads[d].j, dyads[d].i) : 0.0);
        }
        double mean = std::accumulate(totals.begin(), totals.end(), 0.0) / double(totals.size());
        double var = 0.0;
        for (double t : totals) var += (t - mean) * (t - mean);
        if (var / double(totals.size()) > 1e-24) ++varying_remaining;
    }
    if (varying_remaining < 2) {
        res.skipped = true;
        res.warning = "ablation skipped: fewer than 2 remaining modalities with variance";
        return res;
    }

    sociogram::FusionWeights after = full_weights;
    after.warnings.clear();
    after.alpha[size_t(dm)] = 0.0;
    double rest = after.alpha[0] + after.alpha[1] + after.alpha[2];
    if (rest <= 1e-15) {
        res.skipped = true;
        res.warning = "ablation skipped: dropped modality carried all fusion weight";
        return res;
    }
    for (auto& a : after.alpha) a /= rest;
    res.alpha_after = after.alpha;

    std::vector<double> full_strength(dyads.size(), 0.0), ablated_strength(dyads.size(), 0.0);
    for (const auto& wg : graphs) {
        auto fused_full = sociogram::fuse(wg.conv, wg.att, wg.prox, full_weights);
        auto fused_ablated = sociogram::fuse(wg.conv, wg.att, wg.prox, after);
        for (size_t d = 0; d < dyads.size(); ++d) {
            full_strength[d] += fused_full.weights(dyads[d].i, dyads[d].j) + fused_full.weights(dyads[d].j, dyads[d].i);
            ablated_strength[d] +=
                fused_ablated.weights(dyads[d].i, dyads[d].j) + fused_ablated.weights(dyads[d].j, dyads[d].i);
        }
    }
    res.rho = spearman_rho(full_strength, ablated_strength);
    return res;
}

}  // namespace gist::analysis

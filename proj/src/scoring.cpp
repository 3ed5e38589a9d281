#include "tailgen/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "tailgen/clustering.hpp"

namespace tailgen {

void ScoreConfig::validate() const {
    if (alpha_density < 0.0 || alpha_distance < 0.0) {
        throw InputError("score: mixing weights must be >= 0");
    }
    if (alpha_density + alpha_distance <= 0.0) {
        throw InputError("score: at least one mixing weight must be positive");
    }
    if (!(p >= 1.0)) throw InputError("score: p must be >= 1");
    if (!(epsilon_quantile > 0.0 && epsilon_quantile < 1.0)) {
        throw InputError("score: epsilon_quantile must be in (0, 1)");
    }
}

double anomaly_score(std::span<const double> x, const FlowModel& density, const Matrix& ref_data,
                     const ScoreConfig& cfg) {
    require_finite(x, "anomaly_score input");
    double score = cfg.alpha_density * (-density.log_density(x));
    if (cfg.alpha_distance != 0.0 && ref_data.rows > 0) {
        double best = std::numeric_limits<double>::infinity();
        for (long j = 0; j < ref_data.rows; ++j) {
            const double dist = p_norm_dist(x, ref_data.row(j), cfg.p);
            if (dist < best) best = dist;
        }
        score += cfg.alpha_distance * best;
    }
    return score;
}

bool support_membership(std::span<const double> x, const FlowModel& density,
                        const ScoreConfig& cfg) {
    if (!(cfg.epsilon > 0.0)) throw InputError("support_membership: epsilon must be > 0");
    return std::exp(density.log_density(x)) >= cfg.epsilon;
}

double epsilon_from_quantile(const FlowModel& density, const Matrix& data, double quantile) {
    if (data.rows < 1) throw InputError("epsilon_from_quantile: data is empty");
    if (!(quantile >= 0.0 && quantile <= 1.0)) {
        throw InputError("epsilon_from_quantile: quantile must be in [0, 1]");
    }
    std::vector<double> dens(data.rows);
    for (long i = 0; i < data.rows; ++i) dens[i] = std::exp(density.log_density(data.row(i)));
    std::sort(dens.begin(), dens.end());
    const double pos = quantile * static_cast<double>(data.rows - 1);
    const long lo = static_cast<long>(std::floor(pos));
    const long hi = std::min<long>(lo + 1, data.rows - 1);
    const double frac = pos - static_cast<double>(lo);
    return dens[lo] + frac * (dens[hi] - dens[lo]);
}

namespace {
void check_scores_labels(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InputError("metric: scores/labels length mismatch");
    if (scores.empty()) throw InputError("metric: empty input");
    for (double s : scores) {
        if (!std::isfinite(s)) throw InputError("metric: non-finite score");
    }
}
}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
    check_scores_labels(scores, labels);
    const long n = static_cast<long>(scores.size());
    long n_pos = 0;
    for (int l : labels) n_pos += (l != 0);
    const long n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw InputError("auroc: both classes must be present");
    }

    std::vector<long> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](long a, long b) { return scores[a] < scores[b]; });

    // Average ranks over tied groups, then the Mann-Whitney statistic.
    double rank_sum_pos = 0.0;
    long i = 0;
    while (i < n) {
        long j = i;
        while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
        for (long k = i; k <= j; ++k) {
            if (labels[idx[k]] != 0) rank_sum_pos += avg_rank;
        }
        i = j + 1;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
    check_scores_labels(scores, labels);
    const long n = static_cast<long>(scores.size());
    long n_pos = 0;
    for (int l : labels) n_pos += (l != 0);
    if (n_pos == 0) throw InputError("auprc: at least one positive label required");

    std::vector<long> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](long a, long b) { return scores[a] > scores[b]; });

    double sum = 0.0;
    long hits = 0;
    for (long r = 0; r < n; ++r) {
        if (labels[idx[r]] != 0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(n_pos);
}

namespace {
std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}
}  // namespace

std::string EvalReport::to_csv() const {
    std::string out = "dataset,L_tot,L_d,L_sc,L_pr,L_e,auroc,auprc\n";
    for (const auto& r : rows) {
        out += r.dataset + "," + fmt9(r.losses.tot) + "," + fmt9(r.losses.d) + "," +
               fmt9(r.losses.sc) + "," + fmt9(r.losses.pr) + "," + fmt9(r.losses.e) + "," +
               fmt9(r.auroc) + "," + fmt9(r.auprc) + "\n";
    }
    return out;
}

std::string EvalReport::to_kv() const {
    std::string out;
    for (const auto& r : rows) {
        const std::string pre = "report." + r.dataset + ".";
        out += pre + "L_tot = " + fmt9(r.losses.tot) + "\n";
        out += pre + "L_d = " + fmt9(r.losses.d) + "\n";
        out += pre + "L_sc = " + fmt9(r.losses.sc) + "\n";
        out += pre + "L_pr = " + fmt9(r.losses.pr) + "\n";
        out += pre + "L_e = " + fmt9(r.losses.e) + "\n";
        out += pre + "auroc = " + fmt9(r.auroc) + "\n";
        out += pre + "auprc = " + fmt9(r.auprc) + "\n";
    }
    return out;
}

EvalReport build_report(const TailNet& tail, const FlowModel& density,
                        const std::vector<std::pair<std::string, Matrix>>& datasets,
                        const LossWeights& w, const ScoreConfig& cfg, std::uint64_t z_seed) {
    if (datasets.empty()) throw InputError("build_report: no datasets given");
    for (const auto& [name, m] : datasets) {
        if (m.cols != tail.dim()) {
            throw InputError("build_report: dataset '" + name + "' width != model dim");
        }
        if (m.rows < 1) throw InputError("build_report: dataset '" + name + "' is empty");
    }

    // One z batch for every row; L_sc is then bit-identical across rows.
    Matrix z_batch(w.n_batch, tail.dim());
    {
        Rng rng(z_seed);
        for (long i = 0; i < z_batch.rows; ++i)
            for (long j = 0; j < z_batch.cols; ++j) z_batch[i][j] = rng.normal();
    }

    const Matrix& normal = datasets.front().second;
    std::vector<double> normal_scores(normal.rows);
    for (long i = 0; i < normal.rows; ++i) {
        normal_scores[i] = anomaly_score(normal.row(i), density, normal, cfg);
    }

    EvalReport report;
    for (const auto& [name, m] : datasets) {
        EvalRow row;
        row.dataset = name;
        row.losses = loss_terms(tail, z_batch, m, density, w);

        std::vector<double> scores(normal_scores);
        std::vector<int> labels(normal_scores.size(), 0);
        for (long i = 0; i < m.rows; ++i) {
            scores.push_back(anomaly_score(m.row(i), density, normal, cfg));
            labels.push_back(1);
        }
        row.auroc = auroc(scores, labels);
        row.auprc = auprc(scores, labels);
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace tailgen

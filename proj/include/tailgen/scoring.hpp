#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailgen/flow.hpp"
#include "tailgen/matrix.hpp"
#include "tailgen/tail.hpp"

namespace tailgen {

struct ScoreConfig {
    double epsilon = 0.0;           // support threshold on raw density
    double epsilon_quantile = 0.05; // default rule: 5th percentile of train density
    double alpha_density = 1.0;
    double alpha_distance = 0.01;
    double p = 2.0;

    void validate() const;
};

/// score = alpha_density * (-log p(x)) + alpha_distance * min_j ||x - x_j||_p.
/// Higher means more anomalous. An empty reference matrix drops the distance
/// term.
double anomaly_score(std::span<const double> x, const FlowModel& density, const Matrix& ref_data,
                     const ScoreConfig& cfg);

/// true iff exp(log p(x)) >= epsilon (boundary points count as inside).
bool support_membership(std::span<const double> x, const FlowModel& density,
                        const ScoreConfig& cfg);

/// Density value at the given quantile (linear interpolation between order
/// statistics) of exp(log p) over the rows of data.
double epsilon_from_quantile(const FlowModel& density, const Matrix& data, double quantile);

/// Mann-Whitney AUROC: probability a random positive outranks a random
/// negative, ties counted 1/2. Throws InputError unless both classes appear.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Average precision: mean over positives of precision at each positive hit,
/// scores sorted descending, ties broken by original index. Throws InputError
/// when no positive labels are present.
double auprc(std::span<const double> scores, std::span<const int> labels);

struct EvalRow {
    std::string dataset;
    LossTerms losses;
    double auroc = 0.0;
    double auprc = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;

    /// CSV with a header row; floats printed to 9 significant digits.
    std::string to_csv() const;
    /// Flat key = value text for machine diffing.
    std::string to_kv() const;
};

/// One row per dataset: loss terms with that dataset as the data argument
/// (fixed tail, one z batch drawn from z_seed for the whole report), plus
/// AUROC/AUPRC of the anomaly score against the first (normal) dataset. The
/// first dataset also serves as the distance reference for scoring; its own
/// row compares it with itself, which pins AUROC/AUPRC at 0.5 by symmetry.
EvalReport build_report(const TailNet& tail, const FlowModel& density,
                        const std::vector<std::pair<std::string, Matrix>>& datasets,
                        const LossWeights& w, const ScoreConfig& cfg, std::uint64_t z_seed);

}  // namespace tailgen

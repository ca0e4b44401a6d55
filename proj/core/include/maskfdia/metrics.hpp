#pragma once

#include <span>
#include <vector>

namespace maskfdia {

struct ScoredSample {
    double score = 0.0;
    int label = 0;  // 0 normal, 1 fault
};

/// P(score of a random positive > score of a random negative), ties count
/// one half (Mann-Whitney U / (P * N)). Throws MetricError unless both
/// classes are present.
double roc_auc(std::span<const ScoredSample> samples);

/// Non-interpolated area under the precision-recall curve: thresholds at
/// every distinct score, descending, summing (R_k - R_{k-1}) * P_k.
/// Throws MetricError without positives.
double auprc(std::span<const ScoredSample> samples);

struct CurvePoint {
    double threshold = 0.0;
    double x = 0.0;  // fpr (ROC) or recall (PR)
    double y = 0.0;  // tpr (ROC) or precision (PR)
};

/// (fpr, tpr) per distinct threshold, from (0, 0) to (1, 1).
std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples);
/// (recall, precision) per distinct threshold, recall non-decreasing.
std::vector<CurvePoint> pr_curve(std::span<const ScoredSample> samples);

}  // namespace maskfdia

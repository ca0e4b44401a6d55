#include "maskfdia/metrics.hpp"

#include "maskfdia/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace maskfdia {
namespace {

struct Counts {
    double positives = 0;
    double negatives = 0;
};

Counts count_classes(std::span<const ScoredSample> samples) {
    Counts c;
    for (const auto& s : samples) {
        if (!std::isfinite(s.score)) throw MetricError("metric: non-finite score");
        (s.label ? c.positives : c.negatives) += 1;
    }
    return c;
}

std::vector<std::size_t> order_by_score_desc(std::span<const ScoredSample> samples) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return samples[a].score > samples[b].score; });
    return order;
}

// Walks tie groups from the highest score down, reporting cumulative (tp, fp).
template <typename F>
void sweep(std::span<const ScoredSample> samples, F&& on_threshold) {
    const auto order = order_by_score_desc(samples);
    double tp = 0;
    double fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double score = samples[order[i]].score;
        while (i < order.size() && samples[order[i]].score == score) {
            (samples[order[i]].label ? tp : fp) += 1;
            ++i;
        }
        on_threshold(score, tp, fp);
    }
}

}  // namespace

double roc_auc(std::span<const ScoredSample> samples) {
    const Counts c = count_classes(samples);
    if (c.positives == 0 || c.negatives == 0) throw MetricError("roc_auc: both classes are required");
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return samples[a].score < samples[b].score; });
    // Sum of (1-based) mid-ranks of the positives.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
        const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (samples[order[k]].label) rank_sum += mid_rank;
        }
        i = j;
    }
    const double u = rank_sum - c.positives * (c.positives + 1.0) / 2.0;
    return u / (c.positives * c.negatives);
}

double auprc(std::span<const ScoredSample> samples) {
    const Counts c = count_classes(samples);
    if (c.positives == 0) throw MetricError("auprc: at least one positive is required");
    double area = 0.0;
    double previous_recall = 0.0;
    sweep(samples, [&](double, double tp, double fp) {
        const double recall = tp / c.positives;
        const double precision = tp / (tp + fp);
        area += (recall - previous_recall) * precision;
        previous_recall = recall;
    });
    return area;
}

std::vector<CurvePoint> roc_curve(std::span<const ScoredSample> samples) {
    const Counts c = count_classes(samples);
    if (c.positives == 0 || c.negatives == 0) throw MetricError("roc_curve: both classes are required");
    std::vector<CurvePoint> points{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
    sweep(samples, [&](double score, double tp, double fp) {
        points.push_back({score, fp / c.negatives, tp / c.positives});
    });
    return points;
}

std::vector<CurvePoint> pr_curve(std::span<const ScoredSample> samples) {
    const Counts c = count_classes(samples);
    if (c.positives == 0) throw MetricError("pr_curve: at least one positive is required");
    std::vector<CurvePoint> points;
    sweep(samples, [&](double score, double tp, double fp) {
        points.push_back({score, tp / c.positives, tp / (tp + fp)});
    });
    return points;
}

}  // namespace maskfdia

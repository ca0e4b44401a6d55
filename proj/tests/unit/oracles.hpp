#pragma once

#include "helpers.hpp"

#include "maskfdia/metrics.hpp"
#include "maskfdia/model.hpp"
#include "maskfdia/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

// Reference computations written without the library's code paths.
namespace test {

using maskfdia::Formulation;
using maskfdia::GradientTape;
using maskfdia::NodeId;
using maskfdia::Rng;
using maskfdia::ScoredSample;
using maskfdia::SequenceModel;
using maskfdia::Tensor;
using maskfdia::build_autoencoder;
using maskfdia::build_auto_regressive_model;
using maskfdia::build_masked_model;

struct Probe {
    SequenceModel model;
    Tensor input;
    Tensor target;
    Tensor selection;  // empty for the all-cell loss
};

inline Probe make_probe(Formulation f, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = 5, T = 3, batch = 3;
    Probe p;
    switch (f) {
        case Formulation::masked: p.model = build_masked_model(n, 4, T, {6, 5}); break;
        case Formulation::auto_regressive: p.model = build_auto_regressive_model(n, T, {7}); break;
        case Formulation::auto_associative: p.model = build_autoencoder(n, T, {6, 2}); break;
    }
    p.model.initialize(rng);
    for (auto& t : p.model.parameters())
        if (t.rank() == 1)
            for (double& v : t.values()) v = rng.uniform(-0.5, 0.5);
    p.input = random_matrix(batch, p.model.input_width(), rng);
    p.target = random_matrix(batch, p.model.output_width(), rng);
    if (f == Formulation::masked) {
        p.selection = Tensor::matrix(batch, p.model.output_width());
        const std::size_t m = p.model.n_maskable();
        for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t ch = rng.uniform_index(m);
            for (std::size_t t = 0; t <= T; ++t) p.selection(b, t * m + ch) = 1.0;
        }
    }
    return p;
}

// Loss computed from a plain forward pass, independent of the tape.
inline double probe_loss(const Probe& p) {
    const Tensor out = p.model.forward(p.input);
    double sum = 0.0, count = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double w = p.selection.empty() ? 1.0 : p.selection[i];
        sum += w * (out[i] - p.target[i]) * (out[i] - p.target[i]);
        count += w;
    }
    return sum / count;
}

inline std::vector<Tensor> probe_gradients(const Probe& p) {
    GradientTape tape;
    const NodeId out = p.model.forward(tape, tape.input(p.input));
    const NodeId loss = p.selection.empty() ? tape.mse(out, p.target) : tape.masked_mse(out, p.target, p.selection);
    return tape.backward(loss);
}

inline double max_relative_fd_error(Probe p) {
    const auto analytic = probe_gradients(p);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < p.model.parameters().size(); ++k) {
        Tensor& param = p.model.parameters()[k];
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double keep = param[i];
            param[i] = keep + h;
            const double up = probe_loss(p);
            param[i] = keep - h;
            const double down = probe_loss(p);
            param[i] = keep;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic[k][i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}


// Pair counting over every positive/negative pair.
inline double auc_by_pairs(const std::vector<ScoredSample>& s) {
    double wins = 0.0, pairs = 0.0;
    for (const auto& p : s) {
        if (!p.label) continue;
        for (const auto& n : s) {
            if (n.label) continue;
            pairs += 1.0;
            wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
        }
    }
    return wins / pairs;
}

// Step-wise area: at every distinct score t (descending) predict "fault" for score >= t.
inline double auprc_by_thresholds(const std::vector<ScoredSample>& s) {
    std::set<double, std::greater<>> cuts;
    double positives = 0.0;
    for (const auto& x : s) {
        cuts.insert(x.score);
        positives += x.label;
    }
    double area = 0.0, last_recall = 0.0;
    for (double t : cuts) {
        double tp = 0.0, predicted = 0.0;
        for (const auto& x : s) {
            if (x.score >= t) {
                predicted += 1.0;
                tp += x.label;
            }
        }
        const double recall = tp / positives;
        area += (recall - last_recall) * (tp / predicted);
        last_recall = recall;
    }
    return area;
}

}  // namespace test

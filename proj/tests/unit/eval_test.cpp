#include "helpers.hpp"
#include "oracles.hpp"

#include "maskfdia/error.hpp"
#include "maskfdia/eval.hpp"
#include "maskfdia/report.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

using namespace maskfdia;

namespace {

double determinant(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        if (a[p][c] == 0.0) return 0.0;
        if (p != c) {
            std::swap(a[p], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return det;
}

}  // namespace

TEST_CASE("roc_auc and auprc match brute force on every small label pattern") {
    Rng rng(5);
    for (std::size_t n : {2u, 3u, 5u, 8u, 12u}) {
        for (std::uint32_t pattern = 1; pattern + 1 < (1u << n); pattern += (n > 8 ? 37 : 1)) {
            for (int draw = 0; draw < (n > 8 ? 10 : 100); ++draw) {
                std::vector<ScoredSample> s(n);
                for (std::size_t i = 0; i < n; ++i) {
                    // coarse scores so ties occur
                    s[i].score = std::floor(rng.uniform(0.0, 4.0)) / 4.0;
                    s[i].label = (pattern >> i) & 1u;
                }
                CHECK(roc_auc(s) == doctest::Approx(test::auc_by_pairs(s)).epsilon(1e-12));
                CHECK(auprc(s) == doctest::Approx(test::auprc_by_thresholds(s)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("metric hand cases") {
    const std::vector<ScoredSample> perfect = {{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}};
    CHECK(roc_auc(perfect) == 1.0);
    CHECK(auprc(perfect) == 1.0);
    const std::vector<ScoredSample> inverted = {{0.1, 1}, {0.2, 1}, {0.8, 0}, {0.9, 0}};
    CHECK(roc_auc(inverted) == 0.0);
    const std::vector<ScoredSample> tied = {{0.5, 1}, {0.5, 0}, {0.5, 0}, {0.5, 1}};
    CHECK(roc_auc(tied) == 0.5);
    CHECK(auprc(tied) == 0.5);
    // ranks: + - + -  -> precision 1 at recall 0.5, 2/3 at recall 1
    const std::vector<ScoredSample> mixed = {{4, 1}, {3, 0}, {2, 1}, {1, 0}};
    CHECK(roc_auc(mixed) == doctest::Approx(0.75));
    CHECK(auprc(mixed) == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0));
}

TEST_CASE("metrics are rank based") {
    Rng rng(8);
    std::vector<ScoredSample> s(200);
    for (auto& x : s) {
        x.label = rng.uniform() < 0.3;
        x.score = rng.normal() + x.label;
    }
    auto warped = s;
    for (auto& x : warped) x.score = std::exp(3.0 * x.score) + 7.0;
    CHECK(roc_auc(warped) == doctest::Approx(roc_auc(s)).epsilon(1e-12));
    CHECK(auprc(warped) == doctest::Approx(auprc(s)).epsilon(1e-12));
    auto shuffled = s;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(roc_auc(shuffled) == doctest::Approx(roc_auc(s)).epsilon(1e-12));
    CHECK(auprc(shuffled) == doctest::Approx(auprc(s)).epsilon(1e-12));
}

TEST_CASE("uninformative scores give chance-level metrics") {
    Rng rng(2);
    std::vector<ScoredSample> s(20000);
    double positives = 0.0;
    for (auto& x : s) {
        x.label = rng.uniform() < 0.2;
        x.score = rng.uniform();
        positives += x.label;
    }
    CHECK(std::abs(roc_auc(s) - 0.5) < 0.02);
    CHECK(std::abs(auprc(s) - positives / 20000.0) < 0.02);
}

TEST_CASE("single-class inputs are rejected") {
    const std::vector<ScoredSample> negatives = {{0.1, 0}, {0.2, 0}};
    const std::vector<ScoredSample> positives = {{0.1, 1}, {0.2, 1}};
    CHECK_THROWS_AS(roc_auc(negatives), MetricError);
    CHECK_THROWS_AS(roc_auc(positives), MetricError);
    CHECK_THROWS_AS(auprc(negatives), MetricError);
    CHECK(auprc(positives) == 1.0);
    CHECK_THROWS_AS(roc_auc(std::vector<ScoredSample>{{NAN, 1}, {0.0, 0}}), MetricError);
}

TEST_CASE("curves") {
    Rng rng(4);
    std::vector<ScoredSample> s(50);
    for (auto& x : s) {
        x.label = rng.uniform() < 0.5;
        x.score = std::round(rng.uniform() * 10.0);
    }
    const auto roc = roc_curve(s);
    CHECK(roc.front().x == 0.0);
    CHECK(roc.front().y == 0.0);
    CHECK(roc.back().x == 1.0);
    CHECK(roc.back().y == 1.0);
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        CHECK(roc[i].x >= roc[i - 1].x);
        CHECK(roc[i].y >= roc[i - 1].y);
        area += (roc[i].x - roc[i - 1].x) * (roc[i].y + roc[i - 1].y) / 2.0;
    }
    CHECK(area == doctest::Approx(roc_auc(s)).epsilon(1e-12));
    const auto pr = pr_curve(s);
    for (std::size_t i = 1; i < pr.size(); ++i) CHECK(pr[i].x >= pr[i - 1].x);
    CHECK(pr.back().x == 1.0);
    CHECK(roc_table(s).rows.size() == roc.size());
    CHECK(pr_table(s).header == std::vector<std::string>{"threshold", "recall", "precision"});
}

TEST_CASE("report helpers") {
    CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(percent_change(150.0, 100.0) == 50.0);
    CHECK(percent_change(0.0, 0.0) == 0.0);
    CHECK(format_number(0.1) == "0.1");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);

    CsvTable t{{"a", "b"}, {}};
    t.add_row(std::vector<double>{1.5, -2.0});
    CHECK(t.to_string() == "a,b\n1.5,-2\n");
    CHECK_THROWS_AS(t.add_row(std::vector<double>{1.0}), DimensionError);

    Report r;
    r.summary["x"] = 1;
    r.tables.emplace_back("t.csv", t);
    const auto dir = test::scratch_dir("report") / "nested";
    write_report(r, dir);
    std::ifstream in(dir / "t.csv");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    CHECK(text == t.to_string());
    CHECK(git_blob_sha1_file(dir / "t.csv") == git_blob_sha1(text));
    CHECK(nlohmann::json::parse(std::ifstream(dir / "summary.json"))["x"] == 1);
}

TEST_CASE("downstream pipeline") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = DownstreamPipeline::random(8, 4, seed);
        REQUIRE(p.n_outputs() == 4);
        std::vector<std::vector<double>> gram(4, std::vector<double>(4, 0.0));
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                for (std::size_t k = 0; k < 8; ++k) gram[i][j] += p.weights(i, k) * p.weights(j, k);
        CHECK(determinant(gram) > 0.5);
        for (double w : p.weights.values()) CHECK(std::abs(w) == 1.0);
    }
    const auto p = DownstreamPipeline::random(3, 2, 1);
    Tensor x = Tensor::matrix(1, 3);
    x(0, 0) = 1.0;
    x(0, 1) = 2.0;
    x(0, 2) = 3.0;
    const Tensor y = p.apply(x);
    CHECK(y(0, 1) == doctest::Approx(p.offset[1] + p.weights(1, 0) + 2 * p.weights(1, 1) + 3 * p.weights(1, 2)));
    CHECK_THROWS_AS(DownstreamPipeline::random(3, 4, 1), UsageError);
    CHECK(DownstreamPipeline::random(8, 4, 3).weights == DownstreamPipeline::random(8, 4, 3).weights);
}

namespace {

struct Rig {
    TimeSeriesDataset raw;
    Scaler scaler;
    FdiaEngine engine;
};

Rig rig() {
    Rng rng(6);
    auto raw = test::random_dataset(400, 6, rng);
    for (double& v : raw.samples.values()) v = 10.0 * v - 3.0;
    const Scaler scaler = Scaler::fit(raw, {0, 400});
    const auto scaled = scaler.transform(raw);
    SequenceModel model = build_masked_model(6, 6, 4, {8});
    model.initialize(rng);
    return {raw, scaler, FdiaEngine(std::move(model), compute_channel_stats(scaled, {0, 400}))};
}

FaultScenario bias_on(std::size_t c, double magnitude) {
    FaultSpec f;
    f.targets = {c};
    f.magnitude = magnitude;
    f.start_index = 100;
    f.end_index = 300;
    return {"b", {f}};
}

}  // namespace

TEST_CASE("accommodation arms") {
    const Rig r = rig();
    const auto pipeline = DownstreamPipeline::random(6, 3, 9);
    Thresholds never;
    never.values.assign(6, 1e9);

    const auto zero = accommodation_benchmark(r.engine, never, pipeline, r.raw, r.scaler, bias_on(2, 0.0), 0.5, 1);
    for (const auto& row : zero.rows) {
        CHECK(row.mse_fault_no_fdia == doctest::Approx(row.mse_no_fault).epsilon(1e-9));
        CHECK(row.mse_fault_with_fdia == doctest::Approx(row.mse_no_fault).epsilon(1e-9));
    }
    CHECK(zero.flagged_steps == 0);

    const auto big = accommodation_benchmark(r.engine, never, pipeline, r.raw, r.scaler, bias_on(2, 3.0), 0.5, 1);
    const auto other = accommodation_benchmark(r.engine, never, pipeline, r.raw, r.scaler, bias_on(4, 1.0), 0.5, 1);
    for (std::size_t o = 0; o < 3; ++o) {
        CHECK(big.rows[o].mse_no_fault == zero.rows[o].mse_no_fault);
        CHECK(other.rows[o].mse_no_fault == zero.rows[o].mse_no_fault);
        CHECK(big.rows[o].mse_fault_no_fdia > big.rows[o].mse_no_fault);
        CHECK(big.rows[o].mse_fault_with_fdia == doctest::Approx(big.rows[o].mse_fault_no_fdia).epsilon(1e-9));
    }

    // raw-unit check of arm 2: the pipeline shift is w * 3 std for 200 of 400 samples
    const double raw_std = compute_channel_stats(r.raw, {0, 400})[2].std;
    const double shift = 3.0 * raw_std;
    const auto same_noise = accommodation_benchmark(r.engine, never, pipeline, r.raw, r.scaler, bias_on(2, 3.0), 0.0, 1);
    for (std::size_t o = 0; o < 3; ++o) {
        CHECK(same_noise.rows[o].mse_no_fault == doctest::Approx(0.0));
        CHECK(same_noise.rows[o].mse_fault_no_fdia == doctest::Approx(shift * shift * 0.5).epsilon(1e-9));
    }

    const auto j = to_json(big);
    CHECK(j["outputs"].size() == 3);
    CHECK(j["outputs"][0]["mse_fault_no_fdia"].get<double>() == big.rows[0].mse_fault_no_fdia);
}

TEST_CASE("window scores label a window by overlap with the fault") {
    const Rig r = rig();
    const auto scaled = r.scaler.transform(r.raw);
    FaultLabels labels(400, 6);
    for (std::size_t t = 100; t < 110; ++t) labels.mark(t, 2);
    const auto s = window_scores(r.engine.model(), scaled, labels, 2, r.engine.train_stats());
    REQUIRE(s.size() == 396);
    for (std::size_t w = 0; w < s.size(); ++w) {
        CAPTURE(w);
        CHECK(s[w].label == (w + 4 >= 100 && w <= 109));
    }
    CHECK(s[17].score == r.engine.score_window(window_at(scaled, 17, 4), 2));
    const auto strided = window_scores(r.engine.model(), scaled, labels, 2, r.engine.train_stats(), {}, 5);
    CHECK(strided.size() == 80);
    CHECK(strided[3].score == s[15].score);
}

TEST_CASE("baseline scores use the last row") {
    Rng rng(3);
    auto ds = test::random_dataset(60, 4, rng);
    FaultLabels labels(60, 4);
    SequenceModel ar = build_auto_regressive_model(4, 3, {5});
    ar.initialize(rng);
    const auto stats = compute_channel_stats(ds, {0, 60});
    const auto s = window_scores(ar, ds, labels, 1, stats);
    REQUIRE(s.size() == 57);
    Tensor in = Tensor::matrix(1, 12);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t c = 0; c < 4; ++c) in(0, t * 4 + c) = ds.at(10 + t, c);
    CHECK(s[10].score == doctest::Approx(std::abs(ar.forward(in)(0, 1) - ds.at(13, 1))).epsilon(1e-14));

    SequenceModel ae = build_autoencoder(4, 3, {3, 2});
    ae.initialize(rng);
    const auto a = window_scores(ae, ds, labels, 0, stats);
    Tensor row = Tensor::matrix(1, 4);
    for (std::size_t c = 0; c < 4; ++c) row(0, c) = ds.at(25, c);
    CHECK(a[22].score == doctest::Approx(std::abs(ae.autoencode(row)(0, 0) - ds.at(25, 0))).epsilon(1e-14));
}

TEST_CASE("latency benchmark counts first-pass forwards") {
    const Rig r = rig();
    const auto res = latency_benchmark(r.engine, 20, 1e6, 1);
    CHECK(res.repetitions == 20);
    CHECK(res.passes_count == 6);
    CHECK(res.within_budget);
    CHECK(res.max_ms >= res.p95_ms);
    CHECK(res.p95_ms >= 0.0);
    CHECK_FALSE(latency_benchmark(r.engine, 5, 0.0, 1).within_budget);
}

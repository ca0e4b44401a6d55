#include "helpers.hpp"

#include "maskfdia/data.hpp"
#include "maskfdia/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <string>

using namespace maskfdia;

namespace {

bool error_mentions(const std::filesystem::path& file, const std::string& needle) {
    try {
        load_csv(file);
    } catch (const IngestionError& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
}

// Least squares of y on the columns of X plus an intercept, by modified
// Gram-Schmidt with rank-deficient columns dropped. Returns residual RMS and R^2.
std::pair<double, double> least_squares(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
    const std::size_t N = y.size();
    std::vector<std::vector<double>> q;
    std::vector<double> ones(N, 1.0);
    auto add = [&](std::vector<double> v) {
        const double norm0 = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        for (const auto& b : q) {
            const double d = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
            for (std::size_t i = 0; i < N; ++i) v[i] -= d * b[i];
        }
        const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        if (norm <= 1e-9 * norm0 || norm == 0.0) return;
        for (double& x : v) x /= norm;
        q.push_back(std::move(v));
    };
    add(ones);
    for (const auto& col : X) add(col);
    std::vector<double> r = y;
    for (const auto& b : q) {
        const double d = std::inner_product(r.begin(), r.end(), b.begin(), 0.0);
        for (std::size_t i = 0; i < N; ++i) r[i] -= d * b[i];
    }
    double mean = 0.0;
    for (double v : y) mean += v / double(N);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        ss_res += r[i] * r[i];
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    return {std::sqrt(ss_res / double(N)), 1.0 - ss_res / ss_tot};
}

std::vector<double> column(const TimeSeriesDataset& ds, std::size_t c) {
    std::vector<double> v(ds.length());
    for (std::size_t t = 0; t < ds.length(); ++t) v[t] = ds.at(t, c);
    return v;
}

std::pair<double, double> fit_channel_on_others(const TimeSeriesDataset& ds, std::size_t target) {
    std::vector<std::vector<double>> X;
    for (std::size_t c = 0; c < ds.n_channels(); ++c)
        if (c != target) X.push_back(column(ds, c));
    return least_squares(X, column(ds, target));
}

}  // namespace

TEST_CASE("load_csv reads a small file exactly") {
    const auto ds = load_csv(test::fixture("three_rows.csv"));
    REQUIRE(ds.length() == 3);
    REQUIRE(ds.n_channels() == 2);
    CHECK(ds.channel_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.at(0, 0) == 1.5);
    CHECK(ds.at(1, 1) == 4.25);
    CHECK(ds.at(2, 0) == -1.0);
    CHECK(ds.sample_rate_hz == doctest::Approx(1.0));
}

TEST_CASE("load_csv: semicolons, exclusions, explicit channels, sample rate") {
    const auto ds = load_csv(test::fixture("semicolon.csv"), {std::nullopt, {"attack"}});
    CHECK(ds.channel_names == std::vector<std::string>{"p", "q"});
    CHECK(ds.sample_rate_hz == doctest::Approx(2.0));
    const auto picked = load_csv(test::fixture("semicolon.csv"), {std::vector<std::string>{"q", "p"}, {}});
    CHECK(picked.channel_names == std::vector<std::string>{"q", "p"});
    CHECK(picked.at(2, 0) == 6.0);
    CHECK_THROWS_AS(load_csv(test::fixture("semicolon.csv"), {std::vector<std::string>{"p", "zz"}, {}}),
                    IngestionError);
}

TEST_CASE("load_csv error paths name the row and column") {
    CHECK(error_mentions(test::fixture("bad_cell.csv"), "row 3, column 2"));
    CHECK(error_mentions(test::fixture("ragged.csv"), "row 3"));
    CHECK(error_mentions(test::fixture("missing_cell.csv"), "missing value"));
    CHECK(error_mentions(test::fixture("one_channel.csv"), "at least 2 channels"));
    CHECK(error_mentions(test::fixture("no_such_file.csv"), "no_such_file.csv"));
}

TEST_CASE("write_csv round-trips through load_csv") {
    Rng rng(4);
    auto ds = test::random_dataset(50, 3, rng);
    ds.samples(3, 1) = 1e-300;
    ds.samples(4, 2) = -123456.789012345678;
    const auto dir = test::scratch_dir("data_roundtrip");
    write_csv(ds, dir / "x.csv");
    const auto back = load_csv(dir / "x.csv");
    CHECK(back.channel_names == ds.channel_names);
    CHECK(back.samples == ds.samples);
}

TEST_CASE("scaler") {
    TimeSeriesDataset ds;
    ds.channel_names = {"a", "b"};
    ds.samples = Tensor::from_rows({{2, 5}, {4, 5}, {6, 5}});
    const Scaler s = Scaler::fit(ds, {0, 3});
    CHECK(s.mins()[0] == 2.0);
    CHECK(s.maxs()[0] == 6.0);
    CHECK(s.transform(4.0, 0) == 0.5);
    CHECK(s.transform(8.0, 0) == 1.5);
    CHECK(s.transform(5.0, 1) == 0.5);
    CHECK(s.inverse(0.5, 1) == 5.0);
    CHECK_THROWS_AS(Scaler::fit(ds, {1, 1}), UsageError);

    SUBCASE("fit uses the given range only") {
        const Scaler part = Scaler::fit(ds, {0, 2});
        CHECK(part.maxs()[0] == 4.0);
    }
    SUBCASE("round trip within 1e-9, including out-of-range values") {
        Rng rng(9);
        for (int k = 0; k < 1000; ++k) {
            const double x = rng.uniform(-1e3, 1e3);
            CHECK(std::abs(s.inverse(s.transform(x, 0), 0) - x) < 1e-9);
        }
    }
}

TEST_CASE("chronological_split") {
    Rng rng(1);
    const auto ds = test::random_dataset(10, 2, rng);
    auto [train, val] = chronological_split(ds, 0.8);
    CHECK(train.length() == 8);
    CHECK(val.length() == 2);
    CHECK(train.at(7, 1) == ds.at(7, 1));
    CHECK(val.at(0, 0) == ds.at(8, 0));
    CHECK_THROWS_AS(chronological_split(ds, 0.99, 21), UsageError);
    CHECK_THROWS_AS(chronological_split(ds, 1.0), UsageError);
    CHECK_THROWS_AS(chronological_split(ds, 0.0), UsageError);
    CHECK(static_cast<std::size_t>(0.8 * 309600) == 247680);
}

TEST_CASE("windows") {
    Rng rng(2);
    const auto ds = test::random_dataset(5, 2, rng);
    auto w = windows(ds, 2, 1);
    REQUIRE(w.size() == 3);
    CHECK(w[2].start_index == 2);
    CHECK(w[1].values(0, 1) == ds.at(1, 1));
    w = windows(ds, 2, 2);
    REQUIRE(w.size() == 2);
    CHECK(w[1].start_index == 2);
    CHECK(window_count(100, 19, 3) == (100 - 19 - 1) / 3 + 1);
    CHECK_THROWS_AS(windows(ds, 5, 1), UsageError);

    SUBCASE("last rows of stride-1 windows rebuild the tail") {
        const auto big = test::random_dataset(40, 3, rng);
        const auto ws = windows(big, 4, 1);
        for (std::size_t k = 0; k < ws.size(); ++k) {
            for (std::size_t c = 0; c < 3; ++c) CHECK(ws[k].values(4, c) == big.at(k + 4, c));
        }
        CHECK(ws.size() == 40 - 4);
    }
}

TEST_CASE("downsample") {
    Rng rng(3);
    auto ds = test::random_dataset(10, 2, rng);
    ds.sample_rate_hz = 25.0;
    CHECK(downsample(ds, 1).samples == ds.samples);
    const auto d3 = downsample(ds, 3);
    REQUIRE(d3.length() == 4);
    CHECK(d3.at(3, 0) == ds.at(9, 0));
    CHECK(d3.sample_rate_hz == doctest::Approx(25.0 / 3));
    CHECK(downsample(ds, 25).length() == 1);
    CHECK_THROWS_AS(downsample(ds, 0), UsageError);
}

TEST_CASE("synthetic plant is deterministic per seed") {
    PlantConfig cfg;
    cfg.length = 3000;
    cfg.seed = 11;
    CHECK(synthesize_plant(cfg).samples == synthesize_plant(cfg).samples);
    cfg.seed = 12;
    const auto other = synthesize_plant(cfg);
    cfg.seed = 11;
    CHECK_FALSE(other.samples == synthesize_plant(cfg).samples);
}

TEST_CASE("fully coupled noiseless plant: every channel is a linear mix of the others") {
    for (std::size_t modes : {1u, 3u}) {
        PlantConfig cfg;
        cfg.length = 4000;
        cfg.coupling_strength = 1.0;
        cfg.noise_std = 0.0;
        cfg.shared_modes = modes;
        cfg.seed = 5;
        const auto ds = synthesize_plant(cfg);
        for (std::size_t c = 0; c < ds.n_channels(); ++c) CHECK(fit_channel_on_others(ds, c).first < 1e-8);
    }
}

TEST_CASE("uncoupled plant: channels do not explain each other") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PlantConfig cfg;
        cfg.length = 10000;
        cfg.coupling_strength = 0.0;
        cfg.seed = seed;
        const auto ds = synthesize_plant(cfg);
        for (std::size_t c = 0; c < ds.n_channels(); ++c) {
            CAPTURE(seed);
            CAPTURE(c);
            CHECK(fit_channel_on_others(ds, c).second < 0.05);
        }
    }
}

TEST_CASE("plant channel std is close to its target") {
    PlantConfig cfg;
    cfg.length = 10000;
    cfg.seed = 3;
    const auto ds = synthesize_plant(cfg);
    const auto stats = compute_channel_stats(ds, {0, ds.length()});
    const double target = std::sqrt(1.0 + cfg.noise_std * cfg.noise_std);
    for (const auto& s : stats) CHECK(std::abs(s.std / target - 1.0) < 0.1);
}

TEST_CASE("plant rejects degenerate configs") {
    PlantConfig cfg;
    cfg.n_channels = 3;
    CHECK_THROWS_AS(synthesize_plant(cfg), UsageError);
    cfg = {};
    cfg.length = 999;
    CHECK_THROWS_AS(synthesize_plant(cfg), UsageError);
    cfg = {};
    cfg.shared_modes = 8;
    CHECK_THROWS_AS(synthesize_plant(cfg), UsageError);
    cfg = {};
    cfg.coupling_strength = 1.5;
    CHECK_THROWS_AS(synthesize_plant(cfg), UsageError);
}

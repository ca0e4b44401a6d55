#include "helpers.hpp"

#include "maskfdia/error.hpp"
#include "maskfdia/faults.hpp"

#include <doctest.h>

#include <cmath>

using namespace maskfdia;

namespace {

TimeSeriesDataset base(std::size_t length = 3000, std::size_t n = 4, std::uint64_t seed = 1) {
    Rng rng(seed);
    return test::random_dataset(length, n, rng);
}

FaultSpec spec(FaultKind kind, std::vector<std::size_t> targets, double magnitude, std::size_t start,
               std::size_t end) {
    FaultSpec s;
    s.kind = kind;
    s.targets = std::move(targets);
    s.magnitude = magnitude;
    s.start_index = start;
    s.end_index = end;
    return s;
}

const std::vector<double> kStd = {0.5, 2.0, 0.25, 1.0};

}  // namespace

TEST_CASE("bias shifts exactly the targeted cells") {
    const auto clean = base();
    const auto f = inject_bias(clean, spec(FaultKind::bias, {1}, 1.5, 100, 200), kStd);
    for (std::size_t t = 0; t < clean.length(); ++t) {
        for (std::size_t c = 0; c < 4; ++c) {
            const bool hit = c == 1 && t >= 100 && t < 200;
            CHECK(f.labels.at(t, c) == hit);
            if (hit)
                CHECK(f.series.at(t, c) == doctest::Approx(clean.at(t, c) + 3.0).epsilon(1e-14));
            else
                CHECK(f.series.at(t, c) == clean.at(t, c));
        }
    }
    CHECK(f.series.channel_names == clean.channel_names);
}

TEST_CASE("zero-magnitude bias changes nothing but the labels") {
    const auto clean = base();
    const auto f = inject(clean, spec(FaultKind::bias, {2}, 0.0, 10, 20), kStd);
    CHECK(f.series.samples == clean.samples);
    CHECK(f.labels.any_in(2, 0, 3000));
    CHECK_FALSE(f.labels.any_in(1, 0, 3000));
}

TEST_CASE("drift ramps from zero to the full offset") {
    const auto clean = base();
    const auto f = inject(clean, spec(FaultKind::drift, {0}, 2.0, 100, 201), kStd);
    CHECK(f.series.at(100, 0) == clean.at(100, 0));
    CHECK(f.series.at(200, 0) == doctest::Approx(clean.at(200, 0) + 1.0).epsilon(1e-14));
    CHECK(f.series.at(150, 0) == doctest::Approx(clean.at(150, 0) + 0.5).epsilon(1e-14));
    CHECK(f.series.at(201, 0) == clean.at(201, 0));
    CHECK_THROWS_AS(inject(clean, spec(FaultKind::drift, {0}, 2.0, 5, 6), kStd), UsageError);
}

TEST_CASE("noise has the requested spread and is reproducible") {
    const auto clean = base(20000);
    auto s = spec(FaultKind::noise, {3}, 0.5, 0, 20000);
    s.seed = 9;
    const auto a = inject(clean, s, kStd);
    const auto b = inject(clean, s, kStd);
    CHECK(a.series.samples == b.series.samples);
    double sum = 0.0, sq = 0.0;
    for (std::size_t t = 0; t < 20000; ++t) {
        const double d = a.series.at(t, 3) - clean.at(t, 3);
        sum += d;
        sq += d * d;
    }
    const double mean = sum / 20000.0;
    const double sd = std::sqrt(sq / 20000.0 - mean * mean);
    CHECK(std::abs(sd - 0.5) < 0.025);
    CHECK(std::abs(mean) < 0.02);
    s.seed = 10;
    CHECK_FALSE(inject(clean, s, kStd).series.samples == a.series.samples);
}

TEST_CASE("multi_bias shifts each target by its own std") {
    const auto clean = base();
    CHECK_THROWS_AS(inject(clean, spec(FaultKind::multi_bias, {1}, 1.0, 0, 10), kStd), UsageError);
    const auto f = inject(clean, spec(FaultKind::multi_bias, {0, 2}, 2.0, 50, 60), kStd);
    CHECK(f.series.at(55, 0) == doctest::Approx(clean.at(55, 0) + 1.0).epsilon(1e-14));
    CHECK(f.series.at(55, 2) == doctest::Approx(clean.at(55, 2) + 0.5).epsilon(1e-14));
    CHECK(f.series.at(55, 1) == clean.at(55, 1));
    CHECK(f.labels.at(55, 0));
    CHECK(f.labels.at(59, 2));
    CHECK_FALSE(f.labels.at(60, 2));
}

TEST_CASE("invalid specs") {
    const auto clean = base(100);
    CHECK_THROWS_AS(inject(clean, spec(FaultKind::bias, {}, 1.0, 0, 10), kStd), UsageError);
    CHECK_THROWS_AS(inject(clean, spec(FaultKind::bias, {7}, 1.0, 0, 10), kStd), UsageError);
    CHECK_THROWS_AS(inject(clean, spec(FaultKind::bias, {0}, 1.0, 50, 101), kStd), UsageError);
    CHECK_THROWS_AS(inject(clean, spec(FaultKind::bias, {0}, 1.0, 10, 10), kStd), UsageError);
    CHECK_THROWS_AS(inject(clean, spec(FaultKind::bias, {0}, NAN, 0, 10), kStd), UsageError);
    CHECK_THROWS_AS(inject(clean, spec(FaultKind::bias, {0}, 1.0, 0, 10), std::vector<double>{}), UsageError);
}

TEST_CASE("scenario injection") {
    const auto clean = base();
    FaultScenario sc{"pair", {spec(FaultKind::bias, {0}, 1.0, 0, 10), spec(FaultKind::drift, {3}, 1.0, 5, 20)}};
    CHECK(sc.target_channels() == std::vector<std::size_t>{0, 3});
    const auto f = inject_scenario(clean, sc, kStd);
    CHECK(f.labels.at(0, 0));
    CHECK(f.labels.at(19, 3));
    CHECK_FALSE(f.labels.at(0, 3));
    CHECK(f.series.at(5, 0) == doctest::Approx(clean.at(5, 0) + 0.5));

    sc.faults.push_back(spec(FaultKind::noise, {0}, 1.0, 100, 200));
    CHECK_THROWS_AS(inject_scenario(clean, sc, kStd), UsageError);
}

TEST_CASE("injection commutes with scaling") {
    const auto raw = base(500, 4, 3);
    auto shifted = raw;
    for (std::size_t t = 0; t < 500; ++t)
        for (std::size_t c = 0; c < 4; ++c) shifted.samples(t, c) = 40.0 * raw.at(t, c) - 7.0 * double(c);
    const Scaler scaler = Scaler::fit(shifted, {0, 500});
    const std::vector<double> raw_std = {4.0, 2.0, 8.0, 1.0};
    std::vector<double> scaled_std;
    for (std::size_t c = 0; c < 4; ++c) scaled_std.push_back(raw_std[c] / scaler.span_of(c));

    for (auto kind : {FaultKind::bias, FaultKind::drift, FaultKind::noise}) {
        auto s = spec(kind, {1, 2}, 1.5, 100, 300);
        s.seed = 4;
        const auto via_raw = scaler.transform(inject(shifted, s, raw_std).series);
        const auto via_scaled = inject(scaler.transform(shifted), s, scaled_std).series;
        for (std::size_t t = 0; t < 500; ++t)
            for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(via_raw.at(t, c) - via_scaled.at(t, c)) < 1e-9);
    }

    FaultScenario absolute{"abs", {spec(FaultKind::multi_bias, {0, 3}, 5.0, 100, 300)}};
    absolute.faults[0].unit = FaultUnit::absolute;
    const auto converted = to_scaled_units(absolute, scaler);
    REQUIRE(converted.faults.size() == 2);
    CHECK(converted.faults[0].kind == FaultKind::bias);
    CHECK(converted.faults[1].targets == std::vector<std::size_t>{3});
    CHECK(converted.faults[0].magnitude == doctest::Approx(5.0 / scaler.span_of(0)));
    const auto via_raw = scaler.transform(inject_scenario(shifted, absolute, raw_std).series);
    const auto via_scaled = inject_scenario(scaler.transform(shifted), converted, scaled_std).series;
    for (std::size_t t = 0; t < 500; ++t)
        for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(via_raw.at(t, c) - via_scaled.at(t, c)) < 1e-9);

    absolute.faults[0].targets = {0, 9};
    CHECK_THROWS_AS(to_scaled_units(absolute, scaler), DimensionError);
}

TEST_CASE("scenario json") {
    const std::vector<std::string> names = {"a", "b", "c"};
    const auto j = nlohmann::json::parse(R"({"label": "x", "faults": [
        {"kind": "multi_bias", "targets": ["a", 2], "magnitude": 0.5, "start": 3, "end": 9},
        {"kind": "noise", "targets": ["b"], "magnitude": 1, "unit": "absolute", "start": 0, "end": 4, "seed": 5}]})");
    const auto sc = scenario_from_json(j, names);
    CHECK(sc.label == "x");
    REQUIRE(sc.faults.size() == 2);
    CHECK(sc.faults[0].targets == std::vector<std::size_t>{0, 2});
    CHECK(sc.faults[0].end_index == 9);
    CHECK(sc.faults[1].unit == FaultUnit::absolute);
    CHECK(sc.faults[1].seed == 5);
    CHECK(scenario_from_json(to_json(sc, names), names).faults[1].magnitude == 1.0);

    const auto message = [&](const char* text) {
        try {
            scenario_from_json(nlohmann::json::parse(text), names);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message(R"({"faults": []})").find("scenario.faults") != std::string::npos);
    CHECK(message(R"({"faults": [{"kind": "bias", "targets": ["a"], "magnitude": 1, "start": 0}]})")
              .find("end: required") != std::string::npos);
    CHECK(message(R"({"faults": [{"kind": "bias", "targets": ["zz"], "magnitude": 1, "start": 0, "end": 2}]})")
              .find("'zz' not found") != std::string::npos);
    CHECK(message(R"({"faults": [{"kind": "spike", "targets": [0], "magnitude": 1, "start": 0, "end": 2}]})") !=
          "no error");
    CHECK(message(R"({"faults": [{"kind": "bias", "targets": [0], "magnitude": 1, "start": 4, "end": 2}]})")
              .find("start must be < end") != std::string::npos);
    CHECK_THROWS_AS(load_scenario(test::fixture("nope.json"), names), ConfigError);
}

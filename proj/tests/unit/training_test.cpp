#include "helpers.hpp"

#include "maskfdia/error.hpp"
#include "maskfdia/training.hpp"

#include <doctest.h>

#include <cmath>

using namespace maskfdia;

namespace {

struct Split {
    TimeSeriesDataset train;
    TimeSeriesDataset validation;
};

Split plant_split(PlantConfig cfg) {
    const auto raw = synthesize_plant(cfg);
    const std::size_t cut = raw.length() * 8 / 10;
    const Scaler scaler = Scaler::fit(raw, {0, cut});
    Split s{scaler.transform(raw.slice({0, cut})), scaler.transform(raw.slice({cut, raw.length()}))};
    s.train.channel_stats = compute_channel_stats(s.train, {0, s.train.length()});
    return s;
}

TrainConfig small_config(Formulation f, std::size_t epochs, std::uint64_t seed) {
    TrainConfig c;
    c.formulation = f;
    c.epochs = epochs;
    c.T = 9;
    c.seed = seed;
    c.hidden = f == Formulation::auto_associative ? std::vector<std::size_t>{32, 2} : std::vector<std::size_t>{32};
    return c;
}

}  // namespace

TEST_CASE("zero epochs returns the initialized model and no history") {
    PlantConfig p;
    p.length = 1500;
    const auto s = plant_split(p);
    const auto cfg = small_config(Formulation::masked, 0, 4);
    const auto r = train_model(s.train, s.validation, cfg);
    CHECK(r.report.train_loss.empty());
    CHECK(r.report.validation_loss.empty());
    const SequenceModel fresh = make_model(8, cfg);
    for (std::size_t k = 0; k < fresh.parameters().size(); ++k) CHECK(r.model.parameters()[k] == fresh.parameters()[k]);
}

TEST_CASE("training is deterministic under the seed") {
    PlantConfig p;
    p.length = 1500;
    const auto s = plant_split(p);
    for (auto f : {Formulation::masked, Formulation::auto_regressive, Formulation::auto_associative}) {
        const auto cfg = small_config(f, 2, 9);
        const auto a = train_model(s.train, s.validation, cfg);
        const auto b = train_model(s.train, s.validation, cfg);
        CHECK(a.report.train_loss == b.report.train_loss);
        CHECK(a.report.validation_loss == b.report.validation_loss);
        CHECK(to_json(a.report) == to_json(b.report));
        for (std::size_t k = 0; k < a.model.parameters().size(); ++k)
            CHECK(a.model.parameters()[k] == b.model.parameters()[k]);
    }
}

TEST_CASE("all formulations consume the same window stream") {
    PlantConfig p;
    p.length = 1500;
    const auto s = plant_split(p);
    const auto masked = train_model(s.train, s.validation, small_config(Formulation::masked, 2, 3));
    const auto ar = train_model(s.train, s.validation, small_config(Formulation::auto_regressive, 2, 3));
    const auto ae = train_model(s.train, s.validation, small_config(Formulation::auto_associative, 2, 3));
    CHECK(masked.report.window_stream_digest == ar.report.window_stream_digest);
    CHECK(masked.report.window_stream_digest == ae.report.window_stream_digest);
    CHECK(masked.report.optimizer_steps == ar.report.optimizer_steps);
    const auto other = train_model(s.train, s.validation, small_config(Formulation::masked, 2, 4));
    CHECK(masked.report.window_stream_digest != other.report.window_stream_digest);
}

TEST_CASE("masked training converges on the fully coupled plant") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        PlantConfig p;
        p.length = 5000;
        p.seed = seed;
        p.coupling_strength = 1.0;
        const auto s = plant_split(p);
        auto cfg = small_config(Formulation::masked, 30, seed);
        cfg.T = 19;
        cfg.hidden = {64};
        const auto r = train_model(s.train, s.validation, cfg);
        CAPTURE(seed);
        REQUIRE(r.report.validation_loss.size() == 30);
        CHECK(r.report.validation_loss.back() < 0.25 * r.report.validation_loss.front());
        for (double v : r.report.train_loss) CHECK(std::isfinite(v));
    }
}

TEST_CASE("per-sequence masked batch gradients ignore unselected outputs") {
    PlantConfig p;
    p.length = 1200;
    const auto s = plant_split(p);
    const auto cfg = small_config(Formulation::masked, 1, 2);
    const SequenceModel model = make_model(8, cfg);
    Rng rng(5);
    const std::size_t starts[] = {10, 300, 520};
    const MaskedBatch batch = assemble_masked_batch(model, s.train, starts, 1, FillPolicy::uniform_random,
                                                    s.train.channel_stats, rng);
    REQUIRE(batch.masks.size() == 3);
    double loss = 0.0;
    const auto grads = masked_batch_gradients(model, batch, loss);
    CHECK(loss > 0.0);
    const Tensor& gw = grads[grads.size() - 2];
    const Tensor& gb = grads.back();
    std::size_t zero_columns = 0;
    for (std::size_t j = 0; j < model.output_width(); ++j) {
        bool used = false;
        for (std::size_t b = 0; b < 3; ++b) used |= batch.selection(b, j) != 0.0;
        if (used) continue;
        ++zero_columns;
        CHECK(gb[j] == 0.0);
        for (std::size_t i = 0; i < gw.rows(); ++i) CHECK(gw(i, j) == 0.0);
    }
    CHECK(zero_columns >= model.output_width() - 3 * (cfg.T + 1));
}

TEST_CASE("memorizes a 100-sample series") {
    Rng rng(6);
    auto ds = test::random_dataset(100, 3, rng);
    ds.channel_stats = compute_channel_stats(ds, {0, 100});
    auto cfg = small_config(Formulation::auto_regressive, 2000, 6);
    cfg.T = 9;
    cfg.hidden = {256};
    cfg.learning_rate = 3e-3;
    cfg.batch_size = 91;
    const auto r = train_model(ds, ds, cfg);
    CHECK(r.report.train_loss.back() < 1e-4);
}

TEST_CASE("auto-regressive baseline on a noiseless, fully coupled plant") {
    PlantConfig p;
    p.length = 4000;
    p.noise_std = 0.0;
    p.coupling_strength = 1.0;
    p.seed = 8;
    const auto s = plant_split(p);
    auto cfg = small_config(Formulation::auto_regressive, 30, 8);
    const auto r = train_model(s.train, s.validation, cfg);
    CHECK(r.report.validation_loss.back() < 1e-3);
}

TEST_CASE("autoencoder with a rank-matched bottleneck") {
    PlantConfig p;
    p.length = 4000;
    p.noise_std = 0.0;
    p.coupling_strength = 1.0;
    p.shared_modes = 2;
    p.seed = 9;
    const auto s = plant_split(p);
    auto cfg = small_config(Formulation::auto_associative, 40, 9);
    const auto trained = train_model(s.train, s.validation, cfg);
    auto untrained_cfg = cfg;
    untrained_cfg.epochs = 1;
    const auto one = train_model(s.train, s.validation, untrained_cfg);
    CHECK(trained.report.validation_loss.back() < 2e-3);
    CHECK(trained.report.validation_loss.back() < one.report.validation_loss.front());
}

TEST_CASE("trained masked model reads the mask indicator") {
    PlantConfig p;
    p.length = 3000;
    const auto s = plant_split(p);
    auto cfg = small_config(Formulation::masked, 10, 10);
    const auto r = train_model(s.train, s.validation, cfg);
    const Window w = window_at(s.validation, 0, cfg.T);
    Window filled = w;
    for (std::size_t t = 0; t <= cfg.T; ++t) filled.values(t, 3) = s.train.channel_stats[3].mean;
    std::vector<double> with(r.model.input_width()), without(r.model.input_width());
    const std::size_t mask3[] = {3};
    r.model.encode_masked(filled.values, mask3, with);
    r.model.encode_masked(filled.values, {}, without);
    const Tensor a = r.model.forward(Tensor({1, with.size()}, with));
    const Tensor b = r.model.forward(Tensor({1, without.size()}, without));
    CHECK_FALSE(a == b);
}

TEST_CASE("non-finite loss aborts with diagnostics") {
    PlantConfig p;
    p.length = 1200;
    auto s = plant_split(p);
    s.train.samples(100, 2) = NAN;
    try {
        train_model(s.train, s.validation, small_config(Formulation::masked, 1, 1));
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
}

TEST_CASE("config validation names the field") {
    TrainConfig c;
    c.learning_rate = 0;
    try {
        validate(c);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).rfind("train.learning_rate", 0) == 0);
    }
}

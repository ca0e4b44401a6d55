#include "maskfdia/data.hpp"
#include "maskfdia/error.hpp"
#include "maskfdia/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace maskfdia {
namespace {

constexpr std::size_t kSinusoidsPerSignal = 3;
// Periods between ~25 and ~500 samples: slow next to a window, fast next to the series.
constexpr double kShortestPeriod = 25.0;
constexpr double kLongestPeriod = 500.0;
// Local disturbance: many tones with periods of 2 to 25 samples. Too rich for a
// short linear predictor to extrapolate, short-lived next to a window.
constexpr std::size_t kDisturbanceTones = 200;
constexpr double kDisturbanceShortestPeriod = 2.0;
// Variance share of the slow part inside a channel's private signal.
constexpr double kSlowPrivateShare = 0.3;

void standardize(std::vector<double>& signal) {
    double mean = 0.0;
    for (double v : signal) mean += v;
    mean /= static_cast<double>(signal.size());
    double sq = 0.0;
    for (double v : signal) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / static_cast<double>(signal.size()));
    for (double& v : signal) v = sd > 0.0 ? (v - mean) / sd : 0.0;
}

}  // namespace

TimeSeriesDataset synthesize_plant(const PlantConfig& config) {
    if (config.n_channels < 4) throw UsageError("synthesize_plant: n_channels must be >= 4");
    if (config.length < 1000) throw UsageError("synthesize_plant: length must be >= 1000");
    if (!(config.coupling_strength >= 0.0 && config.coupling_strength <= 1.0)) {
        throw UsageError("synthesize_plant: coupling_strength must lie in [0, 1]");
    }
    if (!(config.noise_std >= 0.0) || !std::isfinite(config.noise_std)) {
        throw UsageError("synthesize_plant: noise_std must be finite and >= 0");
    }
    if (!(config.sample_rate_hz > 0.0)) throw UsageError("synthesize_plant: sample_rate_hz must be positive");

    if (config.shared_modes == 0 || config.shared_modes >= config.n_channels) {
        throw UsageError("synthesize_plant: shared_modes must lie in [1, n_channels)");
    }

    const std::size_t n = config.n_channels;
    const std::size_t len = config.length;
    const std::size_t modes = config.shared_modes;
    const std::size_t signals = modes + n;  // shared modes, then one slow private signal per channel

    Rng structure_rng(derive_seed(config.seed, 0));
    Rng noise_rng(derive_seed(config.seed, 1));
    Rng disturbance_rng(derive_seed(config.seed, 2));

    // Every slow sinusoid gets its own Fourier bin of the full series, so
    // distinct slow signals are exactly orthogonal over the record.
    const auto lo_bin = static_cast<std::size_t>(std::ceil(static_cast<double>(len) / kLongestPeriod));
    const auto hi_bin = static_cast<std::size_t>(std::floor(static_cast<double>(len) / kShortestPeriod));
    std::vector<std::size_t> bins;
    for (std::size_t b = std::max<std::size_t>(lo_bin, 1); b <= hi_bin; ++b) bins.push_back(b);
    const std::size_t needed = signals * kSinusoidsPerSignal;
    if (bins.size() < needed) throw UsageError("synthesize_plant: series too short for the requested channel count");
    for (std::size_t i = 0; i < needed; ++i) {
        std::swap(bins[i], bins[i + structure_rng.uniform_index(bins.size() - i)]);
    }

    std::vector<std::vector<double>> latent(signals, std::vector<double>(len));
    for (std::size_t s = 0; s < signals; ++s) {
        for (std::size_t j = 0; j < kSinusoidsPerSignal; ++j) {
            const double omega = 2.0 * std::numbers::pi * static_cast<double>(bins[s * kSinusoidsPerSignal + j]) /
                                 static_cast<double>(len);
            const double amplitude = structure_rng.uniform(0.5, 1.0);
            const double phase = structure_rng.uniform(0.0, 2.0 * std::numbers::pi);
            for (std::size_t t = 0; t < len; ++t) {
                latent[s][t] += amplitude * std::sin(omega * static_cast<double>(t) + phase);
            }
        }
        standardize(latent[s]);
    }

    // Mixing matrix G: n x modes, Gaussian entries.
    std::vector<double> coupling(n * modes);
    for (double& g : coupling) g = structure_rng.normal();
    std::vector<double> offsets(n);
    for (double& o : offsets) o = structure_rng.uniform(-2.0, 2.0);

    // channel i = sqrt(c) * shared_i + sqrt(1 - c) * private_i, every term standardized,
    // private_i = slow private sinusoids + fast local disturbance.
    const double c = config.coupling_strength;
    std::vector<double> values(len * n);
    std::vector<double> shared(len);
    std::vector<double> disturbance(len);
    std::vector<double> channel(len);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(shared.begin(), shared.end(), 0.0);
        for (std::size_t k = 0; k < modes; ++k) {
            const double g = coupling[i * modes + k];
            for (std::size_t t = 0; t < len; ++t) shared[t] += g * latent[k][t];
        }
        standardize(shared);

        std::fill(disturbance.begin(), disturbance.end(), 0.0);
        if (c < 1.0) {
            for (std::size_t j = 0; j < kDisturbanceTones; ++j) {
                const double omega = 2.0 * std::numbers::pi *
                                     disturbance_rng.uniform(1.0 / kShortestPeriod, 1.0 / kDisturbanceShortestPeriod);
                const double amplitude = disturbance_rng.uniform(0.5, 1.0);
                const double phase = disturbance_rng.uniform(0.0, 2.0 * std::numbers::pi);
                for (std::size_t t = 0; t < len; ++t) {
                    disturbance[t] += amplitude * std::sin(omega * static_cast<double>(t) + phase);
                }
            }
            standardize(disturbance);
        }

        const auto& slow = latent[modes + i];
        const double a = std::sqrt(kSlowPrivateShare);
        const double b = std::sqrt(1.0 - kSlowPrivateShare);
        for (std::size_t t = 0; t < len; ++t) channel[t] = a * slow[t] + b * disturbance[t];
        standardize(channel);
        for (std::size_t t = 0; t < len; ++t) channel[t] = std::sqrt(c) * shared[t] + std::sqrt(1.0 - c) * channel[t];
        standardize(channel);
        for (std::size_t t = 0; t < len; ++t) values[t * n + i] = offsets[i] + channel[t];
    }
    if (config.noise_std > 0.0) {
        for (double& v : values) v += config.noise_std * noise_rng.normal();
    }

    TimeSeriesDataset ds;
    for (std::size_t i = 0; i < n; ++i) ds.channel_names.push_back("s" + std::to_string(i));
    ds.samples = Tensor({len, n}, std::move(values));
    ds.sample_rate_hz = config.sample_rate_hz;
    return ds;
}

}  // namespace maskfdia

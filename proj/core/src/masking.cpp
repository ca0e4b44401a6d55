#include "maskfdia/masking.hpp"

#include "maskfdia/error.hpp"

#include <algorithm>

namespace maskfdia {

std::string to_string(FillPolicy policy) {
    return policy == FillPolicy::uniform_random ? "uniform_random" : "channel_mean";
}

FillPolicy fill_policy_from_string(const std::string& name) {
    if (name == "uniform_random") return FillPolicy::uniform_random;
    if (name == "channel_mean") return FillPolicy::channel_mean;
    throw UsageError("unknown fill policy '" + name + "' (expected uniform_random or channel_mean)");
}

MaskableChannelSet::MaskableChannelSet(std::size_t n_channels, std::vector<std::size_t> indices)
    : n_channels_(n_channels), indices_(std::move(indices)) {
    if (indices_.empty()) throw UsageError("maskable channel set is empty");
    std::vector<std::size_t> sorted = indices_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw UsageError("maskable channel set has duplicates");
    }
    if (sorted.back() >= n_channels_) throw UsageError("maskable channel index out of range");
}

MaskableChannelSet MaskableChannelSet::all(std::size_t n_channels) {
    std::vector<std::size_t> idx(n_channels);
    for (std::size_t i = 0; i < n_channels; ++i) idx[i] = i;
    return {n_channels, std::move(idx)};
}

std::optional<std::size_t> MaskableChannelSet::position_of(std::size_t channel) const {
    auto it = std::find(indices_.begin(), indices_.end(), channel);
    if (it == indices_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - indices_.begin());
}

std::size_t max_masked_channels(std::size_t n_maskable) {
    return std::max<std::size_t>(1, (2 * n_maskable) / 10);
}

std::size_t sample_mask_count(std::size_t n_maskable, Rng& rng) {
    if (n_maskable < 1) throw UsageError("sample_mask: need at least one maskable channel");
    return 1 + rng.uniform_index(max_masked_channels(n_maskable));
}

std::vector<std::size_t> sample_channels(const MaskableChannelSet& maskable, std::size_t count, Rng& rng) {
    if (count > maskable.size()) throw UsageError("sample_channels: more channels requested than maskable");
    std::vector<std::size_t> pool = maskable.indices();
    for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

MaskSpec sample_mask(const MaskableChannelSet& maskable, Rng& rng, FillPolicy policy) {
    const std::size_t count = sample_mask_count(maskable.size(), rng);
    MaskSpec spec;
    spec.masked_channels = sample_channels(maskable, count, rng);
    spec.fill_policy = policy;
    spec.rng_seed = rng.next_u64();
    return spec;
}

MaskSpec sample_mask(std::size_t n_maskable, Rng& rng) {
    return sample_mask(MaskableChannelSet::all(n_maskable), rng);
}

void fill_masked(std::span<double> values, std::size_t n_channels, std::span<const std::size_t> masked_channels,
                 FillPolicy policy, std::span<const ChannelStats> stats, Rng& rng) {
    if (n_channels == 0 || values.size() % n_channels != 0) throw DimensionError("fill_masked: bad block shape");
    const std::size_t rows = values.size() / n_channels;
    for (std::size_t c : masked_channels) {
        if (c >= n_channels || c >= stats.size()) throw DimensionError("fill_masked: masked channel out of range");
    }
    // Row-major sweep so the random draws are consumed in a fixed order.
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t c : masked_channels) {
            const ChannelStats& s = stats[c];
            values[t * n_channels + c] =
                policy == FillPolicy::uniform_random ? rng.uniform(s.min, s.max) : s.mean;
        }
    }
}

Window apply_mask(const Window& window, const MaskSpec& mask, std::span<const ChannelStats> stats, Rng& rng) {
    Window out = window;
    fill_masked(out.values.values(), out.n_channels(), mask.masked_channels, mask.fill_policy, stats, rng);
    return out;
}

Window apply_mask(const Window& window, const MaskSpec& mask, std::span<const ChannelStats> stats) {
    Rng rng(mask.rng_seed);
    return apply_mask(window, mask, stats, rng);
}

}  // namespace maskfdia

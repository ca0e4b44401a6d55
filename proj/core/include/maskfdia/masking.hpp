#pragma once

#include "maskfdia/data.hpp"
#include "maskfdia/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace maskfdia {

enum class FillPolicy { uniform_random, channel_mean };

std::string to_string(FillPolicy policy);
FillPolicy fill_policy_from_string(const std::string& name);

/// Channels hidden for one training or inference pass.
struct MaskSpec {
    std::vector<std::size_t> masked_channels;  // dataset channel indices, ascending
    FillPolicy fill_policy = FillPolicy::uniform_random;
    std::uint64_t rng_seed = 0;
};

/// Channels eligible for masking (the FDIA targets). The remaining channels
/// are auxiliary inputs that are never masked or predicted.
class MaskableChannelSet {
public:
    MaskableChannelSet() = default;
    MaskableChannelSet(std::size_t n_channels, std::vector<std::size_t> indices);
    static MaskableChannelSet all(std::size_t n_channels);

    std::size_t n_channels() const { return n_channels_; }
    std::size_t size() const { return indices_.size(); }
    const std::vector<std::size_t>& indices() const { return indices_; }
    std::size_t operator[](std::size_t position) const { return indices_[position]; }
    bool contains(std::size_t channel) const { return position_of(channel).has_value(); }
    /// Position of a dataset channel within the maskable list.
    std::optional<std::size_t> position_of(std::size_t channel) const;

private:
    std::size_t n_channels_ = 0;
    std::vector<std::size_t> indices_;
};

/// Largest number of channels masked at once: max(1, floor(0.2 * n_maskable)).
std::size_t max_masked_channels(std::size_t n_maskable);

/// c_m uniform on {1, ..., max_masked_channels(n_maskable)}.
std::size_t sample_mask_count(std::size_t n_maskable, Rng& rng);

/// `count` distinct maskable channels, uniformly without replacement, returned ascending.
std::vector<std::size_t> sample_channels(const MaskableChannelSet& maskable, std::size_t count, Rng& rng);

/// Draws c_m, then c_m channels. Positions are 0..n_maskable-1 when
/// `maskable` is all channels.
MaskSpec sample_mask(const MaskableChannelSet& maskable, Rng& rng,
                     FillPolicy policy = FillPolicy::uniform_random);
MaskSpec sample_mask(std::size_t n_maskable, Rng& rng);

/// Replaces every timestep of each masked channel. uniform_random draws
/// i.i.d. values in the channel's [min, max] from `stats`; channel_mean
/// writes the channel's mean. Other channels are copied unchanged.
Window apply_mask(const Window& window, const MaskSpec& mask, std::span<const ChannelStats> stats, Rng& rng);
/// Same, with the RNG seeded from mask.rng_seed.
Window apply_mask(const Window& window, const MaskSpec& mask, std::span<const ChannelStats> stats);

/// In-place variant over a (T+1) x n row-major block.
void fill_masked(std::span<double> values, std::size_t n_channels, std::span<const std::size_t> masked_channels,
                 FillPolicy policy, std::span<const ChannelStats> stats, Rng& rng);

}  // namespace maskfdia

#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "enscore/minicube.hpp"
#include "enscore/track.hpp"

namespace enscore {

// Value used for pixels never observed cloud-free in the context.
enum class Fallback {
    channel_mean,  // mean of the channel's unmasked context values (0.5 if none)
    mid_gray,      // constant 0.5
};

struct PersistenceConfig {
    Fallback fallback{Fallback::channel_mean};
};

std::string_view to_string(Fallback fallback);
PersistenceConfig persistence_config_from_json(const nlohmann::json& j);

struct PersistenceResult {
    FloatTensor prediction;          // (target_frames, c, h, w)
    std::size_t fallback_pixels{0};  // (channel, pixel) series that used the fallback
};

// Per pixel and channel, the mean of unmasked context values repeated over
// `target_frames` frames.
PersistenceResult persistence_forecast(ConstView<float> context, ConstView<std::uint8_t> context_mask,
                                       std::size_t target_frames, const PersistenceConfig& cfg = {});

inline FloatTensor persistence_predict(ConstView<float> context, ConstView<std::uint8_t> context_mask,
                                       std::size_t target_frames, const PersistenceConfig& cfg = {}) {
    return persistence_forecast(context, context_mask, target_frames, cfg).prediction;
}

// Writes one single-member out_dir/<cube_id>.pred.zip per cube in test_dir.
// Returns the number of cubes processed.
std::size_t run_baseline(const std::filesystem::path& test_dir, const std::filesystem::path& out_dir,
                         const TrackSpec& spec, const PersistenceConfig& cfg = {}, std::size_t workers = 1);

}  // namespace enscore

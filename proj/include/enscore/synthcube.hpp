#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "enscore/minicube.hpp"
#include "enscore/track.hpp"

namespace enscore {

// Deterministic generator knobs. Spatial sizes default to the full cube
// geometry; tests shrink them.
struct SynthConfig {
    std::uint64_t seed{0};
    std::size_t n_cubes{16};
    TrackSpec track{TrackSpec::of(Track::iid)};
    double cloud_cover_mean{0.15};
    double seasonal_amplitude{0.2};
    double noise_sd{0.01};
    std::size_t hires_size{128};
    std::size_t meso_size{80};
    std::size_t cubes_per_tile{4};
};

SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base = {});
void validate(const SynthConfig& cfg);

// Cube `index` of the synthetic dataset. Depends only on (cfg, index).
Minicube synthesize_cube(const SynthConfig& cfg, std::size_t index);

// Writes cfg.n_cubes archives (<cube_id>.mc.zip) plus manifest.json into
// out_dir and returns their metadata sorted by cube_id.
std::vector<CubeMetadata> generate_cubes(const SynthConfig& cfg, const std::filesystem::path& out_dir,
                                         std::size_t workers = 1);

inline constexpr std::string_view kManifestName = "manifest.json";

void write_manifest(std::span<const CubeMetadata> records, const std::filesystem::path& path);
std::vector<CubeMetadata> read_manifest(const std::filesystem::path& path);

struct StratumKey {
    int month{1};
    LatitudeBand band{LatitudeBand::north};

    auto operator<=>(const StratumKey&) const = default;
};

std::string to_string(const StratumKey& key);

struct SplitConfig {
    std::size_t target_count{0};
    std::vector<double> quality_thresholds;  // strictly descending in (0,1]
    std::map<StratumKey, std::size_t> quotas;
    double ood_tile_fraction{0.0};
    std::uint64_t seed{0};
    double iid_test_fraction{0.2};
};

SplitConfig split_config_from_json(const nlohmann::json& j);
void validate(const SplitConfig& cfg);

struct DatasetSplit {
    std::vector<std::string> train;     // sorted
    std::vector<std::string> iid_test;  // sorted
    std::vector<std::string> ood_test;  // sorted
};

nlohmann::json to_json(const DatasetSplit& split);

// Reserves OOD tiles, admits cubes stratum by stratum while loosening the
// quality threshold, then splits the admitted cubes into train and IID test.
// Throws InfeasibleQuotas when some stratum stays unfilled.
DatasetSplit split_dataset(std::span<const CubeMetadata> meta, const SplitConfig& cfg);

// Seeded Fisher-Yates order of `items`. Uses only mt19937_64 raw output, so
// the order is identical on every standard library.
template <typename T>
std::vector<T> seeded_order(std::vector<T> items, std::uint64_t seed);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);
// Seed of the within-stratum shuffle.
std::uint64_t stratum_seed(std::uint64_t seed, const StratumKey& key);
// Seed of the OOD tile shuffle.
std::uint64_t tile_seed(std::uint64_t seed);

namespace detail {
// Uniform integer in [0, bound) from raw 64-bit draws (rejection sampling).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound);
}  // namespace detail

template <typename T>
std::vector<T> seeded_order(std::vector<T> items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(detail::bounded(rng, i));
        std::swap(items[i - 1], items[j]);
    }
    return items;
}

}  // namespace enscore

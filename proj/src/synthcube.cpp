#include "enscore/synthcube.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include "enscore/errors.hpp"
#include "enscore/evaluator.hpp"
#include "enscore/parallel.hpp"

namespace enscore {

namespace detail {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace detail

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer over seed ^ salt.
    std::uint64_t z = seed ^ salt;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t stratum_seed(std::uint64_t seed, const StratumKey& key) {
    const std::uint64_t salt = 0x5354524154554d00ULL + static_cast<std::uint64_t>(key.month) * 2 +
                               (key.band == LatitudeBand::south ? 1 : 0);
    return mix_seed(seed, salt);
}

std::uint64_t tile_seed(std::uint64_t seed) { return mix_seed(seed, 0x54494c4553ULL); }

namespace {

constexpr std::uint64_t kTrainSplitSalt = 0x545241494eULL;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t below(std::uint64_t bound) { return detail::bounded(engine_, bound); }

    double normal() {
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(kTwoPi * u2);
        return r * std::cos(kTwoPi * u2);
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

float unit(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

std::string padded(const char* prefix, std::size_t value, int width) {
    std::ostringstream os;
    os << prefix << std::setw(width) << std::setfill('0') << value;
    return os.str();
}

// Smooth elevation field on the unit square, values inside (0,1).
struct Terrain {
    struct Bump {
        double cx, cy, amplitude, width;
    };
    std::vector<Bump> bumps;

    explicit Terrain(Rng& rng) {
        for (int k = 0; k < 4; ++k)
            bumps.push_back({rng.uniform(), rng.uniform(), rng.uniform(-0.12, 0.12), rng.uniform(0.1, 0.4)});
    }

    double at(double u, double v) const {
        double e = 0.5;
        for (const auto& b : bumps) {
            const double d2 = (u - b.cx) * (u - b.cx) + (v - b.cy) * (v - b.cy);
            e += b.amplitude * std::exp(-d2 / (2.0 * b.width * b.width));
        }
        return e;
    }
};

// Land-cover patches: nearest-centre partition with per-patch vegetation traits.
struct Patch {
    double cx, cy, base_ndvi, amplitude_factor, brightness;
};

}  // namespace

void validate(const SynthConfig& cfg) {
    if (!(cfg.cloud_cover_mean >= 0.0 && cfg.cloud_cover_mean <= 1.0))
        throw ConfigError("cloud_cover_mean must lie in [0,1]");
    if (!(cfg.noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
    if (!(cfg.seasonal_amplitude >= 0.0 && cfg.seasonal_amplitude <= 1.0))
        throw ConfigError("seasonal_amplitude must lie in [0,1]");
    if (cfg.hires_size == 0 || cfg.meso_size == 0) throw ConfigError("spatial sizes must be positive");
    if (cfg.cubes_per_tile == 0) throw ConfigError("cubes_per_tile must be positive");
    cfg.track.ols_windows();
}

SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig base) {
    if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
    try {
        if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("n_cubes")) base.n_cubes = j.at("n_cubes").get<std::size_t>();
        if (j.contains("track")) base.track = TrackSpec::parse(j.at("track").get<std::string>());
        if (j.contains("cloud_cover_mean")) base.cloud_cover_mean = j.at("cloud_cover_mean").get<double>();
        if (j.contains("seasonal_amplitude")) base.seasonal_amplitude = j.at("seasonal_amplitude").get<double>();
        if (j.contains("noise_sd")) base.noise_sd = j.at("noise_sd").get<double>();
        if (j.contains("hires_size")) base.hires_size = j.at("hires_size").get<std::size_t>();
        if (j.contains("meso_size")) base.meso_size = j.at("meso_size").get<std::size_t>();
        if (j.contains("cubes_per_tile")) base.cubes_per_tile = j.at("cubes_per_tile").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synth config: ") + e.what());
    }
    validate(base);
    return base;
}

Minicube synthesize_cube(const SynthConfig& cfg, std::size_t index) {
    validate(cfg);
    Rng rng(mix_seed(cfg.seed, index));

    const std::size_t frames = cfg.track.total_frames();
    const std::size_t days = kMesoDaysPerFrame * frames;
    const std::size_t hs = cfg.hires_size, ms = cfg.meso_size, area = hs * hs;

    CubeMetadata meta;
    meta.cube_id = padded("cube_", index, 6);
    meta.tile_id = padded("tile_", index / cfg.cubes_per_tile, 4);
    meta.start_month = 1 + static_cast<int>(rng.below(12));
    meta.latitude_band = rng.below(2) == 0 ? LatitudeBand::north : LatitudeBand::south;

    const double start_doy = (meta.start_month - 1) * 30.44 + (meta.latitude_band == LatitudeBand::south ? 182.6 : 0.0);
    auto season = [&](double day) { return std::sin(kTwoPi * (start_doy + day - 105.0) / 365.25); };

    // Topography.
    const Terrain terrain(rng);
    FloatTensor dem_hires({hs, hs});
    for (std::size_t y = 0; y < hs; ++y)
        for (std::size_t x = 0; x < hs; ++x)
            dem_hires[y * hs + x] = unit(terrain.at((x + 0.5) / hs, (y + 0.5) / hs));
    FloatTensor dem_meso({ms, ms});
    for (std::size_t y = 0; y < ms; ++y)
        for (std::size_t x = 0; x < ms; ++x) dem_meso[y * ms + x] = unit(terrain.at((x + 0.5) / ms, (y + 0.5) / ms));

    // Daily weather: AR(1) temperature and pressure anomalies shared across the
    // cube, seasonal temperature cycle, sparse precipitation.
    std::vector<double> temp_anomaly(days), pressure(days);
    double ta = 0.0, pa = 0.0;
    for (std::size_t d = 0; d < days; ++d) {
        ta = 0.9 * ta + 0.03 * rng.normal();
        pa = 0.95 * pa + 0.02 * rng.normal();
        temp_anomaly[d] = ta;
        pressure[d] = pa;
    }
    FloatTensor meso({days, kMesoChannels, ms, ms});
    const std::size_t marea = ms * ms;
    for (std::size_t d = 0; d < days; ++d) {
        const bool rain_day = rng.uniform() < 0.25;
        const double tg_base = 0.5 + 0.25 * season(static_cast<double>(d)) + temp_anomaly[d];
        for (std::size_t c = 0; c < marea; ++c) {
            const double elev = dem_meso[c];
            const double tg = tg_base - 0.2 * (elev - 0.5);
            const double rr = rain_day && rng.uniform() < 0.6 ? rng.uniform(0.0, 0.8) : 0.0;
            meso.at(d, kRR, c / ms, c % ms) = unit(rr);
            meso.at(d, kPP, c / ms, c % ms) = unit(0.5 + pressure[d] - 0.1 * (elev - 0.5));
            meso.at(d, kTG, c / ms, c % ms) = unit(tg);
            meso.at(d, kTN, c / ms, c % ms) = unit(tg - 0.08);
            meso.at(d, kTX, c / ms, c % ms) = unit(tg + 0.08);
        }
    }

    // Vegetation state per frame responds to the temperature anomaly of the
    // preceding two weeks (heat suppresses greenness).
    std::vector<double> lagged(frames, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t end = kMesoDaysPerFrame * f;  // exclusive: days before the frame
        const std::size_t begin = end >= 15 ? end - 15 : 0;
        double s = 0.0;
        for (std::size_t d = begin; d < end; ++d) s += temp_anomaly[d];
        lagged[f] = end > begin ? s / static_cast<double>(end - begin) : 0.0;
    }

    std::vector<Patch> patches;
    for (int k = 0; k < 6; ++k)
        patches.push_back({rng.uniform(), rng.uniform(), rng.uniform(0.2, 0.7), rng.uniform(0.5, 1.0),
                           rng.uniform(0.12, 0.3)});
    std::vector<std::size_t> patch_of(area);
    std::vector<double> pixel_offset(area);
    for (std::size_t p = 0; p < area; ++p) {
        const double u = ((p % hs) + 0.5) / hs, v = ((p / hs) + 0.5) / hs;
        double best = std::numeric_limits<double>::max();
        for (std::size_t k = 0; k < patches.size(); ++k) {
            const double d2 = (u - patches[k].cx) * (u - patches[k].cx) + (v - patches[k].cy) * (v - patches[k].cy);
            if (d2 < best) {
                best = d2;
                patch_of[p] = k;
            }
        }
        pixel_offset[p] = 0.02 * rng.normal();
    }

    FloatTensor hires({frames, kSpectralChannels, hs, hs});
    MaskTensor mask({frames, kSpectralChannels, hs, hs});
    std::vector<std::uint8_t> cloud(area);
    for (std::size_t f = 0; f < frames; ++f) {
        const double day = static_cast<double>(kMesoDaysPerFrame * f + kMesoDaysPerFrame - 1);
        for (std::size_t p = 0; p < area; ++p) {
            const auto& patch = patches[patch_of[p]];
            const double ndvi_value = std::clamp(patch.base_ndvi + pixel_offset[p] +
                                                     cfg.seasonal_amplitude * patch.amplitude_factor * season(day) -
                                                     1.2 * lagged[f],
                                                 -0.1, 0.9);
            const double b = patch.brightness + 0.05 * (dem_hires[p] - 0.5);
            const double red = b * (1.0 - ndvi_value);
            const double nir = b * (1.0 + ndvi_value);
            const double blue = 0.6 * red + 0.02;
            const double green = 0.7 * red + 0.1 * nir;
            const std::size_t y = p / hs, x = p % hs;
            hires.at(f, kBlue, y, x) = unit(blue + cfg.noise_sd * rng.normal());
            hires.at(f, kGreen, y, x) = unit(green + cfg.noise_sd * rng.normal());
            hires.at(f, kRed, y, x) = unit(red + cfg.noise_sd * rng.normal());
            hires.at(f, kNir, y, x) = unit(nir + cfg.noise_sd * rng.normal());
        }

        // Cumulus-like clouds: random rectangles until the frame's target cover is reached.
        std::fill(cloud.begin(), cloud.end(), 0);
        if (cfg.cloud_cover_mean > 0.0) {
            const double cover = std::min(0.95, cfg.cloud_cover_mean * 2.0 * rng.uniform());
            const std::size_t lo = std::max<std::size_t>(1, hs / 8), hi = std::max<std::size_t>(lo, hs / 3);
            std::size_t clouded = 0;
            for (int attempt = 0; attempt < 500 && static_cast<double>(clouded) < cover * static_cast<double>(area);
                 ++attempt) {
                const std::size_t rw = lo + rng.below(hi - lo + 1), rh = lo + rng.below(hi - lo + 1);
                const std::size_t x0 = rng.below(hs), y0 = rng.below(hs);
                for (std::size_t y = y0; y < std::min(hs, y0 + rh); ++y)
                    for (std::size_t x = x0; x < std::min(hs, x0 + rw); ++x)
                        if (!cloud[y * hs + x]) {
                            cloud[y * hs + x] = 1;
                            ++clouded;
                        }
            }
        }
        for (std::size_t p = 0; p < area; ++p) {
            if (!cloud[p]) continue;
            const std::size_t y = p / hs, x = p % hs;
            const double brightness = 0.75 + 0.1 * rng.uniform();
            for (std::size_t c = 0; c < kSpectralChannels; ++c) {
                mask.at(f, c, y, x) = 1;
                hires.at(f, c, y, x) = unit(brightness);
            }
        }
    }

    meta.quality_fraction = quality_fraction(mask);
    return Minicube(std::move(hires), std::move(mask), std::move(meso), std::move(dem_hires), std::move(dem_meso),
                    std::move(meta));
}

std::vector<CubeMetadata> generate_cubes(const SynthConfig& cfg, const std::filesystem::path& out_dir,
                                         std::size_t workers) {
    validate(cfg);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    std::vector<CubeMetadata> records(cfg.n_cubes);
    parallel_for_static(cfg.n_cubes, workers, [&](std::size_t i) {
        const Minicube cube = synthesize_cube(cfg, i);
        save_minicube(cube, cube_path(out_dir, cube.meta().cube_id));
        records[i] = cube.meta();
    });
    write_manifest(records, out_dir / kManifestName);
    return records;
}

void write_manifest(std::span<const CubeMetadata> records, const std::filesystem::path& path) {
    std::vector<CubeMetadata> sorted(records.begin(), records.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.cube_id < b.cube_id; });
    const nlohmann::json doc = {{"cubes", sorted}};
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << doc.dump(2) << "\n";
    if (!os) throw IoError("write failed: " + path.string());
}

std::vector<CubeMetadata> read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    try {
        const auto doc = nlohmann::json::parse(is);
        return doc.at("cubes").get<std::vector<CubeMetadata>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string to_string(const StratumKey& key) {
    return std::to_string(key.month) + "/" + (key.band == LatitudeBand::north ? "north" : "south");
}

void validate(const SplitConfig& cfg) {
    if (cfg.quality_thresholds.empty()) throw ConfigError("quality_thresholds must not be empty");
    for (std::size_t i = 0; i < cfg.quality_thresholds.size(); ++i) {
        const double t = cfg.quality_thresholds[i];
        if (!(t > 0.0 && t <= 1.0)) throw ConfigError("quality thresholds must lie in (0,1]");
        if (i > 0 && !(t < cfg.quality_thresholds[i - 1]))
            throw ConfigError("quality thresholds must be strictly descending");
    }
    std::size_t total = 0;
    for (const auto& [key, quota] : cfg.quotas) {
        if (key.month < 1 || key.month > 12) throw ConfigError("stratum month out of range: " + to_string(key));
        total += quota;
    }
    if (total != cfg.target_count)
        throw ConfigError("stratum quotas sum to " + std::to_string(total) + ", target_count is " +
                          std::to_string(cfg.target_count));
    if (!(cfg.ood_tile_fraction >= 0.0 && cfg.ood_tile_fraction <= 1.0))
        throw ConfigError("ood_tile_fraction must lie in [0,1]");
    if (!(cfg.iid_test_fraction >= 0.0 && cfg.iid_test_fraction <= 1.0))
        throw ConfigError("iid_test_fraction must lie in [0,1]");
}

SplitConfig split_config_from_json(const nlohmann::json& j) {
    SplitConfig cfg;
    try {
        cfg.target_count = j.at("target_count").get<std::size_t>();
        cfg.quality_thresholds = j.at("quality_thresholds").get<std::vector<double>>();
        for (const auto& s : j.at("strata")) {
            const auto band = s.at("band").get<std::string>();
            if (band != "north" && band != "south") throw ConfigError("stratum band must be north or south");
            StratumKey key{s.at("month").get<int>(), band == "north" ? LatitudeBand::north : LatitudeBand::south};
            if (!cfg.quotas.emplace(key, s.at("quota").get<std::size_t>()).second)
                throw ConfigError("duplicate stratum " + to_string(key));
        }
        if (j.contains("ood_tile_fraction")) cfg.ood_tile_fraction = j.at("ood_tile_fraction").get<double>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("iid_test_fraction")) cfg.iid_test_fraction = j.at("iid_test_fraction").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("split config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

nlohmann::json to_json(const DatasetSplit& split) {
    return {{"train", split.train}, {"iid_test", split.iid_test}, {"ood_test", split.ood_test}};
}

DatasetSplit split_dataset(std::span<const CubeMetadata> meta, const SplitConfig& cfg) {
    validate(cfg);
    if (meta.empty()) throw ConfigError("split_dataset: empty metadata");

    std::vector<const CubeMetadata*> records;
    {
        std::set<std::string> ids;
        for (const auto& m : meta) {
            if (!ids.insert(m.cube_id).second) throw ConfigError("duplicate cube_id " + m.cube_id);
            records.push_back(&m);
        }
    }
    std::sort(records.begin(), records.end(), [](auto* a, auto* b) { return a->cube_id < b->cube_id; });

    // (1) Reserve spatially held-out tiles.
    std::set<std::string> tile_set;
    for (const auto* r : records) tile_set.insert(r->tile_id);
    const auto tiles = seeded_order(std::vector<std::string>(tile_set.begin(), tile_set.end()), tile_seed(cfg.seed));
    const auto n_ood = static_cast<std::size_t>(std::llround(cfg.ood_tile_fraction * static_cast<double>(tiles.size())));
    const std::set<std::string> ood_tiles(tiles.begin(), tiles.begin() + static_cast<std::ptrdiff_t>(n_ood));

    DatasetSplit split;
    std::map<StratumKey, std::vector<const CubeMetadata*>> by_stratum;
    for (const auto* r : records) {
        if (ood_tiles.contains(r->tile_id))
            split.ood_test.push_back(r->cube_id);
        else if (const StratumKey key{r->start_month, r->latitude_band}; cfg.quotas.contains(key))
            by_stratum[key].push_back(r);
    }
    for (auto& [key, candidates] : by_stratum) candidates = seeded_order(std::move(candidates), stratum_seed(cfg.seed, key));

    // (2) Loosen the quality threshold pass by pass; within a pass admit
    // round-robin over unfilled strata until no stratum can take another cube.
    std::vector<std::string> admitted;
    std::set<const CubeMetadata*> taken;
    std::map<StratumKey, std::size_t> filled;
    for (const double threshold : cfg.quality_thresholds) {
        std::map<StratumKey, std::size_t> cursor;
        bool progress = true;
        while (progress) {
            progress = false;
            for (const auto& [key, quota] : cfg.quotas) {
                if (filled[key] >= quota) continue;
                const auto it = by_stratum.find(key);
                if (it == by_stratum.end()) continue;
                auto& pos = cursor[key];
                const auto& candidates = it->second;
                while (pos < candidates.size() &&
                       (taken.contains(candidates[pos]) || candidates[pos]->quality_fraction < threshold))
                    ++pos;
                if (pos == candidates.size()) continue;
                taken.insert(candidates[pos]);
                admitted.push_back(candidates[pos]->cube_id);
                ++filled[key];
                progress = true;
            }
        }
    }

    std::vector<std::string> unfilled;
    for (const auto& [key, quota] : cfg.quotas)
        if (filled[key] < quota)
            unfilled.push_back(to_string(key) + " (" + std::to_string(filled[key]) + "/" + std::to_string(quota) + ")");
    if (!unfilled.empty()) throw InfeasibleQuotas(std::move(unfilled));

    // (3) Random train / IID-test partition of the admitted cubes.
    const auto shuffled = seeded_order(admitted, mix_seed(cfg.seed, kTrainSplitSalt));
    const auto n_iid = static_cast<std::size_t>(std::llround(cfg.iid_test_fraction * static_cast<double>(shuffled.size())));
    split.iid_test.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_iid));
    split.train.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_iid), shuffled.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.iid_test.begin(), split.iid_test.end());
    std::sort(split.ood_test.begin(), split.ood_test.end());
    return split;
}

}  // namespace enscore

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "enscore/tensor.hpp"
#include "enscore/track.hpp"

namespace enscore {

// Spectral channel order of hires tensors.
enum SpectralChannel : std::size_t { kBlue = 0, kGreen = 1, kRed = 2, kNir = 3, kSpectralChannels = 4 };
// Meteorological channel order of meso tensors.
enum MesoChannel : std::size_t { kRR = 0, kPP = 1, kTG = 2, kTN = 3, kTX = 4, kMesoChannels = 5 };

// Meteorology is daily while imagery is 5-daily.
inline constexpr std::size_t kMesoDaysPerFrame = 5;
inline constexpr std::size_t kMaxEnsembleMembers = 10;

enum class LatitudeBand { north, south };

struct CubeMetadata {
    std::string cube_id;
    std::string tile_id;
    int start_month{1};
    LatitudeBand latitude_band{LatitudeBand::north};
    double quality_fraction{1.0};

    bool operator==(const CubeMetadata&) const = default;
};

void to_json(nlohmann::json& j, const CubeMetadata& m);
void from_json(const nlohmann::json& j, CubeMetadata& m);

// 1 - (masked cells / total cells).
double quality_fraction(ConstView<std::uint8_t> mask);

// One sample. Construction validates every invariant (shapes, finiteness,
// [0,1] range, binary mask, meso length = 5 x hires length); the object is
// immutable afterwards.
class Minicube {
public:
    Minicube(FloatTensor hires, MaskTensor mask, FloatTensor meso, FloatTensor dem_hires,
             FloatTensor dem_meso, CubeMetadata meta);

    const FloatTensor& hires() const noexcept { return hires_; }
    const MaskTensor& mask() const noexcept { return mask_; }
    const FloatTensor& meso() const noexcept { return meso_; }
    const FloatTensor& dem_hires() const noexcept { return dem_hires_; }
    const FloatTensor& dem_meso() const noexcept { return dem_meso_; }
    const CubeMetadata& meta() const noexcept { return meta_; }

    std::size_t frames() const { return hires_.dim(0); }

    bool operator==(const Minicube&) const = default;

private:
    FloatTensor hires_;
    MaskTensor mask_;
    FloatTensor meso_;
    FloatTensor dem_hires_;
    FloatTensor dem_meso_;
    CubeMetadata meta_;
};

// Candidate forecasts for one cube, each shaped (t_target, 4, h, w).
struct PredictionSet {
    std::string cube_id;
    std::vector<FloatTensor> members;
    // Extra string fields stored alongside cube_id in meta.json (e.g. producer).
    std::map<std::string, std::string> attributes;
};

// Throws InvalidValue unless every element is finite and within [0,1].
void require_unit_range(ConstView<float> values, const std::string& name);
// Throws InvalidValue unless every element is 0 or 1.
void require_binary(ConstView<std::uint8_t> mask, const std::string& name);

Minicube load_minicube(const std::filesystem::path& path);
void save_minicube(const Minicube& cube, const std::filesystem::path& path);

PredictionSet load_prediction(const std::filesystem::path& path);
void save_prediction(const PredictionSet& prediction, const std::filesystem::path& path);

// Checks 1..10 members of identical (t,4,h,w) shape with values in [0,1].
void validate_prediction(const PredictionSet& prediction);

// Pixelwise (NIR - RED) / (NIR + RED) over a (t,c,h,w) tensor with c >= 4;
// 0 where NIR + RED == 0. Result is (t,h,w).
FloatTensor ndvi(ConstView<float> cube);

// 1 wherever the red or near-infrared mask is 1. Result is (t,h,w).
MaskTensor ndvi_mask(ConstView<std::uint8_t> mask);

struct CubeSplit {
    ConstView<float> context;
    ConstView<std::uint8_t> context_mask;
    ConstView<float> target;
    ConstView<std::uint8_t> target_mask;
};

// Views into `cube` partitioning its time axis into context then target.
// Throws GeometryMismatch unless context + target frames equal the cube length.
CubeSplit split_context_target(const Minicube& cube, const TrackSpec& spec);

}  // namespace enscore

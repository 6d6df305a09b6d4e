#include "enscore/minicube.hpp"

#include <algorithm>
#include <cmath>

#include "enscore/npy.hpp"
#include "enscore/zip.hpp"

namespace enscore {

namespace {

constexpr const char* kEntries[] = {"hires", "mask", "meso", "dem_hires", "dem_meso"};

void require_shape(const Shape& actual, const Shape& expected, const std::string& name) {
    if (actual != expected)
        throw ShapeMismatch(name + " has shape " + to_string(actual) + ", expected " + to_string(expected));
}

void require_rank(const Shape& shape, std::size_t rank, const std::string& name) {
    if (shape.size() != rank)
        throw ShapeMismatch(name + " has rank " + std::to_string(shape.size()) + ", expected " +
                            std::to_string(rank));
}

// Entries are stored under their bare names; NumPy-style "<name>.npy" is accepted too.
const std::string& find_entry(const std::map<std::string, std::string>& entries, const std::string& name) {
    if (auto it = entries.find(name); it != entries.end()) return it->second;
    if (auto it = entries.find(name + ".npy"); it != entries.end()) return it->second;
    throw MissingArray(name);
}

nlohmann::json parse_meta(const std::map<std::string, std::string>& entries) {
    const auto it = entries.find("meta.json");
    if (it == entries.end()) throw MissingArray("meta.json");
    try {
        return nlohmann::json::parse(it->second);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("meta.json: ") + e.what());
    }
}

}  // namespace

void to_json(nlohmann::json& j, const CubeMetadata& m) {
    j = nlohmann::json{{"cube_id", m.cube_id},
                       {"tile_id", m.tile_id},
                       {"start_month", m.start_month},
                       {"latitude_band", m.latitude_band == LatitudeBand::north ? "north" : "south"},
                       {"quality_fraction", m.quality_fraction}};
}

void from_json(const nlohmann::json& j, CubeMetadata& m) {
    try {
        m.cube_id = j.at("cube_id").get<std::string>();
        m.tile_id = j.at("tile_id").get<std::string>();
        m.start_month = j.at("start_month").get<int>();
        const auto band = j.at("latitude_band").get<std::string>();
        if (band == "north")
            m.latitude_band = LatitudeBand::north;
        else if (band == "south")
            m.latitude_band = LatitudeBand::south;
        else
            throw InvalidValue("latitude_band must be north or south, got " + band);
        m.quality_fraction = j.at("quality_fraction").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("cube metadata: ") + e.what());
    }
    if (m.start_month < 1 || m.start_month > 12)
        throw InvalidValue("start_month out of range: " + std::to_string(m.start_month));
    if (!(m.quality_fraction >= 0.0 && m.quality_fraction <= 1.0))
        throw InvalidValue("quality_fraction out of [0,1]");
}

double quality_fraction(ConstView<std::uint8_t> mask) {
    if (mask.size() == 0) return 1.0;
    const auto masked = std::count_if(mask.data().begin(), mask.data().end(), [](auto v) { return v != 0; });
    return 1.0 - static_cast<double>(masked) / static_cast<double>(mask.size());
}

void require_unit_range(ConstView<float> values, const std::string& name) {
    const auto data = values.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const float v = data[i];
        if (!std::isfinite(v))
            throw InvalidValue(name + " holds a non-finite value at flat index " + std::to_string(i));
        if (v < 0.0f || v > 1.0f)
            throw InvalidValue(name + " value " + std::to_string(v) + " outside [0,1] at flat index " +
                               std::to_string(i));
    }
}

void require_binary(ConstView<std::uint8_t> mask, const std::string& name) {
    const auto data = mask.data();
    for (std::size_t i = 0; i < data.size(); ++i)
        if (data[i] > 1)
            throw InvalidValue(name + " value " + std::to_string(data[i]) + " not in {0,1} at flat index " +
                               std::to_string(i));
}

Minicube::Minicube(FloatTensor hires, MaskTensor mask, FloatTensor meso, FloatTensor dem_hires,
                   FloatTensor dem_meso, CubeMetadata meta)
    : hires_(std::move(hires)),
      mask_(std::move(mask)),
      meso_(std::move(meso)),
      dem_hires_(std::move(dem_hires)),
      dem_meso_(std::move(dem_meso)),
      meta_(std::move(meta)) {
    require_rank(hires_.shape(), 4, "hires");
    require_rank(meso_.shape(), 4, "meso");
    require_rank(dem_hires_.shape(), 2, "dem_hires");
    require_rank(dem_meso_.shape(), 2, "dem_meso");

    const std::size_t t = hires_.dim(0), h = hires_.dim(2), w = hires_.dim(3);
    const std::size_t mh = meso_.dim(2), mw = meso_.dim(3);
    require_shape(hires_.shape(), {t, kSpectralChannels, h, w}, "hires");
    require_shape(mask_.shape(), hires_.shape(), "mask");
    require_shape(meso_.shape(), {kMesoDaysPerFrame * t, kMesoChannels, mh, mw}, "meso");
    require_shape(dem_hires_.shape(), {h, w}, "dem_hires");
    require_shape(dem_meso_.shape(), {mh, mw}, "dem_meso");

    require_unit_range(hires_, "hires");
    require_binary(mask_, "mask");
    require_unit_range(meso_, "meso");
    require_unit_range(dem_hires_, "dem_hires");
    require_unit_range(dem_meso_, "dem_meso");

    if (meta_.start_month < 1 || meta_.start_month > 12)
        throw InvalidValue("start_month out of range: " + std::to_string(meta_.start_month));
    if (!(meta_.quality_fraction >= 0.0 && meta_.quality_fraction <= 1.0))
        throw InvalidValue("quality_fraction out of [0,1]");
}

Minicube load_minicube(const std::filesystem::path& path) {
    const auto entries = zip::read_file(path);
    for (const char* name : kEntries) find_entry(entries, name);  // report missing keys first

    auto floats = [&](const char* name) {
        return npy::to_float_tensor(npy::decode(find_entry(entries, name), name), name);
    };
    auto hires = floats("hires");
    auto mask = npy::to_mask_tensor(npy::decode(find_entry(entries, "mask"), "mask"), "mask");
    auto meso = floats("meso");
    auto dem_hires = floats("dem_hires");
    auto dem_meso = floats("dem_meso");
    auto meta = parse_meta(entries).get<CubeMetadata>();
    return Minicube(std::move(hires), std::move(mask), std::move(meso), std::move(dem_hires),
                    std::move(dem_meso), std::move(meta));
}

void save_minicube(const Minicube& cube, const std::filesystem::path& path) {
    // A Minicube cannot exist in an invalid state, so all validation already
    // happened before any byte is written.
    zip::Writer writer;
    writer.add("hires", npy::encode(cube.hires()));
    writer.add("mask", npy::encode(cube.mask()));
    writer.add("meso", npy::encode(cube.meso()));
    writer.add("dem_hires", npy::encode(cube.dem_hires()));
    writer.add("dem_meso", npy::encode(cube.dem_meso()));
    writer.add("meta.json", nlohmann::json(cube.meta()).dump(2) + "\n");
    writer.write_to(path);
}

void validate_prediction(const PredictionSet& prediction) {
    const auto& members = prediction.members;
    if (members.empty() || members.size() > kMaxEnsembleMembers)
        throw InvalidValue("prediction for " + prediction.cube_id + " has " + std::to_string(members.size()) +
                           " members, expected 1.." + std::to_string(kMaxEnsembleMembers));
    for (std::size_t k = 0; k < members.size(); ++k) {
        const std::string name = "pred_" + std::to_string(k);
        require_rank(members[k].shape(), 4, name);
        if (members[k].dim(1) != kSpectralChannels)
            throw ShapeMismatch(name + " has " + std::to_string(members[k].dim(1)) + " channels, expected 4");
        require_shape(members[k].shape(), members[0].shape(), name);
        require_unit_range(members[k], name);
    }
}

PredictionSet load_prediction(const std::filesystem::path& path) {
    const auto entries = zip::read_file(path);
    const auto meta = parse_meta(entries);
    PredictionSet out;
    try {
        out.cube_id = meta.at("cube_id").get<std::string>();
        for (const auto& [key, value] : meta.items())
            if (key != "cube_id" && value.is_string()) out.attributes[key] = value.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": meta.json: " + e.what());
    }
    for (std::size_t k = 0; k < kMaxEnsembleMembers + 1; ++k) {
        const std::string name = "pred_" + std::to_string(k);
        if (!entries.contains(name) && !entries.contains(name + ".npy")) break;
        out.members.push_back(npy::to_float_tensor(npy::decode(find_entry(entries, name), name), name));
    }
    if (out.members.empty()) throw MissingArray("pred_0");
    validate_prediction(out);
    return out;
}

void save_prediction(const PredictionSet& prediction, const std::filesystem::path& path) {
    validate_prediction(prediction);
    zip::Writer writer;
    for (std::size_t k = 0; k < prediction.members.size(); ++k)
        writer.add("pred_" + std::to_string(k), npy::encode(prediction.members[k]));
    nlohmann::json meta = {{"cube_id", prediction.cube_id}};
    for (const auto& [key, value] : prediction.attributes) meta[key] = value;
    writer.add("meta.json", meta.dump(2) + "\n");
    writer.write_to(path);
}

FloatTensor ndvi(ConstView<float> cube) {
    if (cube.rank() != 4 || cube.dim(1) < 4)
        throw ShapeMismatch("ndvi needs a (t,c>=4,h,w) tensor, got " + to_string(cube.shape()));
    const std::size_t t = cube.dim(0), c = cube.dim(1), h = cube.dim(2), w = cube.dim(3);
    const std::size_t plane = h * w;
    FloatTensor out({t, h, w});
    const auto src = cube.data();
    for (std::size_t f = 0; f < t; ++f) {
        const float* red = src.data() + (f * c + kRed) * plane;
        const float* nir = src.data() + (f * c + kNir) * plane;
        float* dst = out.data().data() + f * plane;
        for (std::size_t p = 0; p < plane; ++p) {
            const double r = red[p], n = nir[p];
            const double sum = n + r;
            dst[p] = sum == 0.0 ? 0.0f : static_cast<float>((n - r) / sum);
        }
    }
    return out;
}

MaskTensor ndvi_mask(ConstView<std::uint8_t> mask) {
    if (mask.rank() != 4 || mask.dim(1) < 4)
        throw ShapeMismatch("ndvi_mask needs a (t,c>=4,h,w) tensor, got " + to_string(mask.shape()));
    const std::size_t t = mask.dim(0), c = mask.dim(1), h = mask.dim(2), w = mask.dim(3);
    const std::size_t plane = h * w;
    MaskTensor out({t, h, w});
    const auto src = mask.data();
    for (std::size_t f = 0; f < t; ++f) {
        const std::uint8_t* red = src.data() + (f * c + kRed) * plane;
        const std::uint8_t* nir = src.data() + (f * c + kNir) * plane;
        std::uint8_t* dst = out.data().data() + f * plane;
        for (std::size_t p = 0; p < plane; ++p) dst[p] = (red[p] != 0 || nir[p] != 0) ? 1 : 0;
    }
    return out;
}

CubeSplit split_context_target(const Minicube& cube, const TrackSpec& spec) {
    if (spec.total_frames() != cube.frames())
        throw GeometryMismatch("track " + std::string(to_string(spec.name)) + " needs " +
                               std::to_string(spec.total_frames()) + " frames (" +
                               std::to_string(spec.context_frames) + " context + " +
                               std::to_string(spec.target_frames) + " target), cube " + cube.meta().cube_id +
                               " has " + std::to_string(cube.frames()));
    const ConstView<float> hires = cube.hires();
    const ConstView<std::uint8_t> mask = cube.mask();
    const std::size_t cut = spec.context_frames, end = cube.frames();
    return {hires.frames(0, cut), mask.frames(0, cut), hires.frames(cut, end), mask.frames(cut, end)};
}

}  // namespace enscore

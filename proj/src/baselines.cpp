#include "enscore/baselines.hpp"

#include <algorithm>

#include "enscore/errors.hpp"
#include "enscore/evaluator.hpp"
#include "enscore/parallel.hpp"

namespace enscore {

std::string_view to_string(Fallback fallback) {
    return fallback == Fallback::channel_mean ? "channel_mean" : "mid_gray";
}

PersistenceConfig persistence_config_from_json(const nlohmann::json& j) {
    PersistenceConfig cfg;
    if (!j.is_object()) throw ConfigError("persistence config must be a JSON object");
    if (j.contains("fallback")) {
        const auto name = j.at("fallback").get<std::string>();
        if (name == "channel_mean")
            cfg.fallback = Fallback::channel_mean;
        else if (name == "mid_gray")
            cfg.fallback = Fallback::mid_gray;
        else
            throw ConfigError("fallback must be channel_mean or mid_gray, got " + name);
    }
    return cfg;
}

PersistenceResult persistence_forecast(ConstView<float> context, ConstView<std::uint8_t> context_mask,
                                       std::size_t target_frames, const PersistenceConfig& cfg) {
    if (context.rank() != 4 || context.shape() != context_mask.shape())
        throw ShapeMismatch("persistence: context " + to_string(context.shape()) + " and mask " +
                            to_string(context_mask.shape()) + " must be equal (t,c,h,w) shapes");
    const std::size_t t = context.dim(0), c = context.dim(1), area = context.dim(2) * context.dim(3);
    const auto values = context.data();
    const auto mask = context_mask.data();

    PersistenceResult result{FloatTensor({target_frames, c, context.dim(2), context.dim(3)}), 0};
    std::vector<float> frame(c * area);
    for (std::size_t ch = 0; ch < c; ++ch) {
        std::vector<double> sums(area, 0.0);
        std::vector<std::size_t> counts(area, 0);
        for (std::size_t f = 0; f < t; ++f) {
            const std::size_t off = (f * c + ch) * area;
            for (std::size_t p = 0; p < area; ++p) {
                if (mask[off + p] != 0) continue;
                sums[p] += values[off + p];
                ++counts[p];
            }
        }

        double fallback = 0.5;
        if (cfg.fallback == Fallback::channel_mean) {
            double total = 0.0;
            std::size_t n = 0;
            for (std::size_t p = 0; p < area; ++p) {
                total += sums[p];
                n += counts[p];
            }
            if (n > 0) fallback = total / static_cast<double>(n);
        }

        for (std::size_t p = 0; p < area; ++p) {
            double v = fallback;
            if (counts[p] > 0)
                v = sums[p] / static_cast<double>(counts[p]);
            else
                ++result.fallback_pixels;
            frame[ch * area + p] = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
        }
    }
    auto out = result.prediction.data();
    for (std::size_t f = 0; f < target_frames; ++f) std::copy(frame.begin(), frame.end(), out.begin() + f * frame.size());
    return result;
}

std::size_t run_baseline(const std::filesystem::path& test_dir, const std::filesystem::path& out_dir,
                         const TrackSpec& spec, const PersistenceConfig& cfg, std::size_t workers) {
    const auto cubes = list_cube_archives(test_dir);
    if (cubes.empty()) return 0;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    parallel_for_static(cubes.size(), workers, [&](std::size_t i) {
        const Minicube cube = load_minicube(cubes[i].path);
        const auto split = split_context_target(cube, spec);
        auto forecast = persistence_forecast(split.context, split.context_mask, spec.target_frames, cfg);

        PredictionSet prediction;
        prediction.cube_id = cube.meta().cube_id;
        prediction.members.push_back(std::move(forecast.prediction));
        prediction.attributes = {{"producer", "persistence"},
                                 {"fallback", std::string(to_string(cfg.fallback))},
                                 {"fallback_pixels", std::to_string(forecast.fallback_pixels)}};
        save_prediction(prediction, prediction_path(out_dir, prediction.cube_id));
    });
    return cubes.size();
}

}  // namespace enscore

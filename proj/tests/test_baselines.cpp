#include <gtest/gtest.h>

#include <random>

#include "enscore/baselines.hpp"
#include "enscore/errors.hpp"
#include "enscore/evaluator.hpp"
#include "enscore/metrics.hpp"
#include "support.hpp"

using namespace enscore;
using enscore::testing::make_cube;
using enscore::testing::random_mask;
using enscore::testing::random_values;
using enscore::testing::slurp;
using enscore::testing::TempDir;

namespace {

const TrackSpec kIid = TrackSpec::of(Track::iid);

}  // namespace

TEST(Persistence, AveragesUnmaskedContextValues) {
    const FloatTensor context({3, 1, 1, 1}, std::vector<float>{0.4f, 0.6f, 0.9f});
    const MaskTensor mask({3, 1, 1, 1}, std::vector<std::uint8_t>{0, 0, 1});
    const auto r = persistence_forecast(context, mask, 4);
    EXPECT_EQ(r.prediction.shape(), (Shape{4, 1, 1, 1}));
    for (float v : r.prediction.data()) EXPECT_FLOAT_EQ(v, 0.5f);
    EXPECT_EQ(r.fallback_pixels, 0u);
}

TEST(Persistence, ChannelMeanFallback) {
    // Pixel 0 never observed; pixel 1 observed at 0.40 and 0.44.
    const FloatTensor context({2, 1, 1, 2}, std::vector<float>{0.9f, 0.40f, 0.1f, 0.44f});
    const MaskTensor mask({2, 1, 1, 2}, std::vector<std::uint8_t>{1, 0, 1, 0});
    const auto r = persistence_forecast(context, mask, 2);
    EXPECT_NEAR(r.prediction[0], 0.42, 1e-6);
    EXPECT_NEAR(r.prediction[1], 0.42, 1e-6);
    EXPECT_EQ(r.fallback_pixels, 1u);

    const auto gray = persistence_forecast(context, mask, 2, {Fallback::mid_gray});
    EXPECT_EQ(gray.prediction[0], 0.5f);
    EXPECT_NEAR(gray.prediction[1], 0.42, 1e-6);
}

TEST(Persistence, ChannelWithoutObservationsUsesMidGray) {
    const FloatTensor context({2, 2, 1, 1}, std::vector<float>{0.2f, 0.9f, 0.4f, 0.9f});
    const MaskTensor mask({2, 2, 1, 1}, std::vector<std::uint8_t>{0, 1, 0, 1});
    const auto r = persistence_forecast(context, mask, 1);
    EXPECT_NEAR(r.prediction[0], 0.3, 1e-6);
    EXPECT_EQ(r.prediction[1], 0.5f);
}

TEST(Persistence, ConstantInTimeAndWithinObservedRange) {
    std::mt19937_64 rng(3);
    const auto context = random_values(rng, {10, 4, 6, 6});
    const auto mask = random_mask(rng, context.shape(), 0.3);
    const auto pred = persistence_predict(context, mask, 20);
    const std::size_t slab = 4 * 36;
    for (std::size_t i = 0; i < slab; ++i) {
        float lo = 1.0f, hi = 0.0f;
        bool seen = false;
        for (std::size_t f = 0; f < 10; ++f)
            if (!mask[f * slab + i]) {
                lo = std::min(lo, context[f * slab + i]);
                hi = std::max(hi, context[f * slab + i]);
                seen = true;
            }
        for (std::size_t f = 1; f < 20; ++f) ASSERT_EQ(pred[f * slab + i], pred[i]);
        if (seen) {
            EXPECT_GE(pred[i], lo - 1e-6f);
            EXPECT_LE(pred[i], hi + 1e-6f);
        }
    }
}

TEST(Persistence, ConstantCubeForecastScoresOne) {
    std::mt19937_64 rng(4);
    const FloatTensor hires({30, 4, 8, 8}, 0.3f);
    auto mask = random_mask(rng, hires.shape(), 0.1);
    const Minicube cube(hires, mask, FloatTensor({150, 5, 4, 4}, 0.5f), FloatTensor({8, 8}),
                        FloatTensor({4, 4}), {"c", "t", 6, LatitudeBand::north, quality_fraction(mask)});
    const auto split = split_context_target(cube, kIid);
    const auto pred = persistence_predict(split.context, split.context_mask, kIid.target_frames);
    const auto s = score_cube(split.target, split.target_mask, pred, kIid);
    EXPECT_EQ(s.ens, 1.0);
}

TEST(Persistence, RejectsShapeMismatch) {
    EXPECT_THROW(persistence_forecast(FloatTensor({2, 1, 2, 2}), MaskTensor({2, 1, 2, 3}), 1), ShapeMismatch);
}

TEST(PersistenceConfig, ParsesFallback) {
    EXPECT_EQ(persistence_config_from_json(nlohmann::json::object()).fallback, Fallback::channel_mean);
    EXPECT_EQ(persistence_config_from_json({{"fallback", "mid_gray"}}).fallback, Fallback::mid_gray);
    EXPECT_THROW(persistence_config_from_json({{"fallback", "zero"}}), ConfigError);
    EXPECT_THROW(persistence_config_from_json(nlohmann::json::array()), ConfigError);
}

TEST(RunBaseline, WritesOneArchivePerCube) {
    TempDir test("bl_test"), out("bl_out");
    std::mt19937_64 rng(5);
    for (int i = 0; i < 3; ++i) {
        const std::string id = "cube_" + std::to_string(i);
        save_minicube(make_cube(rng, 30, 6, 3, id, 0.2), cube_path(test.path(), id));
    }
    EXPECT_EQ(run_baseline(test.path(), out / "preds", kIid, {}, 2), 3u);
    for (int i = 0; i < 3; ++i) {
        const std::string id = "cube_" + std::to_string(i);
        const auto p = load_prediction(prediction_path(out / "preds", id));
        EXPECT_EQ(p.cube_id, id);
        ASSERT_EQ(p.members.size(), 1u);
        EXPECT_EQ(p.members[0].shape(), (Shape{20, 4, 6, 6}));
        EXPECT_EQ(p.attributes.at("producer"), "persistence");
        EXPECT_EQ(p.attributes.at("fallback"), "channel_mean");
    }
}

TEST(RunBaseline, RerunsAreByteIdentical) {
    TempDir test("bl_test"), a("bl_a"), b("bl_b");
    std::mt19937_64 rng(6);
    save_minicube(make_cube(rng, 30, 6, 3, "cube_x"), cube_path(test.path(), "cube_x"));
    run_baseline(test.path(), a.path(), kIid, {}, 1);
    run_baseline(test.path(), b.path(), kIid, {}, 4);
    EXPECT_EQ(slurp(prediction_path(a.path(), "cube_x")), slurp(prediction_path(b.path(), "cube_x")));
}

TEST(RunBaseline, EmptyDirectoryProducesNothing) {
    TempDir test("bl_test"), out("bl_out");
    EXPECT_EQ(run_baseline(test.path(), out / "preds", kIid), 0u);
    EXPECT_FALSE(std::filesystem::exists(out / "preds"));
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "enscore/errors.hpp"
#include "enscore/metrics.hpp"
#include "enscore/minicube.hpp"
#include "support.hpp"

using namespace enscore;
using enscore::testing::random_mask;
using enscore::testing::random_values;

namespace {

const RescaleFactors kSf;

std::vector<FrameRange> single_window(std::size_t frames) { return {{0, frames}}; }

}  // namespace

// ---------------------------------------------------------------- compose_ens

TEST(ComposeEns, ReferenceRowsReproduce) {
    struct Row {
        double mad, ols, emd, ssim, ens;
    };
    // Benchmark component means with their ENS, rounded to four decimals.
    const Row rows[] = {
        {0.2315, 0.3239, 0.2099, 0.3265, 0.2625}, {0.2248, 0.3236, 0.2123, 0.3112, 0.2587},
        {0.2482, 0.3381, 0.2336, 0.3973, 0.2902}, {0.2402, 0.3390, 0.2371, 0.3721, 0.2854},
        {0.2414, 0.3216, 0.2258, 0.3863, 0.2803}, {0.2314, 0.3088, 0.2177, 0.3432, 0.2655},
    };
    for (const auto& r : rows) EXPECT_NEAR(*compose_ens(r.mad, r.ols, r.emd, r.ssim).ens, r.ens, 5e-4);
}

TEST(ComposeEns, MissingAndDegenerateComponents) {
    EXPECT_EQ(*compose_ens(1.0, 1.0, 1.0, 1.0).ens, 1.0);
    EXPECT_DOUBLE_EQ(*compose_ens(std::nullopt, 0.4, 0.4, 0.4).ens, 0.4);
    EXPECT_EQ(*compose_ens(0.0, 0.9, 0.9, 0.9).ens, 0.0);
    EXPECT_FALSE(compose_ens(std::nullopt, std::nullopt, std::nullopt, std::nullopt).ens.has_value());
    EXPECT_DOUBLE_EQ(*compose_ens(std::nullopt, 0.5, std::nullopt, 0.25).ens, 2.0 / (2.0 + 4.0));
}

TEST(ComposeEns, LiesBetweenWorstComponentAndArithmeticMean) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        Score parts[4];
        double lo = 1.0, sum = 0.0;
        int n = 0;
        for (auto& p : parts) {
            if (u(rng) < 0.2) continue;
            p = u(rng);
            lo = std::min(lo, *p);
            sum += *p;
            ++n;
        }
        const auto s = compose_ens(parts[0], parts[1], parts[2], parts[3]);
        if (!s.ens) continue;
        EXPECT_GE(*s.ens, lo * (1 - 1e-12));
        EXPECT_LE(*s.ens, sum / n * (1 + 1e-12));
        EXPECT_LE(*s.ens, n * lo * (1 + 1e-12));
    }
}

// ----------------------------------------------------------------------- MAD

TEST(MadScore, PerfectPredictionIsOne) {
    std::mt19937_64 rng(1);
    const auto t = random_values(rng, {3, 4, 5, 5});
    auto m = random_mask(rng, t.shape(), 0.5);
    m[0] = 0;
    EXPECT_EQ(*mad_score(t, m, t), 1.0);
}

TEST(MadScore, RescalingAnchor) {
    // 1 - d^0.0665 = 0.1  <=>  d = 0.9^(1/0.0665)
    const double d = std::pow(0.9, 1.0 / kSf.sf_mad);
    EXPECT_NEAR(d, 0.2051, 5e-5);
    FloatTensor target({2, 4, 3, 3}, 0.3f);
    FloatTensor pred({2, 4, 3, 3}, static_cast<float>(0.3 + d));
    const MaskTensor mask(target.shape(), 0);
    EXPECT_NEAR(*mad_score(target, mask, pred), 0.1, 1e-3);
    FloatTensor pred_rounded({2, 4, 3, 3}, static_cast<float>(0.3 + 0.2051));
    EXPECT_NEAR(*mad_score(target, mask, pred_rounded), 0.1, 1e-3);
}

TEST(MadScore, FullyMaskedIsMissing) {
    const FloatTensor t({1, 4, 2, 2}, 0.5f);
    EXPECT_FALSE(mad_score(t, MaskTensor(t.shape(), 1), t).has_value());
}

TEST(MadScore, MatchesSortedMedianOracle) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = random_values(rng, {2, 4, 3, 3});
        const auto p = random_values(rng, t.shape());
        const auto m = random_mask(rng, t.shape(), 0.4);
        std::vector<double> dev;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (!m[i]) dev.push_back(std::abs(static_cast<double>(p[i]) - t[i]));
        const auto s = mad_score(t, m, p);
        if (dev.empty()) {
            EXPECT_FALSE(s);
            continue;
        }
        EXPECT_DOUBLE_EQ(*s, 1.0 - std::pow(enscore::testing::median_oracle(dev), kSf.sf_mad));
    }
}

TEST(MadScore, LargerDeviationsNeverScoreHigher) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> k(1.1, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = random_values(rng, {2, 4, 4, 4}, 0.4, 0.6);
        const auto offset = random_values(rng, t.shape(), -0.1, 0.1);
        const auto m = random_mask(rng, t.shape(), 0.2);
        FloatTensor near(t.shape()), far(t.shape());
        const double scale = k(rng);
        for (std::size_t i = 0; i < t.size(); ++i) {
            near[i] = t[i] + offset[i];
            far[i] = static_cast<float>(t[i] + scale * offset[i]);
        }
        EXPECT_LE(*mad_score(t, m, far), *mad_score(t, m, near));
    }
}

TEST(MadScore, ShapeMismatchThrows) {
    EXPECT_THROW(mad_score(FloatTensor({1, 4, 2, 2}), MaskTensor({1, 4, 2, 2}), FloatTensor({1, 4, 2, 3})), ShapeMismatch);
}

// ----------------------------------------------------------------------- OLS

TEST(OlsScore, IdenticalSeriesScoreOne) {
    std::mt19937_64 rng(2);
    const auto nd = random_values(rng, {20, 6, 6}, -1.0, 1.0);
    EXPECT_EQ(*ols_score(nd, MaskTensor(nd.shape(), 0), nd, single_window(20)), 1.0);
}

TEST(OlsScore, OppositeUnitSlopesScoreZero) {
    // x spans [0,2]; y = x - 1 has slope +1, y = 1 - x has slope -1.
    const std::size_t t = 20;
    FloatTensor targ({t, 2, 2}), pred({t, 2, 2});
    for (std::size_t f = 0; f < t; ++f)
        for (std::size_t p = 0; p < 4; ++p) {
            const double x = 2.0 * f / (t - 1);
            pred[f * 4 + p] = static_cast<float>(x - 1.0);
            targ[f * 4 + p] = static_cast<float>(1.0 - x);
        }
    EXPECT_NEAR(*ols_score(targ, MaskTensor(targ.shape(), 0), pred, single_window(t)), 0.0, 1e-6);
}

TEST(OlsScore, TwoPointTargetAgainstLinearPrediction) {
    // Target observed only at frames 0 and 19: slope (0.2 - 0)/2 = 0.1.
    // Prediction linear over the full range with slope 0.3 on the [0,2] regressor.
    const std::size_t t = 20;
    FloatTensor targ({t, 1, 1}, 0.5f), pred({t, 1, 1});
    MaskTensor mask({t, 1, 1}, 1);
    targ[0] = 0.0f;
    targ[19] = 0.2f;
    mask[0] = mask[19] = 0;
    std::vector<double> px, py;
    for (std::size_t f = 0; f < t; ++f) {
        pred[f] = static_cast<float>(0.3 * 2.0 * f / 19.0);
        px.push_back(2.0 * f / 19.0);
        py.push_back(pred[f]);
    }
    const double b_targ = enscore::testing::slope_oracle({0.0, 2.0}, {targ[0], targ[19]});
    const double b_pred = enscore::testing::slope_oracle(px, py);
    const double expected = 1.0 - std::pow(std::abs(b_pred - b_targ) / 2.0, kSf.sf_ndvi);

    const auto s = ols_score(targ, mask, pred, single_window(t));
    ASSERT_TRUE(s);
    EXPECT_NEAR(*s, expected, 1e-9);
    EXPECT_NEAR(*s, 0.2071, 1e-4);
}

TEST(OlsScore, PredictedFitSpansFirstToLastUnmaskedFrame) {
    // Prediction values outside [first, last] unmasked frame must not matter.
    const std::size_t t = 10;
    FloatTensor targ({t, 1, 1}), pred({t, 1, 1});
    MaskTensor mask({t, 1, 1}, 1);
    for (std::size_t f = 0; f < t; ++f) targ[f] = pred[f] = static_cast<float>(0.05 * f);
    for (std::size_t f = 3; f <= 6; ++f) mask[f] = 0;
    const auto base = ols_score(targ, mask, pred, single_window(t));
    pred[0] = 0.9f;
    pred[9] = -0.9f;
    EXPECT_EQ(ols_score(targ, mask, pred, single_window(t)), base);
    pred[4] = 0.9f;  // inside the range, masked or not, it counts
    EXPECT_NE(ols_score(targ, mask, pred, single_window(t)), base);
}

TEST(OlsScore, SkipsPixelsWithFewerThanTwoFrames) {
    FloatTensor nd({5, 1, 2}, 0.1f);
    MaskTensor mask({5, 1, 2}, 1);
    mask[0] = 0;  // pixel 0 has one frame
    EXPECT_FALSE(ols_score(nd, mask, nd, single_window(5)).has_value());
    mask[1] = mask[3] = 0;  // pixel 1 has two frames
    EXPECT_TRUE(ols_score(nd, mask, nd, single_window(5)).has_value());
}

TEST(OlsScore, ConstantShiftOfBothSeriesLeavesScoreUnchanged) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto targ = random_values(rng, {20, 4, 4}, -0.5, 0.5);
        const auto pred = random_values(rng, targ.shape(), -0.5, 0.5);
        const auto mask = random_mask(rng, targ.shape(), 0.3);
        FloatTensor t2(targ.shape()), p2(targ.shape());
        for (std::size_t i = 0; i < targ.size(); ++i) {
            t2[i] = targ[i] + 0.25f;
            p2[i] = pred[i] + 0.25f;
        }
        // float32 storage of the shifted series perturbs the slopes slightly
        EXPECT_NEAR(*ols_score(targ, mask, pred, single_window(20)), *ols_score(t2, mask, p2, single_window(20)), 1e-6);
    }
}

TEST(OlsScore, MalformedWindowsThrow) {
    const FloatTensor nd({20, 1, 1});
    const MaskTensor m({20, 1, 1});
    const std::vector<FrameRange> gap = {{0, 10}, {11, 20}};
    const std::vector<FrameRange> short_cover = {{0, 10}};
    const std::vector<FrameRange> overlap = {{0, 12}, {10, 20}};
    EXPECT_THROW(ols_score(nd, m, nd, gap), InvalidValue);
    EXPECT_THROW(ols_score(nd, m, nd, short_cover), InvalidValue);
    EXPECT_THROW(ols_score(nd, m, nd, overlap), InvalidValue);
}

// ------------------------------------------------------------ Wasserstein-1

TEST(Wasserstein, ScalarCases) {
    const std::vector<double> a = {0.3, 0.1, 0.3}, b = {0.3, 0.3, 0.1};
    EXPECT_EQ(wasserstein1_1d(a, b), 0.0);
    EXPECT_EQ(wasserstein1_1d(std::vector<double>{0.0}, std::vector<double>{1.0}), 1.0);
    EXPECT_EQ(wasserstein1_1d(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0}), 0.5);
    EXPECT_THROW(wasserstein1_1d(std::vector<double>{}, b), InvalidValue);
}

TEST(Wasserstein, MatchesScipyReferenceValues) {
    // Frozen from scipy.stats.wasserstein_distance.
    EXPECT_NEAR(wasserstein1_1d(std::vector<double>{0.1, 0.4, 0.4, 0.9}, std::vector<double>{0.0, 0.25, 0.7}),
                0.18333333333333335, 1e-15);
    EXPECT_NEAR(wasserstein1_1d(std::vector<double>{-0.3, 0.2, 0.5, 0.55, 0.8}, std::vector<double>{0.1, 0.1, 0.6}),
                0.25666666666666665, 1e-15);
}

TEST(Wasserstein, MetricPropertiesOnRandomSamples) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> size(1, 15);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto sample = [&] {
        std::vector<double> v(size(rng));
        for (auto& x : v) x = u(rng);
        return v;
    };
    for (int i = 0; i < 300; ++i) {
        const auto a = sample(), b = sample(), c = sample();
        const double ab = wasserstein1_1d(a, b), ba = wasserstein1_1d(b, a);
        EXPECT_NEAR(ab, ba, 1e-15);
        EXPECT_LE(ab, wasserstein1_1d(a, c) + wasserstein1_1d(c, b) + 1e-12);
        EXPECT_NEAR(ab, enscore::testing::w1_quantile_oracle(a, b), 1e-12);
        EXPECT_GE(ab, 0.0);
        EXPECT_EQ(wasserstein1_1d(a, a), 0.0);
    }
}

// ----------------------------------------------------------------------- EMD

TEST(EmdScore, EqualDistributionsScoreOne) {
    std::mt19937_64 rng(5);
    const auto nd = random_values(rng, {20, 3, 3}, -1.0, 1.0);
    // Reverse time: same multiset per pixel.
    FloatTensor rev(nd.shape());
    for (std::size_t f = 0; f < 20; ++f)
        for (std::size_t p = 0; p < 9; ++p) rev[f * 9 + p] = nd[(19 - f) * 9 + p];
    EXPECT_EQ(*emd_score(nd, MaskTensor(nd.shape(), 0), rev), 1.0);
}

TEST(EmdScore, SingleObservedTargetAgainstConstantPrediction) {
    FloatTensor targ({20, 1, 1}, 0.7f), pred({20, 1, 1}, 0.2f);
    MaskTensor mask({20, 1, 1}, 1);
    targ[5] = 0.0f;
    mask[5] = 0;
    const auto s = emd_score(targ, mask, pred);
    ASSERT_TRUE(s);
    const double w1 = enscore::testing::w1_quantile_oracle({0.0}, std::vector<double>(20, static_cast<double>(0.2f)));
    EXPECT_NEAR(*s, 1.0 - std::pow(w1, kSf.sf_ndvi), 1e-12);
    EXPECT_NEAR(*s, 0.1497, 1e-4);
}

TEST(EmdScore, DistanceIsClampedBeforeRescaling) {
    FloatTensor targ({4, 1, 1}, -1.0f), pred({4, 1, 1}, 1.0f);  // w1 = 2
    EXPECT_EQ(*emd_score(targ, MaskTensor(targ.shape(), 0), pred), 0.0);
}

TEST(EmdScore, FullyMaskedIsMissing) {
    const FloatTensor nd({4, 2, 2});
    EXPECT_FALSE(emd_score(nd, MaskTensor(nd.shape(), 1), nd).has_value());
}

// ---------------------------------------------------------------------- SSIM

namespace {

// Deterministic test planes; the reference values below were computed with
// skimage.metrics.structural_similarity(gaussian_weights=True, sigma=1.5,
// use_sample_covariance=False, data_range=1.0) on the same formulas.
std::pair<std::vector<double>, std::vector<double>> reference_planes(std::size_t h, std::size_t w) {
    std::vector<double> x(h * w), y(h * w);
    for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) {
            const double xv = 0.5 + 0.4 * std::sin(0.7 * i + 0.3 * j);
            x[i * w + j] = xv;
            y[i * w + j] = std::clamp(xv + 0.15 * std::cos(0.45 * i - 0.8 * j) - 0.05, 0.0, 1.0);
        }
    return {x, y};
}

}  // namespace

TEST(SsimPlane, MatchesScikitImageReference) {
    struct Case {
        std::size_t h, w;
        double expected;
    };
    for (const auto& c : {Case{16, 16, 0.9147632528705589}, Case{32, 24, 0.915086438105116},
                          Case{11, 11, 0.8848335229370289}}) {
        const auto [x, y] = reference_planes(c.h, c.w);
        EXPECT_NEAR(ssim_plane(x, y, c.h, c.w), c.expected, 1e-12) << c.h << "x" << c.w;
    }
}

TEST(SsimPlane, IdenticalPlanesAreExactlyOne) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t size : {1u, 2u, 4u, 7u, 16u, 33u}) {
        std::vector<double> x(size * size);
        for (auto& v : x) v = u(rng);
        EXPECT_EQ(ssim_plane(x, x, size, size), 1.0) << size;
    }
}

TEST(SsimScore, RescalingAnchor) {
    EXPECT_NEAR(std::pow(0.8, kSf.sf_ssim), 0.100, 1e-3);
    std::mt19937_64 rng(7);
    const auto t = random_values(rng, {2, 4, 12, 12});
    const auto p = random_values(rng, t.shape());
    const MaskTensor m(t.shape(), 0);
    const RescaleFactors raw{kSf.sf_mad, kSf.sf_ndvi, 1.0};
    const double r = std::max(*ssim_score(t, m, p, raw), 0.0);
    EXPECT_NEAR(*ssim_score(t, m, p), std::pow(r, kSf.sf_ssim), 1e-15);
}

TEST(SsimScore, HeavilyMaskedFramesAreSkipped) {
    std::mt19937_64 rng(8);
    const auto t = random_values(rng, {3, 4, 10, 10});
    auto p = random_values(rng, t.shape());
    MaskTensor m(t.shape(), 0);
    const std::size_t area = 100;
    // Frame (0,0): exactly 30% masked -> skipped. Frame (0,1): 29% -> kept.
    for (std::size_t i = 0; i < 30; ++i) m[i] = 1;
    for (std::size_t i = 0; i < 29; ++i) m[area + i] = 1;
    const auto before = ssim_score(t, m, p);
    for (std::size_t i = 0; i < area; ++i) p[i] = 0.0f;  // alter the skipped frame only
    EXPECT_EQ(ssim_score(t, m, p), before);
    for (std::size_t i = 0; i < area; ++i) p[area + i] = 0.0f;
    EXPECT_NE(ssim_score(t, m, p), before);
}

TEST(SsimScore, AllFramesMaskedIsMissing) {
    const FloatTensor t({2, 4, 5, 5}, 0.5f);
    MaskTensor m(t.shape(), 0);
    for (std::size_t f = 0; f < 8; ++f)
        for (std::size_t i = 0; i < 8; ++i) m[f * 25 + i] = 1;  // 32% of every frame
    EXPECT_FALSE(ssim_score(t, m, t).has_value());
}

TEST(SsimScore, IdenticalCubesScoreExactlyOne) {
    std::mt19937_64 rng(9);
    const auto t = random_values(rng, {4, 4, 16, 16});
    EXPECT_EQ(*ssim_score(t, MaskTensor(t.shape(), 0), t), 1.0);
}

// ---------------------------------------------------------------- score_cube

TEST(ScoreCube, EqualsIndependentComposition) {
    std::mt19937_64 rng(10);
    const auto spec = TrackSpec::of(Track::iid);
    for (int trial = 0; trial < 10; ++trial) {
        const auto t = random_values(rng, {20, 4, 4, 4});
        const auto p = random_values(rng, t.shape());
        const auto m = random_mask(rng, t.shape(), 0.2);
        const auto s = score_cube(t, m, p, spec);

        const auto tn = ndvi(t), pn = ndvi(p);
        const auto nm = ndvi_mask(m);
        const std::vector<FrameRange> w = {{0, 20}};
        const auto mad = mad_score(t, m, p);
        const auto ols = ols_score(tn, nm, pn, w);
        const auto emd = emd_score(tn, nm, pn);
        const auto ssim = ssim_score(t, m, p);
        EXPECT_EQ(s.mad, mad);
        EXPECT_EQ(s.ols, ols);
        EXPECT_EQ(s.emd, emd);
        EXPECT_EQ(s.ssim, ssim);
        EXPECT_EQ(s.ens, compose_ens(mad, ols, emd, ssim).ens);
    }
}

TEST(ScoreCube, PerfectOnUnmaskedCellsScoresOne) {
    std::mt19937_64 rng(12);
    const auto clean = random_values(rng, {20, 4, 8, 8});
    MaskTensor mask(clean.shape(), 0);
    FloatTensor target = clean;
    // Whole time series masked at a few pixels, plus scattered blue-channel artifacts.
    for (std::size_t f = 0; f < 20; ++f)
        for (std::size_t c = 0; c < 4; ++c)
            for (std::size_t p : {0u, 9u, 27u}) {
                mask.at(f, c, p / 8, p % 8) = 1;
                target.at(f, c, p / 8, p % 8) = 0.0f;
            }
    std::bernoulli_distribution b(0.1);
    for (std::size_t f = 0; f < 20; ++f)
        for (std::size_t p = 0; p < 64; ++p)
            if (b(rng)) {
                mask.at(f, kBlue, p / 8, p % 8) = 1;
                target.at(f, kBlue, p / 8, p % 8) = 1.0f;
            }
    const auto s = score_cube(target, mask, clean, TrackSpec::of(Track::iid));
    EXPECT_EQ(s, (SubscoreSet{1.0, 1.0, 1.0, 1.0, 1.0}));
}

TEST(ScoreCube, MidSeriesGapsKeepNdviScoresBelowOne) {
    // The predicted fit spans the whole observed range and EMD sees every
    // predicted frame, so a copy of the target is not perfect once a frame
    // inside the range is masked.
    std::mt19937_64 rng(14);
    const auto target = random_values(rng, {20, 4, 4, 4}, 0.1, 0.9);
    MaskTensor mask(target.shape(), 0);
    for (std::size_t c = 0; c < 4; ++c) mask.at(7, c, 1, 2) = 1;
    const auto s = score_cube(target, mask, target, TrackSpec::of(Track::iid));
    EXPECT_EQ(s.mad, 1.0);
    EXPECT_EQ(s.ssim, 1.0);
    EXPECT_LT(*s.ols, 1.0);
    EXPECT_LT(*s.emd, 1.0);
}

TEST(ScoreCube, FullyMaskedTargetIsAllMissing) {
    const FloatTensor t({20, 4, 4, 4}, 0.5f);
    const auto s = score_cube(t, MaskTensor(t.shape(), 1), t, TrackSpec::of(Track::iid));
    EXPECT_EQ(s, SubscoreSet{});
}

TEST(ScoreCube, GeometryIsChecked) {
    const FloatTensor t({20, 4, 4, 4}, 0.5f);
    const MaskTensor m(t.shape(), 0);
    EXPECT_THROW(score_cube(t, m, FloatTensor({20, 4, 4, 5}), TrackSpec::of(Track::iid)), GeometryMismatch);
    EXPECT_THROW(score_cube(t, m, t, TrackSpec::of(Track::extreme)), GeometryMismatch);
}

TEST(ScoreCube, SubscoresStayInUnitInterval) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = random_values(rng, {20, 4, 6, 6});
        const auto p = random_values(rng, t.shape());
        const auto m = random_mask(rng, t.shape(), 0.3);
        const auto s = score_cube(t, m, p, TrackSpec::of(Track::iid));
        for (const auto& v : {s.mad, s.ols, s.emd, s.ssim, s.ens}) {
            if (!v) continue;
            EXPECT_GE(*v, 0.0);
            EXPECT_LE(*v, 1.0);
        }
    }
}

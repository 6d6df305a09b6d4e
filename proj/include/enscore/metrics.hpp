#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "enscore/tensor.hpp"
#include "enscore/track.hpp"

namespace enscore {

// A subscore in [0,1], or nullopt when no valid datapoint was available.
using Score = std::optional<double>;

// Difficulty exponents applied to the raw distances (mad, ols/w1) and to raw SSIM.
struct RescaleFactors {
    double sf_mad = 0.0665;
    double sf_ndvi = 0.1008;
    double sf_ssim = 10.3188;
};

struct SsimParams {
    std::size_t window = 11;  // shrunk to the largest odd size fitting the frame
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
    // Frames whose target is masked at this fraction or more are skipped.
    double max_masked_fraction = 0.3;
};

struct SubscoreSet {
    Score mad;
    Score ols;
    Score emd;
    Score ssim;
    Score ens;

    bool operator==(const SubscoreSet&) const = default;
};

// Harmonic mean of the present components; any present 0 forces 0; nullopt
// when all four are missing.
SubscoreSet compose_ens(Score mad, Score ols, Score emd, Score ssim);

// n / sum(1/s_i) over the present entries.
Score harmonic_mean(std::span<const Score> scores);

// 1 - median(|pred - target|)^sf_mad over unmasked cells.
Score mad_score(ConstView<float> target, ConstView<std::uint8_t> mask, ConstView<float> pred,
                const RescaleFactors& sf = {});

// Slope disagreement of pixelwise NDVI series within each window. Inputs are
// (t,h,w); `windows` must partition [0,t).
Score ols_score(ConstView<float> target_ndvi, ConstView<std::uint8_t> ndvi_mask, ConstView<float> pred_ndvi,
                std::span<const FrameRange> windows, const RescaleFactors& sf = {});

// Pixelwise Wasserstein-1 between unmasked target NDVI and all predicted NDVI.
Score emd_score(ConstView<float> target_ndvi, ConstView<std::uint8_t> ndvi_mask, ConstView<float> pred_ndvi,
                const RescaleFactors& sf = {});

// Exact W1 between two empirical distributions. Throws InvalidValue on empty input.
double wasserstein1_1d(std::span<const double> a, std::span<const double> b);

// Mean structural similarity of two equally sized single-channel planes.
double ssim_plane(std::span<const double> x, std::span<const double> y, std::size_t height, std::size_t width,
                  const SsimParams& params = {});

// Masked SSIM over every (t,c) frame, rescaled by sf_ssim.
Score ssim_score(ConstView<float> target, ConstView<std::uint8_t> mask, ConstView<float> pred,
                 const RescaleFactors& sf = {}, const SsimParams& params = {});

// All four subscores on target frames, composed into ENS. `target`, `mask` and
// `pred` are (spec.target_frames, 4, h, w).
SubscoreSet score_cube(ConstView<float> target, ConstView<std::uint8_t> mask, ConstView<float> pred,
                       const TrackSpec& spec, const RescaleFactors& sf = {}, const SsimParams& ssim = {});

}  // namespace enscore

#include "enscore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "enscore/errors.hpp"
#include "enscore/minicube.hpp"

namespace enscore {

namespace {

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (a != b) throw ShapeMismatch(std::string(what) + ": shapes " + to_string(a) + " and " + to_string(b) + " differ");
}

void require_rank(const Shape& s, std::size_t rank, const char* what) {
    if (s.size() != rank)
        throw ShapeMismatch(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + to_string(s));
}

// Distance in [0,1] -> score in [0,1].
double distance_to_score(double distance, double exponent) { return 1.0 - std::pow(distance, exponent); }

double median_in_place(std::vector<double>& v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        sxy += dx * (y[i] - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

std::vector<double> gaussian_taps(std::size_t size, double sigma) {
    std::vector<double> taps(size);
    const double centre = static_cast<double>(size - 1) / 2.0;
    double total = 0.0;
    for (std::size_t k = 0; k < size; ++k) {
        const double d = static_cast<double>(k) - centre;
        taps[k] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        total += taps[k];
    }
    for (auto& t : taps) t /= total;
    return taps;
}

// 'valid' separable correlation of an h x w plane with `taps` along both axes.
std::vector<double> filter_valid(std::span<const double> plane, std::size_t h, std::size_t w,
                                 std::span<const double> taps) {
    const std::size_t k = taps.size();
    const std::size_t ow = w - k + 1, oh = h - k + 1;
    std::vector<double> rows(h * ow);
    for (std::size_t r = 0; r < h; ++r) {
        const double* src = plane.data() + r * w;
        double* dst = rows.data() + r * ow;
        for (std::size_t c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) acc += taps[i] * src[c + i];
            dst[c] = acc;
        }
    }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t r = 0; r < oh; ++r) {
        double* dst = out.data() + r * ow;
        for (std::size_t i = 0; i < k; ++i) {
            const double t = taps[i];
            const double* src = rows.data() + (r + i) * ow;
            for (std::size_t c = 0; c < ow; ++c) dst[c] += t * src[c];
        }
    }
    return out;
}

}  // namespace

Score harmonic_mean(std::span<const Score> scores) {
    std::size_t n = 0;
    double inv = 0.0;
    for (const auto& s : scores) {
        if (!s) continue;
        if (*s <= 0.0) return 0.0;
        inv += 1.0 / *s;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return static_cast<double>(n) / inv;
}

SubscoreSet compose_ens(Score mad, Score ols, Score emd, Score ssim) {
    const Score parts[] = {mad, ols, emd, ssim};
    return {mad, ols, emd, ssim, harmonic_mean(parts)};
}

Score mad_score(ConstView<float> target, ConstView<std::uint8_t> mask, ConstView<float> pred,
                const RescaleFactors& sf) {
    require_same_shape(target.shape(), pred.shape(), "mad_score target/pred");
    require_same_shape(target.shape(), mask.shape(), "mad_score target/mask");

    const auto t = target.data();
    const auto p = pred.data();
    const auto m = mask.data();
    std::vector<double> deviations;
    deviations.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        if (m[i] == 0) deviations.push_back(std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i])));
    if (deviations.empty()) return std::nullopt;

    const double mad = std::min(median_in_place(deviations), 1.0);
    return distance_to_score(mad, sf.sf_mad);
}

Score ols_score(ConstView<float> target_ndvi, ConstView<std::uint8_t> ndvi_mask, ConstView<float> pred_ndvi,
                std::span<const FrameRange> windows, const RescaleFactors& sf) {
    require_rank(target_ndvi.shape(), 3, "ols_score");
    require_same_shape(target_ndvi.shape(), pred_ndvi.shape(), "ols_score target/pred");
    require_same_shape(target_ndvi.shape(), ndvi_mask.shape(), "ols_score target/mask");

    const std::size_t frames = target_ndvi.dim(0);
    const std::size_t pixels = target_ndvi.dim(1) * target_ndvi.dim(2);
    {
        std::size_t expect = 0;
        for (const auto& w : windows) {
            if (w.begin != expect || w.end <= w.begin)
                throw InvalidValue("ols_score: windows must be contiguous, non-empty, and start at 0");
            expect = w.end;
        }
        if (expect != frames)
            throw InvalidValue("ols_score: windows cover " + std::to_string(expect) + " of " +
                               std::to_string(frames) + " frames");
    }

    const auto tv = target_ndvi.data();
    const auto pv = pred_ndvi.data();
    const auto mv = ndvi_mask.data();

    std::vector<double> tx, ty, px, py;
    double total = 0.0;
    std::size_t computed = 0;
    for (const auto& window : windows) {
        for (std::size_t p = 0; p < pixels; ++p) {
            tx.clear();
            ty.clear();
            std::size_t first = 0, last = 0;
            bool seen = false;
            for (std::size_t f = window.begin; f < window.end; ++f) {
                if (mv[f * pixels + p] != 0) continue;
                if (!seen) first = f;
                last = f;
                seen = true;
                tx.push_back(static_cast<double>(f));
                ty.push_back(tv[f * pixels + p]);
            }
            if (tx.size() < 2) continue;

            // Both regressors map [first, last] affinely onto [0, 2].
            const double scale = 2.0 / static_cast<double>(last - first);
            for (auto& x : tx) x = (x - static_cast<double>(first)) * scale;
            px.clear();
            py.clear();
            for (std::size_t f = first; f <= last; ++f) {
                px.push_back(static_cast<double>(f - first) * scale);
                py.push_back(pv[f * pixels + p]);
            }

            const double b_targ = ols_slope(tx, ty);
            const double b_pred = ols_slope(px, py);
            const double ols = std::min(std::abs(b_pred - b_targ) / 2.0, 1.0);
            total += std::pow(ols, sf.sf_ndvi);
            ++computed;
        }
    }
    if (computed == 0) return std::nullopt;
    return 1.0 - total / static_cast<double>(computed);
}

double wasserstein1_1d(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidValue("wasserstein1_1d: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    for (double v : sa)
        if (!std::isfinite(v)) throw InvalidValue("wasserstein1_1d: non-finite sample");
    for (double v : sb)
        if (!std::isfinite(v)) throw InvalidValue("wasserstein1_1d: non-finite sample");
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    // Integrate |F_a - F_b| over the merged support. Scaling both CDFs by
    // n*m keeps the heights integral, so only the final division rounds.
    const auto n = static_cast<std::int64_t>(sa.size());
    const auto m = static_cast<std::int64_t>(sb.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::int64_t i = 0, j = 0;
    double x = std::min(sa.front(), sb.front());
    double area = 0.0;
    while (true) {
        while (i < n && sa[i] == x) ++i;
        while (j < m && sb[j] == x) ++j;
        if (i == n && j == m) break;
        const double next = std::min(i < n ? sa[i] : inf, j < m ? sb[j] : inf);
        const std::int64_t height = i * m - j * n;
        area += static_cast<double>(height < 0 ? -height : height) * (next - x);
        x = next;
    }
    return area / static_cast<double>(n * m);
}

Score emd_score(ConstView<float> target_ndvi, ConstView<std::uint8_t> ndvi_mask, ConstView<float> pred_ndvi,
                const RescaleFactors& sf) {
    require_rank(target_ndvi.shape(), 3, "emd_score");
    require_same_shape(target_ndvi.shape(), pred_ndvi.shape(), "emd_score target/pred");
    require_same_shape(target_ndvi.shape(), ndvi_mask.shape(), "emd_score target/mask");

    const std::size_t frames = target_ndvi.dim(0);
    const std::size_t pixels = target_ndvi.dim(1) * target_ndvi.dim(2);
    const auto tv = target_ndvi.data();
    const auto pv = pred_ndvi.data();
    const auto mv = ndvi_mask.data();

    std::vector<double> targ, pred;
    double total = 0.0;
    std::size_t computed = 0;
    for (std::size_t p = 0; p < pixels; ++p) {
        targ.clear();
        pred.clear();
        for (std::size_t f = 0; f < frames; ++f) {
            if (mv[f * pixels + p] == 0) targ.push_back(tv[f * pixels + p]);
            pred.push_back(pv[f * pixels + p]);
        }
        if (targ.empty()) continue;
        const double w1 = std::min(wasserstein1_1d(targ, pred), 1.0);
        total += std::pow(w1, sf.sf_ndvi);
        ++computed;
    }
    if (computed == 0) return std::nullopt;
    return 1.0 - total / static_cast<double>(computed);
}

double ssim_plane(std::span<const double> x, std::span<const double> y, std::size_t height, std::size_t width,
                  const SsimParams& params) {
    if (x.size() != height * width || y.size() != height * width)
        throw ShapeMismatch("ssim_plane: buffers do not match " + std::to_string(height) + "x" +
                            std::to_string(width));
    if (height == 0 || width == 0) throw ShapeMismatch("ssim_plane: empty plane");

    std::size_t win = std::min({params.window, height, width});
    if (win % 2 == 0) --win;
    const auto taps = gaussian_taps(win, params.sigma);

    const std::size_t n = height * width;
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mu_x = filter_valid(x, height, width, taps);
    const auto mu_y = filter_valid(y, height, width, taps);
    const auto e_xx = filter_valid(xx, height, width, taps);
    const auto e_yy = filter_valid(yy, height, width, taps);
    const auto e_xy = filter_valid(xy, height, width, taps);

    const double c1 = (params.k1 * params.data_range) * (params.k1 * params.data_range);
    const double c2 = (params.k2 * params.data_range) * (params.k2 * params.data_range);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i], my = mu_y[i];
        const double vx = e_xx[i] - mx * mx;
        const double vy = e_yy[i] - my * my;
        const double cxy = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    return total / static_cast<double>(mu_x.size());
}

Score ssim_score(ConstView<float> target, ConstView<std::uint8_t> mask, ConstView<float> pred,
                 const RescaleFactors& sf, const SsimParams& params) {
    require_rank(target.shape(), 4, "ssim_score");
    require_same_shape(target.shape(), pred.shape(), "ssim_score target/pred");
    require_same_shape(target.shape(), mask.shape(), "ssim_score target/mask");

    const std::size_t planes = target.dim(0) * target.dim(1);
    const std::size_t h = target.dim(2), w = target.dim(3), area = h * w;
    const auto tv = target.data();
    const auto pv = pred.data();
    const auto mv = mask.data();

    std::vector<double> x(area), y(area);
    double total = 0.0;
    std::size_t kept = 0;
    for (std::size_t f = 0; f < planes; ++f) {
        const std::size_t off = f * area;
        const auto masked = std::count_if(mv.begin() + off, mv.begin() + off + area, [](auto v) { return v != 0; });
        if (static_cast<double>(masked) / static_cast<double>(area) >= params.max_masked_fraction) continue;
        for (std::size_t i = 0; i < area; ++i) {
            y[i] = pv[off + i];
            x[i] = mv[off + i] != 0 ? y[i] : static_cast<double>(tv[off + i]);
        }
        total += ssim_plane(x, y, h, w, params);
        ++kept;
    }
    if (kept == 0) return std::nullopt;
    const double raw = std::max(total / static_cast<double>(kept), 0.0);
    return std::pow(std::min(raw, 1.0), sf.sf_ssim);
}

SubscoreSet score_cube(ConstView<float> target, ConstView<std::uint8_t> mask, ConstView<float> pred,
                       const TrackSpec& spec, const RescaleFactors& sf, const SsimParams& ssim) {
    require_rank(target.shape(), 4, "score_cube");
    if (target.dim(0) != spec.target_frames || target.dim(1) != kSpectralChannels)
        throw GeometryMismatch("score_cube: target " + to_string(target.shape()) + " does not match track " +
                               std::string(to_string(spec.name)) + " (" + std::to_string(spec.target_frames) +
                               " frames, 4 channels)");
    if (pred.shape() != target.shape())
        throw GeometryMismatch("score_cube: prediction " + to_string(pred.shape()) + " does not match target " +
                               to_string(target.shape()));
    require_same_shape(target.shape(), mask.shape(), "score_cube target/mask");

    const auto target_ndvi = ndvi(target);
    const auto pred_ndvi = ndvi(pred);
    const auto nmask = ndvi_mask(mask);
    const auto windows = spec.ols_windows();

    return compose_ens(mad_score(target, mask, pred, sf), ols_score(target_ndvi, nmask, pred_ndvi, windows, sf),
                       emd_score(target_ndvi, nmask, pred_ndvi, sf), ssim_score(target, mask, pred, sf, ssim));
}

}  // namespace enscore

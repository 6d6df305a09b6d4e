#pragma once

// Shared fixtures and independent oracles for the test suites. Nothing here
// calls into the metric implementations it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "enscore/minicube.hpp"
#include "enscore/tensor.hpp"

namespace enscore::testing {

// Removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("enscore_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline FloatTensor random_values(std::mt19937_64& rng, const Shape& shape, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    FloatTensor t(shape);
    for (auto& v : t.data()) v = static_cast<float>(u(rng));
    return t;
}

inline MaskTensor random_mask(std::mt19937_64& rng, const Shape& shape, double p_masked) {
    std::bernoulli_distribution b(p_masked);
    MaskTensor m(shape);
    for (auto& v : m.data()) v = b(rng) ? 1 : 0;
    return m;
}

// Minimal valid cube with the given frame count and spatial size.
inline Minicube make_cube(std::mt19937_64& rng, std::size_t frames, std::size_t hs, std::size_t ms,
                          const std::string& id = "cube_test", double p_masked = 0.1) {
    CubeMetadata meta{id, "tile_0", 3, LatitudeBand::south, 1.0};
    auto mask = random_mask(rng, {frames, 4, hs, hs}, p_masked);
    meta.quality_fraction = quality_fraction(mask);
    return Minicube(random_values(rng, {frames, 4, hs, hs}), std::move(mask),
                    random_values(rng, {5 * frames, 5, ms, ms}), random_values(rng, {hs, hs}),
                    random_values(rng, {ms, ms}), meta);
}

// W1 by integrating |Qa(u) - Qb(u)| over u in [0,1]. Breakpoints of both
// quantile functions are multiples of 1/(n*m); work in those units so the
// segment lengths are integers.
inline double w1_quantile_oracle(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t n = a.size(), m = b.size(), total = n * m;
    std::vector<std::size_t> cuts;
    for (std::size_t k = 0; k <= n; ++k) cuts.push_back(k * m);
    for (std::size_t k = 0; k <= m; ++k) cuts.push_back(k * n);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double area = 0.0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const std::size_t u0 = cuts[s], u1 = cuts[s + 1];
        area += std::abs(a[u0 / m] - b[u0 / n]) * static_cast<double>(u1 - u0);
    }
    return area / static_cast<double>(total);
}

// Median by full sort (NumPy semantics for even counts).
inline double median_oracle(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Textbook OLS slope via normal equations.
inline double slope_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Reflectances (red, nir) with the requested NDVI value.
inline std::pair<float, float> red_nir_for(double ndvi_value, double red = 0.2) {
    return {static_cast<float>(red), static_cast<float>(red * (1.0 + ndvi_value) / (1.0 - ndvi_value))};
}

}  // namespace enscore::testing

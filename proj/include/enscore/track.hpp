#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace enscore {

enum class Track { iid, ood, extreme, seasonal };

std::string_view to_string(Track track);
// Accepts "iid", "ood", "extreme", "seasonal"; throws ConfigError otherwise.
Track parse_track(std::string_view name);

// Half-open range of frame indices.
struct FrameRange {
    std::size_t begin{0};
    std::size_t end{0};

    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const FrameRange&) const = default;
};

// Context/target geometry of one challenge track and its OLS windowing.
struct TrackSpec {
    Track name{Track::iid};
    std::size_t context_frames{10};
    std::size_t target_frames{20};
    std::size_t ols_window{20};

    static TrackSpec of(Track track);
    static TrackSpec parse(std::string_view name) { return of(parse_track(name)); }

    std::size_t total_frames() const noexcept { return context_frames + target_frames; }

    // Disjoint windows partitioning [0, target_frames).
    std::vector<FrameRange> ols_windows() const;

    bool operator==(const TrackSpec&) const = default;
};

}  // namespace enscore

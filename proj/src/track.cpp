#include "enscore/track.hpp"

#include "enscore/errors.hpp"

namespace enscore {

std::string_view to_string(Track track) {
    switch (track) {
        case Track::iid: return "iid";
        case Track::ood: return "ood";
        case Track::extreme: return "extreme";
        case Track::seasonal: return "seasonal";
    }
    return "unknown";
}

Track parse_track(std::string_view name) {
    if (name == "iid") return Track::iid;
    if (name == "ood") return Track::ood;
    if (name == "extreme") return Track::extreme;
    if (name == "seasonal") return Track::seasonal;
    throw ConfigError("unknown track \"" + std::string(name) + "\" (expected iid|ood|extreme|seasonal)");
}

TrackSpec TrackSpec::of(Track track) {
    switch (track) {
        case Track::iid: return {Track::iid, 10, 20, 20};
        case Track::ood: return {Track::ood, 10, 20, 20};
        case Track::extreme: return {Track::extreme, 20, 40, 40};
        case Track::seasonal: return {Track::seasonal, 70, 140, 20};
    }
    throw ConfigError("unknown track");
}

std::vector<FrameRange> TrackSpec::ols_windows() const {
    if (ols_window == 0 || target_frames % ols_window != 0)
        throw ConfigError("target_frames " + std::to_string(target_frames) +
                          " is not a multiple of ols_window " + std::to_string(ols_window));
    std::vector<FrameRange> windows;
    for (std::size_t b = 0; b < target_frames; b += ols_window) windows.push_back({b, b + ols_window});
    return windows;
}

}  // namespace enscore

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "enscore/metrics.hpp"
#include "enscore/minicube.hpp"
#include "enscore/track.hpp"

namespace enscore {

extern const char* const kToolkitVersion;

struct MemberChoice {
    std::size_t index{0};
    SubscoreSet scores;
};

// Scores every ensemble member and keeps the one with the highest ENS. Ties
// go to the lowest index; a missing ENS ranks below any present one.
MemberChoice select_best_member(ConstView<float> target, ConstView<std::uint8_t> mask,
                                const PredictionSet& predictions, const TrackSpec& spec,
                                const RescaleFactors& sf = {}, const SsimParams& ssim = {});

struct CubeResult {
    std::string cube_id;
    std::size_t chosen_member{0};
    SubscoreSet scores;
};

struct Aggregate {
    Score mean_mad;
    Score mean_ols;
    Score mean_emd;
    Score mean_ssim;
    Score ens;

    bool operator==(const Aggregate&) const = default;
};

// Per-component arithmetic means over cubes where that component is present,
// then ENS of the four means.
Aggregate aggregate(const std::vector<CubeResult>& per_cube);

struct Provenance {
    std::string toolkit_version{kToolkitVersion};
    RescaleFactors rescale;
    SsimParams ssim;
    // Informational only; never serialized so reports stay identical across worker counts.
    std::size_t workers{1};
};

struct EvaluationReport {
    Track track{Track::iid};
    std::vector<CubeResult> per_cube;  // sorted by cube_id
    Aggregate aggregate;
    Provenance provenance;
};

struct EvaluateOptions {
    std::size_t workers{1};
    RescaleFactors rescale;
    SsimParams ssim;
};

// Scores test_dir/*.mc.zip against pred_dir/<cube_id>.pred.zip. Aborts with
// MissingPrediction before scoring if any cube lacks a prediction archive.
EvaluationReport evaluate_dataset(const std::filesystem::path& test_dir, const std::filesystem::path& pred_dir,
                                  const TrackSpec& spec, const EvaluateOptions& options = {});

// Sorted minicube archives (by cube id) in a directory; cube id is the file
// name without the ".mc.zip" suffix.
struct CubeFile {
    std::string cube_id;
    std::filesystem::path path;
};
std::vector<CubeFile> list_cube_archives(const std::filesystem::path& dir);

inline constexpr std::string_view kCubeSuffix = ".mc.zip";
inline constexpr std::string_view kPredictionSuffix = ".pred.zip";

std::filesystem::path prediction_path(const std::filesystem::path& pred_dir, const std::string& cube_id);
std::filesystem::path cube_path(const std::filesystem::path& dir, const std::string& cube_id);

nlohmann::json report_to_json(const EvaluationReport& report);
std::string render_report(const EvaluationReport& report);
void emit_report(const EvaluationReport& report, const std::filesystem::path& path);

}  // namespace enscore

#include "enscore/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "enscore/canonical_json.hpp"
#include "enscore/errors.hpp"
#include "enscore/parallel.hpp"

#ifndef ENSCORE_VERSION
#define ENSCORE_VERSION "dev"
#endif

namespace enscore {

const char* const kToolkitVersion = ENSCORE_VERSION;

namespace {

bool ranks_above(const Score& candidate, const Score& incumbent) {
    if (!candidate) return false;
    if (!incumbent) return true;
    return *candidate > *incumbent;
}

Score mean_present(const std::vector<CubeResult>& rows, Score SubscoreSet::*field) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& row : rows) {
        if (const auto& s = row.scores.*field) {
            sum += *s;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

MemberChoice select_best_member(ConstView<float> target, ConstView<std::uint8_t> mask,
                                const PredictionSet& predictions, const TrackSpec& spec, const RescaleFactors& sf,
                                const SsimParams& ssim) {
    if (predictions.members.empty())
        throw InvalidValue("empty ensemble for cube " + predictions.cube_id);
    if (predictions.members.size() > kMaxEnsembleMembers)
        throw InvalidValue("ensemble for cube " + predictions.cube_id + " exceeds " +
                           std::to_string(kMaxEnsembleMembers) + " members");
    MemberChoice best;
    for (std::size_t k = 0; k < predictions.members.size(); ++k) {
        auto scores = score_cube(target, mask, predictions.members[k], spec, sf, ssim);
        if (k == 0 || ranks_above(scores.ens, best.scores.ens)) best = {k, scores};
    }
    return best;
}

Aggregate aggregate(const std::vector<CubeResult>& per_cube) {
    Aggregate a;
    a.mean_mad = mean_present(per_cube, &SubscoreSet::mad);
    a.mean_ols = mean_present(per_cube, &SubscoreSet::ols);
    a.mean_emd = mean_present(per_cube, &SubscoreSet::emd);
    a.mean_ssim = mean_present(per_cube, &SubscoreSet::ssim);
    a.ens = compose_ens(a.mean_mad, a.mean_ols, a.mean_emd, a.mean_ssim).ens;
    return a;
}

std::filesystem::path prediction_path(const std::filesystem::path& pred_dir, const std::string& cube_id) {
    return pred_dir / (cube_id + std::string(kPredictionSuffix));
}

std::filesystem::path cube_path(const std::filesystem::path& dir, const std::string& cube_id) {
    return dir / (cube_id + std::string(kCubeSuffix));
}

std::vector<CubeFile> list_cube_archives(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
    std::vector<CubeFile> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (!ends_with(name, kCubeSuffix)) continue;
        files.push_back({name.substr(0, name.size() - kCubeSuffix.size()), entry.path()});
    }
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.cube_id < b.cube_id; });
    return files;
}

EvaluationReport evaluate_dataset(const std::filesystem::path& test_dir, const std::filesystem::path& pred_dir,
                                  const TrackSpec& spec, const EvaluateOptions& options) {
    if (options.workers == 0) throw ConfigError("workers must be at least 1");
    spec.ols_windows();  // validates the windowing up front

    const auto cubes = list_cube_archives(test_dir);
    if (cubes.empty()) throw IoError("no *" + std::string(kCubeSuffix) + " archives in " + test_dir.string());
    for (const auto& cube : cubes) {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(prediction_path(pred_dir, cube.cube_id), ec))
            throw MissingPrediction(cube.cube_id);
    }

    std::vector<CubeResult> results(cubes.size());
    parallel_for_static(cubes.size(), options.workers, [&](std::size_t i) {
        const auto& file = cubes[i];
        const Minicube cube = load_minicube(file.path);
        if (cube.meta().cube_id != file.cube_id)
            throw FormatError(file.path.string() + ": meta.json cube_id \"" + cube.meta().cube_id +
                              "\" does not match file name");
        const auto split = split_context_target(cube, spec);
        const auto prediction = load_prediction(prediction_path(pred_dir, file.cube_id));
        if (prediction.cube_id != file.cube_id)
            throw FormatError("prediction archive for " + file.cube_id + " declares cube_id " +
                              prediction.cube_id);
        if (prediction.members.front().shape() != split.target.shape())
            throw GeometryMismatch("prediction for " + file.cube_id + " has shape " +
                                   to_string(prediction.members.front().shape()) + ", target is " +
                                   to_string(split.target.shape()));
        const auto choice = select_best_member(split.target, split.target_mask, prediction, spec,
                                               options.rescale, options.ssim);
        results[i] = {file.cube_id, choice.index, choice.scores};
    });

    EvaluationReport report;
    report.track = spec.name;
    report.per_cube = std::move(results);
    report.aggregate = aggregate(report.per_cube);
    report.provenance.rescale = options.rescale;
    report.provenance.ssim = options.ssim;
    report.provenance.workers = options.workers;
    return report;
}

nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json per_cube = nlohmann::json::array();
    for (const auto& row : report.per_cube)
        per_cube.push_back({{"cube_id", row.cube_id}, {"chosen_member", row.chosen_member}, {"scores", to_json(row.scores)}});

    const auto& a = report.aggregate;
    const auto& p = report.provenance;
    const auto spec = TrackSpec::of(report.track);
    return {
        {"track", std::string(to_string(report.track))},
        {"per_cube", per_cube},
        {"aggregate",
         {{"mean_mad", score_to_json(a.mean_mad)},
          {"mean_ols", score_to_json(a.mean_ols)},
          {"mean_emd", score_to_json(a.mean_emd)},
          {"mean_ssim", score_to_json(a.mean_ssim)},
          {"ens", score_to_json(a.ens)}}},
        {"provenance",
         {{"toolkit_version", p.toolkit_version},
          {"rescale_factors", {{"sf_mad", p.rescale.sf_mad}, {"sf_ndvi", p.rescale.sf_ndvi}, {"sf_ssim", p.rescale.sf_ssim}}},
          {"ssim", {{"window", p.ssim.window},
                    {"window_type", "gaussian"},
                    {"sigma", p.ssim.sigma},
                    {"k1", p.ssim.k1},
                    {"k2", p.ssim.k2},
                    {"data_range", p.ssim.data_range},
                    {"max_masked_fraction", p.ssim.max_masked_fraction}}},
          {"geometry", {{"context_frames", spec.context_frames}, {"target_frames", spec.target_frames}, {"ols_window", spec.ols_window}}},
          {"aggregation", "arithmetic mean per component over cubes where it is present; harmonic mean of the means"},
          {"member_selection", "highest per-cube ens; ties to lowest member index"}}},
    };
}

std::string render_report(const EvaluationReport& report) { return canonical_dump(report_to_json(report)); }

void emit_report(const EvaluationReport& report, const std::filesystem::path& path) {
    const std::string text = render_report(report);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << text;
    if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace enscore

#include "enscore/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "enscore/baselines.hpp"
#include "enscore/canonical_json.hpp"
#include "enscore/errors.hpp"
#include "enscore/evaluator.hpp"
#include "enscore/synthcube.hpp"

namespace enscore::cli {

namespace {

const std::vector<std::string> kTracks = {"iid", "ood", "extreme", "seasonal"};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("enscore", sink);
    logger->set_pattern("[%l] %v");
    const char* env = std::getenv("ENSCORE_LOG");
    const std::string level = env ? env : "error";
    if (level == "debug")
        logger->set_level(spdlog::level::debug);
    else if (level == "info")
        logger->set_level(spdlog::level::info);
    else
        logger->set_level(spdlog::level::err);
    return logger;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << text;
    if (!os) throw IoError("write failed: " + path);
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message, const nlohmann::json& extra = {}) {
    nlohmann::json doc = {{"error", kind}, {"message", message}};
    if (extra.is_object())
        for (const auto& [k, v] : extra.items()) doc[k] = v;
    err << doc.dump() << "\n";
}

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Scoring and harness toolkit for Earth surface forecasting minicubes", "enscore"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolkitVersion));

    std::string cube, pred, test, out_path, config, track_name = "iid";
    std::size_t workers = default_workers();
    std::uint64_t seed = 0;
    std::size_t n_cubes = 16;

    auto add_track = [&](CLI::App* sub) {
        sub->add_option("--track", track_name, "Challenge track geometry")
            ->check(CLI::IsMember(kTracks))
            ->capture_default_str();
    };
    auto add_workers = [&](CLI::App* sub) {
        sub->add_option("--workers", workers, "Worker threads (default: available parallelism)")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    };

    auto* score = app.add_subcommand("score", "Score one prediction archive against one minicube; prints a SubscoreSet JSON");
    score->add_option("--cube", cube, "Minicube archive (*.mc.zip)")->required()->check(CLI::ExistingFile);
    score->add_option("--pred", pred, "Prediction archive (*.pred.zip)")->required()->check(CLI::ExistingFile);
    add_track(score);

    auto* evaluate = app.add_subcommand("evaluate", "Score a prediction directory against a test directory");
    evaluate->add_option("--test", test, "Directory of minicube archives")->required()->check(CLI::ExistingDirectory);
    evaluate->add_option("--pred", pred, "Directory of <cube_id>.pred.zip archives")->required()->check(CLI::ExistingDirectory);
    evaluate->add_option("--out", out_path, "Report path (default: stdout)");
    add_track(evaluate);
    add_workers(evaluate);

    auto* baseline = app.add_subcommand("baseline", "Write persistence-baseline predictions for every cube");
    baseline->add_option("--test", test, "Directory of minicube archives")->required()->check(CLI::ExistingDirectory);
    baseline->add_option("--out", out_path, "Output directory for prediction archives")->required();
    baseline->add_option("--config", config, "Persistence config JSON ({\"fallback\": \"channel_mean\"|\"mid_gray\"})")
        ->check(CLI::ExistingFile);
    add_track(baseline);
    add_workers(baseline);

    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic minicube dataset and manifest");
    synth->add_option("--out", out_path, "Output directory")->required();
    synth->add_option("--seed", seed, "Random seed")->capture_default_str();
    synth->add_option("--n", n_cubes, "Number of cubes")->capture_default_str();
    synth->add_option("--config", config, "Synth config JSON (fields of SynthConfig; flags override it)")
        ->check(CLI::ExistingFile);
    add_track(synth);
    add_workers(synth);

    auto* split = app.add_subcommand("split", "Balanced quality-aware train / IID / OOD split of a manifest");
    split->add_option("--test", test, "Manifest JSON, or a directory holding manifest.json")->required()->check(CLI::ExistingPath);
    split->add_option("--config", config, "Split config JSON")->required()->check(CLI::ExistingFile);
    split->add_option("--seed", seed, "Seed overriding the config's seed");
    split->add_option("--out", out_path, "Output JSON path (default: stdout)");

    auto* inspect = app.add_subcommand("inspect", "Print cube metadata and quality statistics");
    inspect->add_option("--cube", cube, "Minicube archive")->required()->check(CLI::ExistingFile);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        // --help / --version
        if (dynamic_cast<const CLI::CallForHelp*>(&e) || dynamic_cast<const CLI::CallForAllHelp*>(&e)) {
            const CLI::App* target = &app;
            for (auto* sub : app.get_subcommands()) target = sub;
            out << target->help();
        } else {
            out << kToolkitVersion << "\n";
        }
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        print_error(err, "UsageError", e.what());
        const CLI::App* target = &app;
        for (auto* sub : app.get_subcommands()) target = sub;
        err << target->help();
        return kExitUsage;
    }

    auto log = make_logger(err);
    try {
        const TrackSpec spec = TrackSpec::parse(track_name);

        if (score->parsed()) {
            const Minicube minicube = load_minicube(cube);
            const auto parts = split_context_target(minicube, spec);
            const auto prediction = load_prediction(pred);
            if (prediction.cube_id != minicube.meta().cube_id)
                log->info("prediction cube_id {} differs from cube {}", prediction.cube_id, minicube.meta().cube_id);
            const auto choice = select_best_member(parts.target, parts.target_mask, prediction, spec);
            auto doc = to_json(choice.scores);
            doc["cube_id"] = minicube.meta().cube_id;
            doc["chosen_member"] = choice.index;
            doc["track"] = track_name;
            out << canonical_dump(doc);
        } else if (evaluate->parsed()) {
            log->info("evaluating {} against {} on track {} with {} workers", pred, test, track_name, workers);
            EvaluateOptions options;
            options.workers = workers;
            const auto report = evaluate_dataset(test, pred, spec, options);
            write_output(render_report(report), out_path, out);
        } else if (baseline->parsed()) {
            const PersistenceConfig cfg = config.empty() ? PersistenceConfig{} : persistence_config_from_json(read_json_file(config));
            const auto n = run_baseline(test, out_path, spec, cfg, workers);
            log->info("wrote {} persistence predictions to {}", n, out_path);
            out << canonical_dump({{"cubes", n}, {"out", out_path}, {"fallback", std::string(to_string(cfg.fallback))}});
        } else if (synth->parsed()) {
            SynthConfig cfg = config.empty() ? SynthConfig{} : synth_config_from_json(read_json_file(config));
            if (synth->count("--seed") || config.empty()) cfg.seed = seed;
            if (synth->count("--n") || config.empty()) cfg.n_cubes = n_cubes;
            if (synth->count("--track") || config.empty()) cfg.track = spec;
            validate(cfg);
            const auto records = generate_cubes(cfg, out_path, workers);
            log->info("generated {} cubes in {}", records.size(), out_path);
            out << canonical_dump({{"cubes", records.size()},
                                   {"manifest", (std::filesystem::path(out_path) / kManifestName).string()}});
        } else if (split->parsed()) {
            SplitConfig cfg = split_config_from_json(read_json_file(config));
            if (split->count("--seed")) cfg.seed = seed;
            std::filesystem::path manifest = test;
            if (std::filesystem::is_directory(manifest)) manifest /= kManifestName;
            const auto records = read_manifest(manifest);
            write_output(canonical_dump(to_json(split_dataset(records, cfg))), out_path, out);
        } else if (inspect->parsed()) {
            const Minicube minicube = load_minicube(cube);
            const auto& mask = minicube.mask();
            const std::size_t frames = minicube.frames();
            nlohmann::json clear = nlohmann::json::array();
            for (std::size_t f = 0; f < frames; ++f)
                clear.push_back(quality_fraction(ConstView<std::uint8_t>(mask).frames(f, f + 1)));
            out << canonical_dump({{"meta", minicube.meta()},
                                   {"recomputed_quality_fraction", quality_fraction(mask)},
                                   {"clear_fraction_per_frame", clear},
                                   {"shapes",
                                    {{"hires", minicube.hires().shape()},
                                     {"mask", minicube.mask().shape()},
                                     {"meso", minicube.meso().shape()},
                                     {"dem_hires", minicube.dem_hires().shape()},
                                     {"dem_meso", minicube.dem_meso().shape()}}}});
        }
    } catch (const MissingPrediction& e) {
        print_error(err, e.kind(), e.what(), {{"cube_id", e.cube_id()}});
        return kExitRuntime;
    } catch (const InfeasibleQuotas& e) {
        print_error(err, e.kind(), e.what(), {{"unfilled", e.unfilled()}});
        return kExitRuntime;
    } catch (const Error& e) {
        print_error(err, e.kind(), e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        print_error(err, "InternalError", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace enscore::cli

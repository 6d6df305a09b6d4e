#include "enscore/canonical_json.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace enscore {

namespace {

nlohmann::json rounded(const nlohmann::json& node) {
    if (node.is_number_float()) return round_significant(node.get<double>());
    if (node.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& item : node) out.push_back(rounded(item));
        return out;
    }
    if (node.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [key, value] : node.items()) out[key] = rounded(value);
        return out;
    }
    return node;
}

}  // namespace

double round_significant(double value) {
    if (!std::isfinite(value) || value == 0.0) return value;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*g", kCanonicalDigits, value);
    return std::strtod(buf, nullptr);
}

nlohmann::json score_to_json(const Score& score) { return score ? nlohmann::json(*score) : nlohmann::json(nullptr); }

nlohmann::json to_json(const SubscoreSet& scores) {
    return {{"mad", score_to_json(scores.mad)},
            {"ols", score_to_json(scores.ols)},
            {"emd", score_to_json(scores.emd)},
            {"ssim", score_to_json(scores.ssim)},
            {"ens", score_to_json(scores.ens)}};
}

std::string canonical_dump(const nlohmann::json& document) {
    // nlohmann::json objects are std::map-backed, so keys come out sorted; the
    // shortest round-trip form of a 6-digit double has at most 6 digits.
    return rounded(document).dump(2) + "\n";
}

}  // namespace enscore

#pragma once

#include <string>

#include <json.hpp>

#include "enscore/metrics.hpp"

namespace enscore {

// Significant digits kept for every floating-point value in emitted JSON.
inline constexpr int kCanonicalDigits = 6;

// Rounds a double to kCanonicalDigits significant digits.
double round_significant(double value);

// Scores become numbers; missing scores become null.
nlohmann::json score_to_json(const Score& score);
nlohmann::json to_json(const SubscoreSet& scores);

// Sorted keys, floats rounded to 6 significant digits, two-space indent,
// trailing LF. Identical documents give identical bytes.
std::string canonical_dump(const nlohmann::json& document);

}  // namespace enscore

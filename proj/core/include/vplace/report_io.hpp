#pragma once

// Plot-ready CSV and JSON encodings of analysis and simulation outputs.

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vplace/fractal.hpp"
#include "vplace/placement.hpp"

namespace vplace {

std::string_view to_string(D2Flag flag);

/// `epsilon,log_eps,log_sum_p2`
std::string curve_csv(const CorrelationCurve& curve);

/// `snapshot,d2,r2,flag`; flagged rows leave d2 and r2 empty.
std::string d2_series_csv(const D2Series& series);

/// `snapshot,n_t,reward`
std::string reward_csv(const RewardSeries& series);

nlohmann::json to_json(const AlgoParams& params);
AlgoParams algo_params_from_json(const nlohmann::json& j);

/// `{algorithm, mean_reward, params, seed}` plus the fulfilled-pickup
/// fraction and snapshot count.
nlohmann::json reward_summary_json(const RewardSeries& series);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace vplace

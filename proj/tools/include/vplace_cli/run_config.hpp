#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vplace/fractal.hpp"
#include "vplace/grid.hpp"
#include "vplace/ingestion.hpp"
#include "vplace/placement.hpp"
#include "vplace/synth.hpp"

namespace vplace::cli {

struct SynthSettings {
  AttractorSpec attractor{AttractorKind::sierpinski_triangle, 3990.0, 5.0, 5.0};
  double global_rate = 1.0;
  std::optional<std::int64_t> event_count;
  std::int64_t start_time = 25200;  // 07:00 on day 0
  double duration = 3600.0;
  TripLengthLaw trip_length;
  TripDurationLaw trip_duration;
};

struct FractalSettings {
  int scales = 12;
  double floor_factor = 10.0;
  double upper_fraction = 0.25;
  std::optional<FractalRange> range;
  double min_r_squared = 0.98;
  int min_scales = 4;
};

/// Everything one CLI invocation needs. Loaded from a JSON object; unknown
/// keys are rejected at every level and absent keys take the defaults
/// below. Flags override after loading.
///
/// Seeds: the global seed feeds every component through
/// derive_seed(seed, tag): tag "synth" for the stream generator and
/// "algo.<name>" for each placement run.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  GridSpec grid{100.0, 40, 40, 40.0, -80.0, 40.0};
  double tau = 180.0;
  std::set<int> excluded_hours{0, 1, 2, 3, 4, 5, 6};
  std::int64_t start_time = 0;
  std::optional<std::int64_t> end_time;
  std::optional<std::filesystem::path> input;
  RecordFormat input_format = RecordFormat::csv;
  SynthSettings synth;
  FractalSettings fractal;
  std::vector<AlgoParams> algorithms;  // seeds filled by resolve()

  /// Fills algorithm seeds from the global seed, sets the default
  /// algorithm list when empty and validates every section.
  void resolve();

  StreamSpec stream_spec() const;
  BucketOptions bucket_options() const;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

RunConfig load_config(const std::filesystem::path& path);

/// Params for a named algorithm: the config's entry when present,
/// otherwise the defaults.
AlgoParams params_for(const RunConfig& config, Algorithm algo);

}  // namespace vplace::cli

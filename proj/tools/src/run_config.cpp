#include "vplace_cli/run_config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "vplace/error.hpp"
#include "vplace/rng.hpp"

namespace vplace::cli {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects any it did not consume.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw ConfigError("unknown config key " + where(key));
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
auto rethrow_as_config(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const InputError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

GridSpec grid_from(Section s, const GridSpec& d) {
  GridSpec g;
  g.epsilon = s.get("epsilon", d.epsilon);
  g.rows = s.get("rows", d.rows);
  g.cols = s.get("cols", d.cols);
  g.origin_lat = s.get("origin_lat", d.origin_lat);
  g.origin_lon = s.get("origin_lon", d.origin_lon);
  g.ref_lat = s.get("ref_lat", s.get("origin_lat", d.origin_lat));
  s.finish();
  return g;
}

SynthSettings synth_from(Section s) {
  const SynthSettings d;
  SynthSettings out;
  out.attractor.kind = rethrow_as_config(s.where("attractor"), [&] {
    return parse_attractor_kind(s.get<std::string>("attractor", std::string(to_string(d.attractor.kind))));
  });
  out.attractor.scale = s.get("scale", d.attractor.scale);
  out.attractor.offset_east = s.get("offset_east", d.attractor.offset_east);
  out.attractor.offset_north = s.get("offset_north", d.attractor.offset_north);
  out.global_rate = s.get("global_rate", d.global_rate);
  if (s.has("event_count")) out.event_count = s.get<std::int64_t>("event_count", 0);
  else s.get<std::int64_t>("event_count", 0);
  out.start_time = s.get("start_time", d.start_time);
  out.duration = s.get("duration", d.duration);
  if (s.has("trip_length")) {
    Section t(s.raw("trip_length"), s.where("trip_length"));
    out.trip_length.kind = rethrow_as_config(t.where("law"), [&] {
      return parse_trip_length_kind(t.get<std::string>("law", std::string(to_string(d.trip_length.kind))));
    });
    out.trip_length.half_width = t.get("half_width", d.trip_length.half_width);
    t.finish();
  } else {
    s.get<int>("trip_length", 0);
  }
  if (s.has("trip_duration")) {
    Section t(s.raw("trip_duration"), s.where("trip_duration"));
    out.trip_duration.min_seconds = t.get("min", d.trip_duration.min_seconds);
    out.trip_duration.max_seconds = t.get("max", d.trip_duration.max_seconds);
    t.finish();
  } else {
    s.get<int>("trip_duration", 0);
  }
  s.finish();
  return out;
}

FractalSettings fractal_from(Section s) {
  const FractalSettings d;
  FractalSettings out;
  out.scales = s.get("scales", d.scales);
  out.floor_factor = s.get("floor_factor", d.floor_factor);
  out.upper_fraction = s.get("upper_fraction", d.upper_fraction);
  out.min_r_squared = s.get("min_r_squared", d.min_r_squared);
  out.min_scales = s.get("min_scales", d.min_scales);
  if (s.has("range")) {
    const auto r = s.get<std::vector<double>>("range", {});
    if (r.size() != 2 || !(r[0] > 0.0) || !(r[0] < r[1])) throw ConfigError(s.where("range") + " must be [lo, hi] with 0 < lo < hi");
    out.range = FractalRange{r[0], r[1]};
  } else {
    s.get<int>("range", 0);
  }
  s.finish();
  if (out.scales < 3) throw ConfigError("fractal.scales must be >= 3");
  if (!(out.floor_factor >= 1.0)) throw ConfigError("fractal.floor_factor must be >= 1");
  if (!(out.upper_fraction > 0.0 && out.upper_fraction <= 1.0)) throw ConfigError("fractal.upper_fraction must be in (0, 1]");
  if (!(out.min_r_squared >= 0.0 && out.min_r_squared <= 1.0)) throw ConfigError("fractal.min_r_squared must be in [0, 1]");
  if (out.min_scales < 3) throw ConfigError("fractal.min_scales must be >= 3");
  return out;
}

AlgoParams algo_from(Section s) {
  const auto name = s.get<std::string>("name", "");
  if (name.empty()) throw ConfigError(s.where("name") + " is required");
  const Algorithm algo = rethrow_as_config(s.where("name"), [&] { return parse_algorithm(name); });
  const AlgoParams d = AlgoParams::defaults(algo);
  AlgoParams p = d;
  p.epsilon_prime = s.get("epsilon_prime", d.epsilon_prime);
  p.history_m = s.get("history_m", d.history_m);
  p.min_samples_u = s.get("min_samples_u", d.min_samples_u);
  s.finish();
  return p;
}

}  // namespace

void RunConfig::resolve() {
  rethrow_as_config("grid", [&] { grid.validate(); });
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  for (int h : excluded_hours)
    if (h < 0 || h > 23) throw ConfigError("excluded_hours entries must lie in 0..23");
  if (end_time && *end_time < start_time) throw ConfigError("end_time precedes start_time");
  if (algorithms.empty())
    for (auto a : {Algorithm::urand_nh, Algorithm::pp_lh, Algorithm::ftl_ch, Algorithm::opt})
      algorithms.push_back(AlgoParams::defaults(a));
  std::set<Algorithm> names;
  for (auto& a : algorithms) {
    if (!names.insert(a.algorithm).second)
      throw ConfigError("algorithm " + std::string(to_string(a.algorithm)) + " listed twice");
    a.seed = derive_seed(seed, "algo." + std::string(to_string(a.algorithm)));
    rethrow_as_config("algorithm " + std::string(to_string(a.algorithm)), [&] { a.validate(grid); });
  }
  rethrow_as_config("synth", [&] { stream_spec().validate(); });
}

StreamSpec RunConfig::stream_spec() const {
  StreamSpec s;
  s.grid = grid;
  s.attractor = synth.attractor;
  s.global_rate = synth.global_rate;
  s.event_count = synth.event_count;
  s.start_time = synth.start_time;
  s.duration = synth.duration;
  s.trip_length = synth.trip_length;
  s.trip_duration = synth.trip_duration;
  s.seed = derive_seed(seed, "synth");
  return s;
}

BucketOptions RunConfig::bucket_options() const {
  BucketOptions b;
  b.tau = tau;
  b.excluded_hours = excluded_hours;
  b.start_time = start_time;
  b.end_time = end_time;
  return b;
}

RunConfig config_from_json(const json& j) {
  Section s(j, "");
  const RunConfig d;
  RunConfig c;
  c.seed = s.get("seed", d.seed);
  c.out = s.get<std::string>("out", d.out.string());
  if (s.has("grid")) c.grid = grid_from(Section(s.raw("grid"), "grid"), d.grid);
  else s.get<int>("grid", 0);
  c.tau = s.get("tau", d.tau);
  c.excluded_hours = s.get("excluded_hours", d.excluded_hours);
  c.start_time = s.get("start_time", d.start_time);
  if (s.has("end_time")) c.end_time = s.get<std::int64_t>("end_time", 0);
  else s.get<int>("end_time", 0);
  if (s.has("input")) c.input = s.get<std::string>("input", "");
  else s.get<int>("input", 0);
  c.input_format = rethrow_as_config("input_format", [&] {
    return parse_record_format(s.get<std::string>("input_format", "csv"));
  });
  if (s.has("synth")) c.synth = synth_from(Section(s.raw("synth"), "synth"));
  else s.get<int>("synth", 0);
  if (s.has("fractal")) c.fractal = fractal_from(Section(s.raw("fractal"), "fractal"));
  else s.get<int>("fractal", 0);
  if (s.has("algorithms")) {
    const json& list = s.raw("algorithms");
    if (!list.is_array()) throw ConfigError("algorithms must be an array");
    for (std::size_t k = 0; k < list.size(); ++k)
      c.algorithms.push_back(algo_from(Section(list[k], "algorithms[" + std::to_string(k) + "]")));
  } else {
    s.get<int>("algorithms", 0);
  }
  s.finish();
  return c;
}

json to_json(const RunConfig& c) {
  json algos = json::array();
  for (const auto& a : c.algorithms)
    algos.push_back({{"name", to_string(a.algorithm)},
                     {"epsilon_prime", a.epsilon_prime},
                     {"history_m", a.history_m},
                     {"min_samples_u", a.min_samples_u},
                     {"seed", a.seed}});
  json synth = {{"attractor", to_string(c.synth.attractor.kind)},
                {"scale", c.synth.attractor.scale},
                {"offset_east", c.synth.attractor.offset_east},
                {"offset_north", c.synth.attractor.offset_north},
                {"global_rate", c.synth.global_rate},
                {"event_count", c.synth.event_count ? json(*c.synth.event_count) : json(nullptr)},
                {"start_time", c.synth.start_time},
                {"duration", c.synth.duration},
                {"trip_length", {{"law", to_string(c.synth.trip_length.kind)}, {"half_width", c.synth.trip_length.half_width}}},
                {"trip_duration", {{"min", c.synth.trip_duration.min_seconds}, {"max", c.synth.trip_duration.max_seconds}}}};
  json fractal = {{"scales", c.fractal.scales},
                  {"floor_factor", c.fractal.floor_factor},
                  {"upper_fraction", c.fractal.upper_fraction},
                  {"range", c.fractal.range ? json::array({c.fractal.range->lo, c.fractal.range->hi}) : json(nullptr)},
                  {"min_r_squared", c.fractal.min_r_squared},
                  {"min_scales", c.fractal.min_scales}};
  return {{"seed", c.seed},
          {"out", c.out.generic_string()},
          {"grid",
           {{"epsilon", c.grid.epsilon},
            {"rows", c.grid.rows},
            {"cols", c.grid.cols},
            {"origin_lat", c.grid.origin_lat},
            {"origin_lon", c.grid.origin_lon},
            {"ref_lat", c.grid.ref_lat}}},
          {"tau", c.tau},
          {"excluded_hours", c.excluded_hours},
          {"start_time", c.start_time},
          {"end_time", c.end_time ? json(*c.end_time) : json(nullptr)},
          {"input", c.input ? json(c.input->generic_string()) : json(nullptr)},
          {"input_format", c.input_format == RecordFormat::csv ? "csv" : "jsonl"},
          {"synth", synth},
          {"fractal", fractal},
          {"algorithms", algos}};
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

AlgoParams params_for(const RunConfig& config, Algorithm algo) {
  for (const auto& a : config.algorithms)
    if (a.algorithm == algo) return a;
  auto p = AlgoParams::defaults(algo);
  p.seed = derive_seed(config.seed, "algo." + std::string(to_string(algo)));
  return p;
}

}  // namespace vplace::cli

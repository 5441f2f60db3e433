#include "vplace_cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vplace/error.hpp"
#include "vplace/fractal.hpp"
#include "vplace/ingestion.hpp"
#include "vplace/report_io.hpp"
#include "vplace/synth.hpp"

namespace vplace::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

fs::path input_path(const RunConfig& config) { return config.input ? *config.input : config.out / "stream.csv"; }

RecordFormat input_format(const RunConfig& config) {
  if (config.input) return config.input_format;
  return RecordFormat::csv;
}

struct LoadedStream {
  fs::path path;
  std::size_t records = 0;
  BucketResult bucketed;
};

LoadedStream load_stream(const RunConfig& config) {
  LoadedStream s;
  s.path = input_path(config);
  if (!fs::is_regular_file(s.path)) throw IoError("input stream " + s.path.string() + " does not exist");
  std::ifstream in(s.path, std::ios::binary);
  if (!in) throw IoError("cannot open input stream " + s.path.string());
  const auto records = parse_records(in, input_format(config));
  s.records = records.size();
  s.bucketed = bucket_snapshots(records, config.grid, config.bucket_options());
  return s;
}

json diagnostics_json(const BucketDiagnostics& d) {
  return {{"parsed_events", d.parsed_events},
          {"retained_pickups", d.retained_pickups},
          {"retained_dropoffs", d.retained_dropoffs},
          {"skipped_excluded", d.skipped_excluded},
          {"skipped_out_of_bounds", d.skipped_out_of_bounds},
          {"skipped_out_of_window", d.skipped_out_of_window},
          {"total_slots", d.total_slots},
          {"retained_slots", d.retained_slots}};
}

json estimate_json(const D2Estimate& e) {
  return {{"d2", e.d2}, {"r_squared", e.r_squared}, {"range", {e.range_lo, e.range_hi}}, {"n_scales", e.n_scales}};
}

CorrelationCurve restrict(const CorrelationCurve& curve, double lo, double hi) {
  CorrelationCurve out;
  const double tol = 1e-9 * hi;
  for (const auto& p : curve.points)
    if (p.epsilon >= lo - tol && p.epsilon <= hi + tol) out.points.push_back(p);
  return out;
}

// Median resolution floor over snapshots with enough pickups. Per-snapshot
// fits share one range, so it has to sit above a typical snapshot's floor.
std::optional<double> typical_floor(const SnapshotSeries& series, std::span<const double> ladder, double factor) {
  std::vector<double> floors;
  for (const auto& snap : series.snapshots) {
    const auto pts = pickup_points(snap, series.grid);
    if (pts.size() < 2) continue;
    if (auto f = resolution_floor(correlation_sum(pts, ladder), static_cast<std::int64_t>(pts.size()), factor))
      floors.push_back(*f);
  }
  if (floors.empty()) return std::nullopt;
  auto mid = floors.begin() + static_cast<std::ptrdiff_t>(floors.size() / 2);
  std::nth_element(floors.begin(), mid, floors.end());
  return *mid;
}

}  // namespace

void cmd_synth(const RunConfig& config, std::ostream& log) {
  const StreamSpec spec = config.stream_spec();
  const auto records = gen_ride_stream(spec);
  std::ostringstream csv;
  write_records_csv(csv, records);
  const fs::path stream = config.out / "stream.csv";
  write_file_atomic(stream, csv.str());
  const json manifest = {{"command", "synth"},
                         {"config", to_json(config)},
                         {"seed", config.seed},
                         {"stream_seed", spec.seed},
                         {"theoretical_d2", config.synth.attractor.theoretical_d2()},
                         {"records", records.size()},
                         {"stream", "stream.csv"}};
  write_file_atomic(config.out / "manifest.json", dump(manifest));
  log << fmt::format("synth: wrote {} records to {}\n", records.size(), stream.string());
}

void cmd_fractal(const RunConfig& config, std::ostream& log) {
  const auto loaded = load_stream(config);
  const SnapshotSeries& series = loaded.bucketed.series;
  std::vector<PlanarPoint> pooled;
  for (const auto& snap : series.snapshots) {
    auto pts = pickup_points(snap, series.grid);
    pooled.insert(pooled.end(), pts.begin(), pts.end());
  }
  if (pooled.size() < 2) throw InputError("stream " + loaded.path.string() + " has fewer than 2 retained pickups");

  const auto& fc = config.fractal;
  const auto ladder = default_ladder(pooled, fc.scales);
  const auto curve = correlation_sum(pooled, ladder);

  FractalRange range;
  bool detected = false;
  if (fc.range) {
    range = *fc.range;
  } else {
    const double hi = ladder.back() * fc.upper_fraction;
    double lo = ladder.front();
    if (auto f = typical_floor(series, ladder, fc.floor_factor)) lo = *f;
    else if (auto g = resolution_floor(curve, static_cast<std::int64_t>(pooled.size()), fc.floor_factor)) lo = *g;
    lo = std::min(lo, hi);
    const auto window = restrict(curve, lo, hi);
    std::optional<FractalRange> found;
    if (window.points.size() >= 3) {
      const int need = std::min<int>(fc.min_scales, static_cast<int>(window.points.size()));
      found = detect_fractal_range(window, fc.min_r_squared, need);
    }
    if (!found) found = detect_fractal_range(curve, fc.min_r_squared, fc.min_scales);
    if (found) {
      range = *found;
      detected = true;
    } else {
      range = {lo, hi};
    }
  }

  const D2Series d2 = weekly_d2_series(series, ladder, range);
  std::optional<D2Estimate> pooled_fit;
  try {
    pooled_fit = fit_d2(curve, range.lo, range.hi);
  } catch (const RangeError&) {
  }

  write_file_atomic(config.out / "curve.csv", curve_csv(curve));
  write_file_atomic(config.out / "d2_series.csv", d2_series_csv(d2));
  json summary = {{"command", "fractal"},
                  {"config", to_json(config)},
                  {"seed", config.seed},
                  {"input", loaded.path.generic_string()},
                  {"records", loaded.records},
                  {"snapshots", series.snapshots.size()},
                  {"pickups", pooled.size()},
                  {"range", {{"lo", range.lo}, {"hi", range.hi}, {"detected", detected}}},
                  {"pooled", pooled_fit ? estimate_json(*pooled_fit) : json(nullptr)},
                  {"fitted", d2.summary.fitted},
                  {"flagged", d2.summary.flagged}};
  if (d2.summary.fitted > 0) {
    summary["min"] = d2.summary.min;
    summary["max"] = d2.summary.max;
    summary["mean"] = d2.summary.mean;
  } else {
    summary["min"] = summary["max"] = summary["mean"] = nullptr;
  }
  write_file_atomic(config.out / "fractal_summary.json", dump(summary));
  if (d2.summary.fitted > 0)
    log << fmt::format("fractal: {} snapshots fitted, mean D2 {:.4f} over [{:.6g}, {:.6g}] m\n", d2.summary.fitted,
                       d2.summary.mean, range.lo, range.hi);
  else
    log << fmt::format("fractal: all {} snapshots flagged\n", d2.summary.flagged);
}

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  const auto loaded = load_stream(config);
  const SnapshotSeries& series = loaded.bucketed.series;
  const auto& diag = loaded.bucketed.diagnostics;
  if (diag.retained_pickups == 0 && diag.retained_dropoffs == 0)
    throw InputError("stream " + loaded.path.string() + " has no retained events");

  std::vector<AlgoParams> runs = config.algorithms;
  if (std::none_of(runs.begin(), runs.end(), [](const AlgoParams& p) { return p.algorithm == Algorithm::opt; }))
    runs.push_back(params_for(config, Algorithm::opt));
  for (const auto& p : runs)
    if (series.snapshots.size() < min_series_length(p))
      throw ConfigError(fmt::format("series has {} snapshots; {} needs at least {}", series.snapshots.size(),
                                    to_string(p.algorithm), min_series_length(p)));

  std::vector<std::future<RewardSeries>> pending;
  for (const auto& p : runs) pending.push_back(std::async(std::launch::async, [&series, p] { return simulate(series, p); }));
  std::vector<RewardSeries> results;
  for (auto& f : pending) results.push_back(f.get());

  // History runs start scoring later; compare every run over the snapshots
  // all of them scored.
  std::int64_t common_from = 0;
  for (const auto& r : results)
    if (!r.per_snapshot.empty()) common_from = std::max(common_from, r.per_snapshot.front().snapshot);
  const RewardSeries* opt = nullptr;
  for (const auto& r : results)
    if (r.algorithm == Algorithm::opt) opt = &r;

  json algos = json::array();
  for (const auto& r : results) {
    const std::string file = fmt::format("rewards_{}.csv", to_string(r.algorithm));
    write_file_atomic(config.out / file, reward_csv(r));
    double sum = 0.0;
    std::int64_t scored = 0, violations = 0;
    for (const auto& e : r.per_snapshot) {
      if (const RewardEntry* o = opt->find(e.snapshot); o && o->matched < e.matched) ++violations;
      if (e.snapshot < common_from || e.empty) continue;
      sum += e.reward;
      ++scored;
    }
    const double mean = scored == 0 ? 0.0 : sum / static_cast<double>(scored);
    auto s = reward_summary_json(r);
    s["mean_reward_run"] = s["mean_reward"];
    s["mean_reward"] = mean;
    s["opt_violations"] = violations;
    s["file"] = file;
    algos.push_back(std::move(s));
    log << fmt::format("simulate: {:<8} mean reward {:.4f}\n", to_string(r.algorithm), mean);
  }
  const json summary = {{"command", "simulate"},
                        {"config", to_json(config)},
                        {"seed", config.seed},
                        {"input", loaded.path.generic_string()},
                        {"records", loaded.records},
                        {"snapshots", series.snapshots.size()},
                        {"diagnostics", diagnostics_json(diag)},
                        {"compared_from", common_from},
                        {"algorithms", algos}};
  write_file_atomic(config.out / "summary.json", dump(summary));
}

void cmd_report(const RunConfig& config, const std::vector<fs::path>& sources, std::ostream& log) {
  std::vector<fs::path> files;
  for (const auto& src : sources) files.push_back(fs::is_directory(src) ? src / "summary.json" : src);
  if (files.empty()) files.push_back(config.out / "summary.json");

  fmt::memory_buffer out;
  fmt::format_to(std::back_inserter(out), "source,algorithm,mean_reward,fulfilled_fraction,snapshots,seed\n");
  std::size_t rows = 0;
  for (const auto& file : files) {
    json j;
    try {
      j = json::parse(read_file(file));
    } catch (const json::parse_error& e) {
      throw InputError(file.string() + " is not valid JSON: " + e.what());
    }
    if (!j.contains("algorithms") || !j.at("algorithms").is_array())
      throw InputError(file.string() + " is not a simulate summary");
    for (const auto& a : j.at("algorithms")) {
      try {
        fmt::format_to(std::back_inserter(out), "{},{},{:.9f},{:.9f},{},{}\n", file.generic_string(),
                       a.at("algorithm").get<std::string>(), a.at("mean_reward").get<double>(),
                       a.at("fulfilled_fraction").get<double>(), a.at("snapshots").get<std::int64_t>(),
                       a.at("seed").get<std::uint64_t>());
      } catch (const json::exception& e) {
        throw InputError(file.string() + ": malformed algorithm entry: " + e.what());
      }
      ++rows;
    }
  }
  write_file_atomic(config.out / "report.csv", fmt::to_string(out));
  log << fmt::format("report: {} rows from {} summaries\n", rows, files.size());
}

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> algos;
  std::string input;
  std::string input_format;
  std::vector<std::string> sources;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("--out", o.out, "output directory");
}

void add_input(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--input", o.input, "ride stream to read (default <out>/stream.csv)");
  cmd->add_option("--format", o.input_format, "input format: csv or jsonl");
}

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out = o.out;
  if (!o.input.empty()) c.input = o.input;
  if (!o.input_format.empty()) {
    try {
      c.input_format = parse_record_format(o.input_format);
    } catch (const InputError& e) {
      throw ConfigError(std::string("--format: ") + e.what());
    }
  }
  if (!o.algos.empty()) {
    std::vector<AlgoParams> chosen;
    for (const auto& name : o.algos) {
      Algorithm a;
      try {
        a = parse_algorithm(name);
      } catch (const InputError& e) {
        throw ConfigError(std::string("--algo: ") + e.what());
      }
      if (std::any_of(chosen.begin(), chosen.end(), [a](const AlgoParams& p) { return p.algorithm == a; })) continue;
      chosen.push_back(params_for(c, a));
    }
    c.algorithms = std::move(chosen);
  }
  c.resolve();
  return c;
}

int fail(std::ostream& err, int status, std::string_view kind, std::string_view message) {
  err << json{{"error", kind}, {"message", message}, {"status", status}}.dump() << '\n';
  return status;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vehicle placement experiments on gridded ride-request streams", "vplace"};
  app.require_subcommand(1);
  Overrides o;
  auto* synth = app.add_subcommand("synth", "generate a synthetic ride stream");
  auto* fractal = app.add_subcommand("fractal", "correlation dimension of pickup locations");
  auto* sim = app.add_subcommand("simulate", "score placement algorithms on a stream");
  auto* report = app.add_subcommand("report", "merge simulate summaries into one CSV");
  for (auto* cmd : {synth, fractal, sim, report}) add_common(cmd, o);
  add_input(fractal, o);
  add_input(sim, o);
  sim->add_option("--algo", o.algos, "algorithm to run (repeatable): urand_nh, pp_lh, ftl_ch, opt");
  report->add_option("summaries", o.sources, "summary.json files or directories");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(err, 2, "usage", e.what());
  }

  try {
    const RunConfig config = build_config(o);
    if (synth->parsed()) cmd_synth(config, out);
    else if (fractal->parsed()) cmd_fractal(config, out);
    else if (sim->parsed()) cmd_simulate(config, out);
    else {
      std::vector<fs::path> sources(o.sources.begin(), o.sources.end());
      cmd_report(config, sources, out);
    }
    return 0;
  } catch (const ConfigError& e) {
    return fail(err, 2, "config", e.what());
  } catch (const IoError& e) {
    return fail(err, 3, "io", e.what());
  } catch (const RowError& e) {
    return fail(err, 4, "input", e.what());
  } catch (const InputError& e) {
    return fail(err, 4, "input", e.what());
  } catch (const RangeError& e) {
    return fail(err, 5, "range", e.what());
  } catch (const std::exception& e) {
    return fail(err, 1, "internal", e.what());
  }
}

}  // namespace vplace::cli

#include "vplace/report_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

#include <fmt/format.h>

namespace vplace {

std::string_view to_string(D2Flag flag) {
  switch (flag) {
    case D2Flag::ok: return "ok";
    case D2Flag::too_few_points: return "too_few_points";
    case D2Flag::degenerate: return "degenerate";
  }
  return "unknown";
}

std::string curve_csv(const CorrelationCurve& curve) {
  fmt::memory_buffer out;
  fmt::format_to(std::back_inserter(out), "epsilon,log_eps,log_sum_p2\n");
  for (const auto& p : curve.points)
    fmt::format_to(std::back_inserter(out), "{:.9g},{:.12g},{:.12g}\n", p.epsilon, p.log_epsilon, p.log_sum_p2);
  return fmt::to_string(out);
}

std::string d2_series_csv(const D2Series& series) {
  fmt::memory_buffer out;
  fmt::format_to(std::back_inserter(out), "snapshot,d2,r2,flag\n");
  for (const auto& row : series.per_snapshot) {
    if (row.flag == D2Flag::ok)
      fmt::format_to(std::back_inserter(out), "{},{:.9f},{:.9f},{}\n", row.snapshot, row.estimate.d2,
                     row.estimate.r_squared, to_string(row.flag));
    else
      fmt::format_to(std::back_inserter(out), "{},,,{}\n", row.snapshot, to_string(row.flag));
  }
  return fmt::to_string(out);
}

std::string reward_csv(const RewardSeries& series) {
  fmt::memory_buffer out;
  fmt::format_to(std::back_inserter(out), "snapshot,n_t,reward\n");
  for (const auto& e : series.per_snapshot)
    fmt::format_to(std::back_inserter(out), "{},{},{:.9f}\n", e.snapshot, e.placed, e.reward);
  return fmt::to_string(out);
}

nlohmann::json to_json(const AlgoParams& p) {
  return {{"algorithm", to_string(p.algorithm)},
          {"epsilon_prime", p.epsilon_prime},
          {"history_m", p.history_m},
          {"min_samples_u", p.min_samples_u},
          {"seed", p.seed}};
}

AlgoParams algo_params_from_json(const nlohmann::json& j) {
  AlgoParams p;
  p.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  p.epsilon_prime = j.at("epsilon_prime").get<double>();
  p.history_m = j.at("history_m").get<int>();
  p.min_samples_u = j.at("min_samples_u").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

nlohmann::json reward_summary_json(const RewardSeries& series) {
  return {{"algorithm", to_string(series.algorithm)},
          {"mean_reward", series.mean_reward()},
          {"fulfilled_fraction", series.fulfilled_fraction()},
          {"snapshots", series.per_snapshot.size()},
          {"params", to_json(series.params)},
          {"seed", series.params.seed}};
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace vplace

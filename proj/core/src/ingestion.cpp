#include "vplace/ingestion.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace vplace {

namespace {

constexpr std::array<std::string_view, 6> kFields = {
    "pickup_time", "pickup_lat", "pickup_lon", "dropoff_lat", "dropoff_lon", "dropoff_time"};

// Upper bound on the number of tau-slots one bucketing pass may allocate.
constexpr std::int64_t kMaxSlots = 5'000'000;

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(',', pos);
    out.push_back(trim(line.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::size_t row, std::string_view field) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last)
    throw RowError(row, fmt::format("field '{}' is not a valid number: '{}'", field, text));
  return value;
}

void validate_record(const RequestRecord& r, std::size_t row) {
  for (double v : {r.pickup_lat, r.pickup_lon, r.dropoff_lat, r.dropoff_lon})
    if (!std::isfinite(v)) throw RowError(row, "non-finite coordinate");
  if (r.dropoff_time < r.pickup_time) throw RowError(row, "dropoff_time precedes pickup_time");
}

std::vector<RequestRecord> parse_csv(std::istream& in) {
  std::vector<RequestRecord> records;
  std::string line;
  std::size_t row = 0;
  std::array<std::size_t, kFields.size()> column{};
  std::size_t width = 0;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++row;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto cells = split_commas(text);
    if (!have_header) {
      width = cells.size();
      for (std::size_t f = 0; f < kFields.size(); ++f) {
        const auto it = std::find(cells.begin(), cells.end(), kFields[f]);
        if (it == cells.end())
          throw RowError(row, fmt::format("header is missing column '{}'", kFields[f]));
        column[f] = static_cast<std::size_t>(it - cells.begin());
      }
      have_header = true;
      continue;
    }
    if (cells.size() != width)
      throw RowError(row, fmt::format("expected {} fields, found {}", width, cells.size()));
    RequestRecord r;
    r.pickup_time = parse_number<std::int64_t>(cells[column[0]], row, kFields[0]);
    r.pickup_lat = parse_number<double>(cells[column[1]], row, kFields[1]);
    r.pickup_lon = parse_number<double>(cells[column[2]], row, kFields[2]);
    r.dropoff_lat = parse_number<double>(cells[column[3]], row, kFields[3]);
    r.dropoff_lon = parse_number<double>(cells[column[4]], row, kFields[4]);
    r.dropoff_time = parse_number<std::int64_t>(cells[column[5]], row, kFields[5]);
    validate_record(r, row);
    records.push_back(r);
  }
  return records;
}

std::vector<RequestRecord> parse_jsonl(std::istream& in) {
  std::vector<RequestRecord> records;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw RowError(row, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw RowError(row, "expected a JSON object");
    auto integer = [&](std::string_view key) -> std::int64_t {
      const auto it = j.find(key);
      if (it == j.end()) throw RowError(row, fmt::format("missing field '{}'", key));
      if (!it->is_number_integer()) throw RowError(row, fmt::format("field '{}' must be an integer", key));
      return it->get<std::int64_t>();
    };
    auto real = [&](std::string_view key) -> double {
      const auto it = j.find(key);
      if (it == j.end()) throw RowError(row, fmt::format("missing field '{}'", key));
      if (!it->is_number()) throw RowError(row, fmt::format("field '{}' must be a number", key));
      return it->get<double>();
    };
    RequestRecord r;
    r.pickup_time = integer(kFields[0]);
    r.pickup_lat = real(kFields[1]);
    r.pickup_lon = real(kFields[2]);
    r.dropoff_lat = real(kFields[3]);
    r.dropoff_lon = real(kFields[4]);
    r.dropoff_time = integer(kFields[5]);
    validate_record(r, row);
    records.push_back(r);
  }
  return records;
}

std::int64_t floor_div(double num, double den) { return static_cast<std::int64_t>(std::floor(num / den)); }

}  // namespace

RecordFormat parse_record_format(std::string_view tag) {
  if (tag == "csv") return RecordFormat::csv;
  if (tag == "jsonl") return RecordFormat::jsonl;
  throw InputError(fmt::format("unknown record format '{}' (expected csv or jsonl)", tag));
}

std::vector<RequestRecord> parse_records(std::istream& in, RecordFormat format) {
  return format == RecordFormat::csv ? parse_csv(in) : parse_jsonl(in);
}

void write_records_csv(std::ostream& out, const std::vector<RequestRecord>& records) {
  out << kRecordCsvHeader << '\n';
  fmt::memory_buffer buf;
  for (const auto& r : records) {
    buf.clear();
    fmt::format_to(std::back_inserter(buf), "{},{:.9f},{:.9f},{:.9f},{:.9f},{}\n", r.pickup_time,
                   r.pickup_lat, r.pickup_lon, r.dropoff_lat, r.dropoff_lon, r.dropoff_time);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

int hour_of_day(std::int64_t t) noexcept {
  constexpr std::int64_t day = 86400;
  return static_cast<int>(((t % day) + day) % day / 3600);
}

BucketResult bucket_snapshots(const std::vector<RequestRecord>& records, const GridSpec& grid,
                              const BucketOptions& options) {
  grid.validate();
  if (!(options.tau > 0.0) || !std::isfinite(options.tau)) throw InputError("tau must be > 0");
  for (int h : options.excluded_hours)
    if (h < 0 || h > 23) throw InputError("excluded hours must lie in 0..23");
  if (options.end_time && *options.end_time < options.start_time)
    throw InputError("end_time precedes start_time");

  const auto start = options.start_time;
  auto in_window = [&](std::int64_t t) {
    return t >= start && (!options.end_time || t < *options.end_time);
  };

  std::int64_t total_slots = 0;
  if (options.end_time) {
    total_slots = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(*options.end_time - start) / options.tau));
  } else {
    std::optional<std::int64_t> latest;
    for (const auto& r : records)
      for (auto t : {r.pickup_time, r.dropoff_time})
        if (in_window(t) && (!latest || t > *latest)) latest = t;
    if (latest) total_slots = floor_div(static_cast<double>(*latest - start), options.tau) + 1;
  }
  if (total_slots > kMaxSlots)
    throw InputError(fmt::format("series would span {} slots; check start_time and tau", total_slots));

  BucketResult result;
  auto& series = result.series;
  auto& diag = result.diagnostics;
  series.grid = grid;
  series.tau = options.tau;
  series.start_time = start;
  series.excluded_hours = options.excluded_hours;
  diag.total_slots = total_slots;

  std::vector<std::int64_t> slot_to_index(static_cast<std::size_t>(total_slots), -1);
  for (std::int64_t k = 0; k < total_slots; ++k) {
    const auto slot_start =
        start + static_cast<std::int64_t>(std::floor(static_cast<double>(k) * options.tau));
    if (options.excluded_hours.contains(hour_of_day(slot_start))) continue;
    slot_to_index[static_cast<std::size_t>(k)] = static_cast<std::int64_t>(series.snapshots.size());
    Snapshot s;
    s.index = static_cast<std::int64_t>(series.snapshots.size());
    s.slot = k;
    s.dropoffs = CountMatrix(grid.rows, grid.cols);
    s.pickups = CountMatrix(grid.rows, grid.cols);
    series.snapshots.push_back(std::move(s));
  }
  diag.retained_slots = static_cast<std::int64_t>(series.snapshots.size());

  auto add_event = [&](std::int64_t t, double lat, double lon, EventKind kind) {
    ++diag.parsed_events;
    if (!in_window(t)) {
      ++diag.skipped_out_of_window;
      return;
    }
    const auto slot = floor_div(static_cast<double>(t - start), options.tau);
    if (options.excluded_hours.contains(hour_of_day(t)) || slot >= total_slots ||
        slot_to_index[static_cast<std::size_t>(slot)] < 0) {
      ++diag.skipped_excluded;
      return;
    }
    const PlanarPoint p = project_to_plane(lat, lon, grid);
    const auto cell = cell_of(p, grid);
    if (!cell) {
      ++diag.skipped_out_of_bounds;
      return;
    }
    Snapshot& snap = series.snapshots[static_cast<std::size_t>(slot_to_index[static_cast<std::size_t>(slot)])];
    if (kind == EventKind::pickup) {
      ++snap.pickups[*cell];
      ++diag.retained_pickups;
    } else {
      ++snap.dropoffs[*cell];
      ++diag.retained_dropoffs;
    }
    snap.events.push_back({static_cast<std::uint32_t>(grid.flat(*cell)), kind,
                           static_cast<double>(t - start), p.east, p.north});
  };

  for (const auto& r : records) {
    add_event(r.pickup_time, r.pickup_lat, r.pickup_lon, EventKind::pickup);
    add_event(r.dropoff_time, r.dropoff_lat, r.dropoff_lon, EventKind::dropoff);
  }
  for (auto& s : series.snapshots)
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const EventStamp& a, const EventStamp& b) { return a.time < b.time; });
  return result;
}

}  // namespace vplace

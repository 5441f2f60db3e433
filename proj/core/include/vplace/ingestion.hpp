#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "vplace/grid.hpp"

namespace vplace {

/// One ride request: when and where it was picked up and dropped off.
/// Times are local epoch seconds.
struct RequestRecord {
  std::int64_t pickup_time = 0;
  double pickup_lat = 0.0;
  double pickup_lon = 0.0;
  double dropoff_lat = 0.0;
  double dropoff_lon = 0.0;
  std::int64_t dropoff_time = 0;

  friend bool operator==(const RequestRecord&, const RequestRecord&) = default;
};

enum class RecordFormat { csv, jsonl };

/// Parses "csv" or "jsonl"; throws InputError otherwise.
RecordFormat parse_record_format(std::string_view tag);

/// Column order of the CSV header written by write_records.
inline constexpr std::string_view kRecordCsvHeader =
    "pickup_time,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon,dropoff_time";

/// Reads records in file order. CSV needs a header naming all six fields
/// (any order); JSONL takes one object per line with the same keys. Blank
/// lines are ignored. Malformed rows throw RowError.
std::vector<RequestRecord> parse_records(std::istream& in, RecordFormat format);

/// Writes CSV in the column order of kRecordCsvHeader.
void write_records_csv(std::ostream& out, const std::vector<RequestRecord>& records);

struct BucketOptions {
  double tau = 180.0;
  std::set<int> excluded_hours{0, 1, 2, 3, 4, 5, 6};
  std::int64_t start_time = 0;
  /// Exclusive end. When absent the series ends with the slot of the
  /// latest in-window event.
  std::optional<std::int64_t> end_time;
};

/// Event accounting for one bucketing pass. Each record contributes one
/// pickup event and one drop-off event.
struct BucketDiagnostics {
  std::int64_t parsed_events = 0;
  std::int64_t retained_pickups = 0;
  std::int64_t retained_dropoffs = 0;
  std::int64_t skipped_excluded = 0;       // hour-of-day in the exclusion set
  std::int64_t skipped_out_of_bounds = 0;  // projects outside the grid
  std::int64_t skipped_out_of_window = 0;  // before start_time or at/after end_time
  std::int64_t total_slots = 0;            // every tau-slot in [start, end)
  std::int64_t retained_slots = 0;         // slots not starting in an excluded hour

  std::int64_t retained() const { return retained_pickups + retained_dropoffs; }
  std::int64_t skipped() const {
    return skipped_excluded + skipped_out_of_bounds + skipped_out_of_window;
  }
};

struct BucketResult {
  SnapshotSeries series;
  BucketDiagnostics diagnostics;
};

/// Hour of day (0-23) of a local epoch timestamp.
int hour_of_day(std::int64_t local_epoch_seconds) noexcept;

/// Buckets pickups into P_t and drop-offs into D_t by floor((t - start) / tau).
/// Slots whose start hour is excluded are omitted from the series, so
/// Snapshot::index is contiguous while Snapshot::slot skips them. Every
/// retained event is also kept as an EventStamp.
BucketResult bucket_snapshots(const std::vector<RequestRecord>& records, const GridSpec& grid,
                              const BucketOptions& options);

}  // namespace vplace

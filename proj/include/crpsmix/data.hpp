#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crpsmix/experts.hpp"

namespace crpsmix {

// ---------------------------------------------------------------------------
// Synthetic mixtures of triangular generators
// ---------------------------------------------------------------------------

/// A run of steps whose generator weights move linearly from start to end.
struct MixtureSegment {
    std::size_t length;
    std::vector<double> start_weights;
    std::vector<double> end_weights;
};

class MixtureSchedule {
public:
    /// Throws ArgumentError on empty segments, negative weights, or weights
    /// that do not sum to 1 within 1e-12.
    explicit MixtureSchedule(std::vector<MixtureSegment> segments);

    /// Equal-length segments with a single leader rotating through the generators.
    static MixtureSchedule rotating_leader(std::size_t generators, std::size_t segment_length, std::size_t steps);
    /// Equal-length segments blending linearly from one leader to the next.
    static MixtureSchedule smooth_rotation(std::size_t generators, std::size_t segment_length, std::size_t steps);

    std::size_t length() const { return length_; }
    std::size_t generators() const { return segments_.front().start_weights.size(); }
    std::vector<double> weights_at(std::size_t t) const;

private:
    std::vector<MixtureSegment> segments_;
    std::size_t length_ = 0;
};

/// Draws one outcome per step: a generator picked with the schedule's
/// weights, then a sample from its triangular density. Bit-reproducible per seed.
std::vector<double> synth_stream(std::span<const TriangularExpert> generators, const MixtureSchedule& schedule,
                                 std::size_t steps, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Hourly load / temperature records
// ---------------------------------------------------------------------------

/// Hours since 1970-01-01 00:00 (naive local time, no zone conversion).
using HourStamp = std::int64_t;

HourStamp parse_timestamp(std::string_view text);
std::string format_timestamp(HourStamp hour);

struct CivilHour {
    int year;
    unsigned month;  // 1..12
    unsigned day;    // 1..31
    int hour;        // 0..23
};
CivilHour civil_hour(HourStamp hour);
/// Position within the year in months: 0 at Jan 1 00:00, 11 at Dec 1 00:00.
double month_position(HourStamp hour);

struct LoadRecord {
    HourStamp hour;
    double load;
    double temperature;
    /// True when the previous record is more than one hour earlier.
    bool follows_gap = false;
};

struct CsvSchema {
    char delimiter = ',';
    std::string timestamp_column = "timestamp";
    std::string load_column = "load";
    /// Averaged when more than one column is named.
    std::vector<std::string> temperature_columns{"temperature"};
    /// Loads outside this range are clipped into it.
    std::optional<std::pair<double, double>> clip;

    /// GEFCom2014 load-track layout: TIMESTAMP, LOAD and station columns w1..w25.
    static CsvSchema gefcom2014();
};

struct RowError {
    std::size_t line;
    std::string message;
};

struct DataQualityReport {
    std::size_t rows_read = 0;
    std::size_t rows_parsed = 0;
    std::size_t rows_missing = 0;
    std::size_t rows_clipped = 0;
    std::size_t gaps = 0;
    std::size_t missing_hours = 0;
    std::vector<RowError> errors;
    std::vector<std::string> warnings;
};

struct LoadData {
    std::vector<LoadRecord> records;
    DataQualityReport report;
};

/// Parses a header-led CSV. Rows with an empty load or temperature are
/// counted as missing; unparsable rows are collected and become fatal
/// (DataError) only above 1% of data rows. Non-increasing timestamps are
/// a fatal validation error naming the line.
LoadData load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
LoadData parse_load_csv(std::istream& in, const CsvSchema& schema = {});

/// Clips loads into [lo, hi]; returns how many were moved.
std::size_t clip_loads(std::vector<LoadRecord>& records, double lo, double hi);

/// Records before the boundary train, the rest test; throws ArgumentError if either side is empty.
std::pair<std::vector<LoadRecord>, std::vector<LoadRecord>> split_train_test(std::span<const LoadRecord> records,
                                                                             HourStamp boundary);
/// Boundary leaving the last test_hours records for testing.
HourStamp default_split_boundary(std::span<const LoadRecord> records, std::size_t test_hours = 8760);

/// Writes the normalized record CSV: timestamp,load,temperature.
void write_records_csv(std::ostream& out, std::span<const LoadRecord> records);
void write_quality_report(std::ostream& out, const DataQualityReport& report);

// ---------------------------------------------------------------------------
// Calendar segmentation
// ---------------------------------------------------------------------------

enum class Season { Winter, Spring, Summer, Autumn };
enum class DayPeriod { Night, Morning, Day, Evening };

inline constexpr std::array<Season, 4> kSeasons{Season::Winter, Season::Spring, Season::Summer, Season::Autumn};
inline constexpr std::array<DayPeriod, 4> kDayPeriods{DayPeriod::Night, DayPeriod::Morning, DayPeriod::Day,
                                                      DayPeriod::Evening};

std::string_view to_string(Season s);
std::string_view to_string(DayPeriod p);

struct CalendarConfig {
    /// First month (1..12) of winter, spring, summer, autumn.
    std::array<unsigned, 4> season_start_month{12, 3, 6, 9};
    /// First hour of night, morning, day, evening; each period lasts 6 hours.
    std::array<int, 4> period_start_hour{0, 6, 12, 18};
};

struct CalendarLabel {
    Season season;
    DayPeriod period;
};

CalendarLabel calendar_label(HourStamp hour, const CalendarConfig& config = {});
std::vector<CalendarLabel> calendar_segments(std::span<const LoadRecord> records, const CalendarConfig& config = {});

}  // namespace crpsmix

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "crpsmix/data.hpp"
#include "crpsmix/errors.hpp"

namespace crpsmix {

namespace chr = std::chrono;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
        if (pos == std::string_view::npos) return out;
        start = pos + 1;
    }
}

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

HourStamp parse_timestamp(std::string_view text) {
    text = trim(text);
    std::vector<long> fields;
    char first_sep = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] >= '0' && text[i] <= '9') {
            long v = 0;
            const auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), v);
            if (ec != std::errc()) break;
            fields.push_back(v);
            i = static_cast<std::size_t>(ptr - text.data());
        } else {
            if (first_sep == 0) first_sep = text[i];
            ++i;
        }
    }
    if (fields.size() < 4 || fields.size() > 6 || (first_sep != '-' && first_sep != '/')) {
        throw ArgumentError("unrecognized timestamp '" + std::string(text) + "'");
    }
    long y = 0;
    long m = 0;
    long d = 0;
    if (first_sep == '-') {
        y = fields[0], m = fields[1], d = fields[2];
    } else {
        m = fields[0], d = fields[1], y = fields[2];
    }
    const long hour = fields[3];
    const long minute = fields.size() > 4 ? fields[4] : 0;
    const long second = fields.size() > 5 ? fields[5] : 0;
    const chr::year_month_day ymd{chr::year{static_cast<int>(y)}, chr::month{static_cast<unsigned>(m)},
                                  chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hour < 0 || hour > 24 || minute != 0 || second != 0) {
        throw ArgumentError("timestamp '" + std::string(text) + "' is not a valid whole hour");
    }
    // Hour 24 denotes midnight at the end of the day.
    return static_cast<HourStamp>(chr::sys_days{ymd}.time_since_epoch().count()) * 24 + hour;
}

CivilHour civil_hour(HourStamp hour) {
    const auto days = static_cast<int>(hour >= 0 ? hour / 24 : (hour - 23) / 24);
    const int h = static_cast<int>(hour - static_cast<HourStamp>(days) * 24);
    const chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
    return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h};
}

std::string format_timestamp(HourStamp hour) {
    const CivilHour c = civil_hour(hour);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:00", c.year, c.month, c.day, c.hour);
    return buf;
}

double month_position(HourStamp hour) {
    const CivilHour c = civil_hour(hour);
    const chr::year_month_day_last last{chr::year{c.year}, chr::month_day_last{chr::month{c.month}}};
    const double days_in_month = static_cast<unsigned>(last.day());
    return static_cast<double>(c.month - 1) + (static_cast<double>(c.day - 1) + c.hour / 24.0) / days_in_month;
}

CsvSchema CsvSchema::gefcom2014() {
    CsvSchema s;
    s.timestamp_column = "TIMESTAMP";
    s.load_column = "LOAD";
    s.temperature_columns.clear();
    for (int i = 1; i <= 25; ++i) s.temperature_columns.push_back("w" + std::to_string(i));
    return s;
}

LoadData parse_load_csv(std::istream& in, const CsvSchema& schema) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("CSV input is empty");
    ++line_no;
    const auto header = split(line, schema.delimiter);
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column.emplace(std::string(header[i]), i);
    auto locate = [&](const std::string& name) {
        const auto it = column.find(name);
        if (it == column.end()) throw DataError("CSV header lacks column '" + name + "'");
        return it->second;
    };
    const std::size_t ts_col = locate(schema.timestamp_column);
    const std::size_t load_col = locate(schema.load_column);
    if (schema.temperature_columns.empty()) throw DataError("schema names no temperature column");
    std::vector<std::size_t> temp_cols;
    for (const auto& name : schema.temperature_columns) temp_cols.push_back(locate(name));
    std::size_t needed = std::max(ts_col, load_col);
    for (std::size_t c : temp_cols) needed = std::max(needed, c);

    LoadData data;
    DataQualityReport& rep = data.report;
    std::size_t previous_line = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++rep.rows_read;
        const auto fields = split(line, schema.delimiter);
        if (fields.size() <= needed) {
            rep.errors.push_back({line_no, "expected at least " + std::to_string(needed + 1) + " fields"});
            continue;
        }
        HourStamp stamp = 0;
        try {
            stamp = parse_timestamp(fields[ts_col]);
        } catch (const ArgumentError& e) {
            rep.errors.push_back({line_no, e.what()});
            continue;
        }
        if (fields[load_col].empty() ||
            std::any_of(temp_cols.begin(), temp_cols.end(), [&](std::size_t c) { return fields[c].empty(); })) {
            ++rep.rows_missing;
            continue;
        }
        const auto load = to_double(fields[load_col]);
        double temp_sum = 0.0;
        bool temps_ok = true;
        for (std::size_t c : temp_cols) {
            const auto t = to_double(fields[c]);
            temps_ok = temps_ok && t.has_value();
            if (t) temp_sum += *t;
        }
        if (!load || !temps_ok) {
            rep.errors.push_back({line_no, "non-numeric load or temperature"});
            continue;
        }
        LoadRecord rec{stamp, *load, temp_sum / static_cast<double>(temp_cols.size())};
        if (!data.records.empty()) {
            const HourStamp prev = data.records.back().hour;
            if (stamp <= prev) {
                throw DataError("line " + std::to_string(line_no) + ": timestamp " + format_timestamp(stamp) +
                                (stamp == prev ? " duplicates" : " precedes") + " line " +
                                std::to_string(previous_line));
            }
            if (stamp - prev > 1) {
                rec.follows_gap = true;
                ++rep.gaps;
                rep.missing_hours += static_cast<std::size_t>(stamp - prev - 1);
            }
        }
        if (schema.clip) {
            const auto [lo, hi] = *schema.clip;
            if (rec.load < lo || rec.load > hi) {
                rep.warnings.push_back("line " + std::to_string(line_no) + ": load " + fmt(rec.load) +
                                       " clipped into [" + fmt(lo) + ", " + fmt(hi) + "]");
                rec.load = std::clamp(rec.load, lo, hi);
                ++rep.rows_clipped;
            }
        }
        data.records.push_back(rec);
        previous_line = line_no;
        ++rep.rows_parsed;
    }
    if (rep.rows_read > 0 && static_cast<double>(rep.errors.size()) > 0.01 * static_cast<double>(rep.rows_read)) {
        std::string msg = std::to_string(rep.errors.size()) + " of " + std::to_string(rep.rows_read) +
                          " rows failed to parse";
        for (std::size_t i = 0; i < std::min<std::size_t>(rep.errors.size(), 5); ++i) {
            msg += "; line " + std::to_string(rep.errors[i].line) + ": " + rep.errors[i].message;
        }
        throw DataError(msg);
    }
    return data;
}

LoadData load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_load_csv(in, schema);
}

std::size_t clip_loads(std::vector<LoadRecord>& records, double lo, double hi) {
    std::size_t moved = 0;
    for (auto& r : records) {
        if (r.load < lo || r.load > hi) {
            r.load = std::clamp(r.load, lo, hi);
            ++moved;
        }
    }
    return moved;
}

std::pair<std::vector<LoadRecord>, std::vector<LoadRecord>> split_train_test(std::span<const LoadRecord> records,
                                                                             HourStamp boundary) {
    const auto mid = std::partition_point(records.begin(), records.end(),
                                          [&](const LoadRecord& r) { return r.hour < boundary; });
    std::vector<LoadRecord> train(records.begin(), mid);
    std::vector<LoadRecord> test(mid, records.end());
    if (train.empty() || test.empty()) throw ArgumentError("train/test split leaves one side empty");
    return {std::move(train), std::move(test)};
}

HourStamp default_split_boundary(std::span<const LoadRecord> records, std::size_t test_hours) {
    if (records.size() <= test_hours) {
        throw ArgumentError("need more than " + std::to_string(test_hours) + " records for the default split");
    }
    return records[records.size() - test_hours].hour;
}

void write_records_csv(std::ostream& out, std::span<const LoadRecord> records) {
    out << "timestamp,load,temperature\n";
    for (const auto& r : records) out << format_timestamp(r.hour) << ',' << fmt(r.load) << ',' << fmt(r.temperature) << '\n';
}

void write_quality_report(std::ostream& out, const DataQualityReport& report) {
    out << "rows_read=" << report.rows_read << '\n'
        << "rows_parsed=" << report.rows_parsed << '\n'
        << "rows_missing=" << report.rows_missing << '\n'
        << "rows_clipped=" << report.rows_clipped << '\n'
        << "gaps=" << report.gaps << '\n'
        << "missing_hours=" << report.missing_hours << '\n'
        << "row_errors=" << report.errors.size() << '\n';
    for (const auto& e : report.errors) out << "error.line" << e.line << '=' << e.message << '\n';
}

std::string_view to_string(Season s) {
    switch (s) {
        case Season::Winter: return "winter";
        case Season::Spring: return "spring";
        case Season::Summer: return "summer";
        case Season::Autumn: return "autumn";
    }
    return "?";
}

std::string_view to_string(DayPeriod p) {
    switch (p) {
        case DayPeriod::Night: return "night";
        case DayPeriod::Morning: return "morning";
        case DayPeriod::Day: return "day";
        case DayPeriod::Evening: return "evening";
    }
    return "?";
}

namespace {

// Index i whose cyclic interval [starts[i], starts[i+1]) contains value.
template <typename T>
std::size_t cyclic_slot(const std::array<T, 4>& starts, T value, T cycle) {
    for (std::size_t i = 0; i < 4; ++i) {
        const T begin = starts[i];
        const T end = starts[(i + 1) % 4];
        const T span = (end - begin + cycle) % cycle;
        const T offset = (value - begin + cycle) % cycle;
        if (offset < span) return i;
    }
    throw ArgumentError("calendar boundaries do not partition the cycle");
}

}  // namespace

CalendarLabel calendar_label(HourStamp hour, const CalendarConfig& config) {
    const CivilHour c = civil_hour(hour);
    std::array<int, 4> months{};
    for (std::size_t i = 0; i < 4; ++i) months[i] = static_cast<int>(config.season_start_month[i]) - 1;
    const auto season = cyclic_slot(months, static_cast<int>(c.month) - 1, 12);
    const auto period = cyclic_slot(config.period_start_hour, c.hour, 24);
    return {kSeasons[season], kDayPeriods[period]};
}

std::vector<CalendarLabel> calendar_segments(std::span<const LoadRecord> records, const CalendarConfig& config) {
    std::vector<CalendarLabel> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(calendar_label(r.hour, config));
    return out;
}

}  // namespace crpsmix

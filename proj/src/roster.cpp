#include "crpsmix/roster.hpp"

#include <string>

#include "crpsmix/errors.hpp"

namespace crpsmix {

namespace {

std::string expert_name(std::optional<Season> s, std::optional<DayPeriod> p) {
    if (!s) return "anytime";
    std::string name(to_string(*s));
    if (p) name += "/" + std::string(to_string(*p));
    return name;
}

}  // namespace

std::string_view to_string(ConfidenceMode mode) {
    switch (mode) {
        case ConfidenceMode::Smooth: return "smooth";
        case ConfidenceMode::Binary: return "binary";
        case ConfidenceMode::Off: return "off";
    }
    return "?";
}

ConfidenceMode parse_confidence_mode(std::string_view text) {
    if (text == "smooth") return ConfidenceMode::Smooth;
    if (text == "binary") return ConfidenceMode::Binary;
    if (text == "off") return ConfidenceMode::Off;
    throw ArgumentError("confidence mode must be smooth, binary or off");
}

Roster::Roster(std::vector<RosterExpert> experts, RosterConfig config, std::vector<std::string> notes)
    : experts_(std::move(experts)), config_(config), notes_(std::move(notes)) {
    if (experts_.empty()) throw ArgumentError("roster needs at least one expert");
    for (const auto& e : experts_) {
        if (e.period && !e.season) throw ArgumentError("day-period experts must also name a season");
        e.model.validate();
    }
}

ConfidenceSchedule Roster::season_schedule(Season s, ConfidenceMode mode) const {
    if (mode == ConfidenceMode::Off) return ConfidenceSchedule::always();
    const double ramp = mode == ConfidenceMode::Smooth ? config_.season_ramp : 0.0;
    const double start = static_cast<double>(config_.calendar.season_start_month[static_cast<std::size_t>(s)]) - 1.0;
    return ConfidenceSchedule{{ConfidenceBlock{start, start + 3.0, ramp, ramp}}, 12.0};
}

ConfidenceSchedule Roster::day_schedule(DayPeriod p, ConfidenceMode mode) const {
    if (mode == ConfidenceMode::Off) return ConfidenceSchedule::always();
    const double ramp = mode == ConfidenceMode::Smooth ? config_.day_ramp : 0.0;
    const double start = config_.calendar.period_start_hour[static_cast<std::size_t>(p)];
    return ConfidenceSchedule{{ConfidenceBlock{start, start + 5.0, ramp, ramp}}, 24.0};
}

double Roster::confidence(std::size_t expert, HourStamp hour, ConfidenceMode mode) const {
    const RosterExpert& e = experts_.at(expert);
    if (!e.season || mode == ConfidenceMode::Off) return 1.0;
    const double season_t = month_position(hour);
    const double season = confidence_at(season_schedule(*e.season, mode), season_t);
    if (!e.period) return season;
    const double day_t = civil_hour(hour).hour;
    return combined_confidence(season_schedule(*e.season, mode), day_schedule(*e.period, mode), season_t, day_t);
}

std::vector<double> Roster::confidences(HourStamp hour, ConfidenceMode mode) const {
    std::vector<double> out(experts_.size());
    for (std::size_t i = 0; i < experts_.size(); ++i) out[i] = confidence(i, hour, mode);
    return out;
}

std::vector<GridCdf> Roster::forecasts(double temperature, const GridDomain& domain) const {
    std::vector<GridCdf> out;
    out.reserve(experts_.size());
    for (const auto& e : experts_) out.push_back(conditional_load_cdf(e.model, temperature, domain));
    return out;
}

Roster fit_roster(std::span<const LoadRecord> train, const RosterConfig& config) {
    if (config.components < 1 || config.components > 3) throw ArgumentError("roster components must be 1, 2 or 3");
    const auto labels = calendar_segments(train, config.calendar);

    struct Cell {
        std::optional<Season> season;
        std::optional<DayPeriod> period;
    };
    std::vector<Cell> cells{{std::nullopt, std::nullopt}};
    for (Season s : kSeasons) cells.push_back({s, std::nullopt});
    for (Season s : kSeasons) {
        for (DayPeriod p : kDayPeriods) cells.push_back({s, p});
    }

    std::vector<RosterExpert> experts;
    std::vector<std::string> notes;
    std::vector<std::string> failures;
    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
        const Cell& cell = cells[idx];
        std::vector<Point2> points;
        for (std::size_t r = 0; r < train.size(); ++r) {
            if (cell.season && labels[r].season != *cell.season) continue;
            if (cell.period && labels[r].period != *cell.period) continue;
            points.push_back({train[r].temperature, train[r].load});
        }
        const std::string name = expert_name(cell.season, cell.period);
        const std::uint64_t seed = config.seed + 0x9E3779B97F4A7C15ULL * (idx + 1);
        std::optional<GmmFit> fit;
        std::string last_error;
        for (int k = config.components; k >= 1 && !fit; --k) {
            try {
                fit = fit_gmm_em(points, k, seed, config.em);
                if (k != config.components) {
                    notes.push_back(name + ": fitted with " + std::to_string(k) + " components after: " + last_error);
                }
            } catch (const DegenerateFitError& e) {
                last_error = e.what();
            } catch (const ArgumentError& e) {
                last_error = e.what();
            }
        }
        if (!fit) {
            failures.push_back(name + " (" + std::to_string(points.size()) + " points): " + last_error);
            continue;
        }
        experts.push_back({name, cell.season, cell.period, fit->model, points.size()});
    }
    if (!failures.empty()) {
        std::string msg = "could not fit " + std::to_string(failures.size()) + " expert(s)";
        for (const auto& f : failures) msg += "; " + f;
        throw DataError(msg);
    }
    return Roster(std::move(experts), config, std::move(notes));
}

}  // namespace crpsmix

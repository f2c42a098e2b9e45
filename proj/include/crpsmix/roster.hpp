#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crpsmix/data.hpp"
#include "crpsmix/experts.hpp"

namespace crpsmix {

enum class ConfidenceMode { Smooth, Binary, Off };

std::string_view to_string(ConfidenceMode mode);
/// Accepts "smooth", "binary", "off"; throws ArgumentError otherwise.
ConfidenceMode parse_confidence_mode(std::string_view text);

struct RosterConfig {
    /// Mixture components per expert; a failed fit retries with fewer.
    int components = 2;
    std::uint64_t seed = 1;
    CalendarConfig calendar;
    /// Ramp lengths used in smooth mode, in months and hours.
    double season_ramp = 1.5;
    double day_ramp = 2.0;
    EmOptions em;
};

/// One temperature-conditioned expert. An empty season means the expert is
/// active all year; an empty period means all day.
struct RosterExpert {
    std::string name;
    std::optional<Season> season;
    std::optional<DayPeriod> period;
    Gmm2D model;
    std::size_t training_points = 0;
};

/// The 21-expert calendar roster: one anytime expert, four seasonal
/// experts, and sixteen season x day-period experts, in that order.
class Roster {
public:
    Roster(std::vector<RosterExpert> experts, RosterConfig config, std::vector<std::string> notes = {});

    std::size_t size() const { return experts_.size(); }
    const std::vector<RosterExpert>& experts() const { return experts_; }
    const RosterConfig& config() const { return config_; }
    /// Fallbacks taken while fitting, one line each.
    const std::vector<std::string>& notes() const { return notes_; }

    ConfidenceSchedule season_schedule(Season s, ConfidenceMode mode) const;
    ConfidenceSchedule day_schedule(DayPeriod p, ConfidenceMode mode) const;

    double confidence(std::size_t expert, HourStamp hour, ConfidenceMode mode) const;
    std::vector<double> confidences(HourStamp hour, ConfidenceMode mode) const;
    std::vector<GridCdf> forecasts(double temperature, const GridDomain& domain) const;

private:
    std::vector<RosterExpert> experts_;
    RosterConfig config_;
    std::vector<std::string> notes_;
};

/// Fits every expert on the training records of its calendar cell. Throws
/// DataError listing each expert that could not be fitted even with one
/// component.
Roster fit_roster(std::span<const LoadRecord> train, const RosterConfig& config = {});

}  // namespace crpsmix

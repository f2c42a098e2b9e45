#include <algorithm>
#include <cmath>
#include <limits>

#include "crpsmix/errors.hpp"
#include "crpsmix/experts.hpp"

namespace crpsmix {

namespace {

double block_value(const ConfidenceBlock& b, double t) {
    if (t >= b.plateau_start && t <= b.plateau_end) return 1.0;
    if (t < b.plateau_start) {
        const double lead = b.plateau_start - t;
        return b.ramp_up > 0.0 && lead < b.ramp_up ? 1.0 - lead / b.ramp_up : 0.0;
    }
    const double lag = t - b.plateau_end;
    return b.ramp_down > 0.0 && lag < b.ramp_down ? 1.0 - lag / b.ramp_down : 0.0;
}

}  // namespace

ConfidenceSchedule ConfidenceSchedule::always() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return ConfidenceSchedule{{ConfidenceBlock{-inf, inf}}, std::nullopt};
}

double confidence_at(const ConfidenceSchedule& schedule, double t) {
    double best = 0.0;
    if (schedule.period) {
        const double period = *schedule.period;
        if (!(period > 0.0)) throw ArgumentError("schedule period must be positive");
        double phase = std::fmod(t, period);
        if (phase < 0.0) phase += period;
        for (const auto& b : schedule.blocks) {
            for (double shift : {-period, 0.0, period}) best = std::max(best, block_value(b, phase + shift));
        }
    } else {
        for (const auto& b : schedule.blocks) best = std::max(best, block_value(b, t));
    }
    return std::clamp(best, 0.0, 1.0);
}

double combined_confidence(const ConfidenceSchedule& season, const ConfidenceSchedule& day, double season_t,
                           double day_t) {
    return confidence_at(season, season_t) * confidence_at(day, day_t);
}

}  // namespace crpsmix

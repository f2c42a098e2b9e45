#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "crpsmix/data.hpp"
#include "crpsmix/experts.hpp"
#include "crpsmix/game.hpp"
#include "crpsmix/roster.hpp"

namespace crpsmix {

// ---------------------------------------------------------------------------
// Synthetic three-expert study
// ---------------------------------------------------------------------------

struct SyntheticPreset {
    double a = 0.0;
    double b = 10.0;
    std::array<TriangularExpert, 3> generators{
        TriangularExpert{0.0, 2.0, 5.0},
        TriangularExpert{2.5, 5.0, 7.5},
        TriangularExpert{5.0, 8.0, 10.0},
    };
    std::size_t segment_length = 250;
};

struct SyntheticOptions {
    /// 1: one leader per segment. 2: weights glide from one leader to the next.
    int method = 1;
    AggregationMode mode = AggregationMode::AA;
    double alpha = 0.0;
    std::size_t steps = 3000;
    std::uint64_t seed = 1;
    std::size_t grid = 1024;
    /// Learner CDF is kept every this many steps; 0 keeps none.
    std::size_t snapshot_interval = 0;
    SyntheticPreset preset;
};

struct SyntheticRun {
    GridDomain domain;
    std::vector<double> outcomes;
    GameLog log;
    RegretReport report;
    /// (b-a)/2 ln N for AA, 2(b-a) ln N for WA.
    double theorem_bound;
    std::vector<std::pair<std::size_t, GridCdf>> snapshots;
};

/// Experts are the three generators themselves. Throws ArgumentError on
/// zero steps or an unknown method.
SyntheticRun run_synthetic(const SyntheticOptions& options);

/// One row per kept step: t followed by the CDF row a,b,d,f_1..f_d.
void write_snapshots_csv(std::ostream& out, std::span<const std::pair<std::size_t, GridCdf>> snapshots);

// ---------------------------------------------------------------------------
// Load study
// ---------------------------------------------------------------------------

struct LoadOptions {
    AggregationMode mode = AggregationMode::AA;
    ConfidenceMode confidence = ConfidenceMode::Smooth;
    double alpha = 0.0;
    std::size_t grid = 1024;
    RosterConfig roster;
    /// Hours of day at which quantile bands are recorded.
    std::vector<int> band_hours{12};
    std::vector<double> band_levels{0.05, 0.25, 0.75, 0.95};
};

struct QuantileBand {
    HourStamp hour;
    double outcome;
    std::vector<double> quantiles;
};

struct LoadRun {
    GridDomain domain;
    Roster roster;
    std::vector<HourStamp> hours;
    GameLog log;
    RegretReport report;
    std::vector<QuantileBand> bands;
    /// Test loads moved into [a, b].
    std::size_t clipped = 0;
};

/// Domain [0, 1.05 max train load]. Each test hour is forecast from the
/// temperature of the preceding record.
LoadRun run_load_study(std::span<const LoadRecord> train, std::span<const LoadRecord> test,
                       const LoadOptions& options);

/// timestamp, then one confidence column per expert.
void write_confidence_csv(std::ostream& out, const Roster& roster, std::span<const HourStamp> hours,
                          ConfidenceMode mode);
void write_bands_csv(std::ostream& out, std::span<const double> levels, std::span<const QuantileBand> bands);

}  // namespace crpsmix

#include "crpsmix/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>

#include "crpsmix/errors.hpp"

namespace crpsmix {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

SyntheticRun run_synthetic(const SyntheticOptions& options) {
    if (options.steps == 0) throw ArgumentError("synthetic run needs at least one step");
    if (options.method != 1 && options.method != 2) throw ArgumentError("mixing method must be 1 or 2");
    const SyntheticPreset& preset = options.preset;
    const GridDomain domain(preset.a, preset.b, options.grid);

    const auto schedule =
        options.method == 1
            ? MixtureSchedule::rotating_leader(preset.generators.size(), preset.segment_length, options.steps)
            : MixtureSchedule::smooth_rotation(preset.generators.size(), preset.segment_length, options.steps);
    std::vector<double> outcomes = synth_stream(preset.generators, schedule, options.steps, options.seed);

    std::vector<GridCdf> experts;
    for (const auto& g : preset.generators) experts.push_back(triangular_cdf(g, domain));

    GameConfig config;
    config.mode = options.mode;
    config.alpha = options.alpha;
    config.domain = domain;
    Game game(config, experts.size());

    std::vector<std::pair<std::size_t, GridCdf>> snapshots;
    for (std::size_t t = 0; t < outcomes.size(); ++t) {
        GridCdf learner = game.step(experts, outcomes[t]);
        if (options.snapshot_interval > 0 && (t + 1) % options.snapshot_interval == 0) {
            snapshots.emplace_back(t + 1, std::move(learner));
        }
    }
    const double bound = crps_regret_bound(options.mode, domain, experts.size());
    RegretReport report = regret_report(game.log(), bound);
    return SyntheticRun{domain, std::move(outcomes), game.log(), std::move(report), bound, std::move(snapshots)};
}

void write_snapshots_csv(std::ostream& out, std::span<const std::pair<std::size_t, GridCdf>> snapshots) {
    for (const auto& [t, cdf] : snapshots) out << t << ',' << to_csv_row(cdf) << '\n';
}

LoadRun run_load_study(std::span<const LoadRecord> train, std::span<const LoadRecord> test,
                       const LoadOptions& options) {
    if (train.empty() || test.empty()) throw ArgumentError("load study needs training and test records");
    double max_load = 0.0;
    for (const auto& r : train) max_load = std::max(max_load, r.load);
    if (!(max_load > 0.0)) throw DataError("training loads must include a positive value");
    const GridDomain domain(0.0, 1.05 * max_load, options.grid);

    Roster roster = fit_roster(train, options.roster);

    std::vector<LoadRecord> replay(test.begin(), test.end());
    const std::size_t clipped = clip_loads(replay, domain.a(), domain.b());

    GameConfig config;
    config.mode = options.mode;
    config.alpha = options.alpha;
    config.domain = domain;
    config.confidence_enabled = options.confidence != ConfidenceMode::Off;
    Game game(config, roster.size());

    std::vector<HourStamp> hours;
    std::vector<QuantileBand> bands;
    double temperature = train.back().temperature;
    for (const auto& rec : replay) {
        const auto forecasts = roster.forecasts(temperature, domain);
        const auto conf = roster.confidences(rec.hour, options.confidence);
        const GridCdf learner = game.step(forecasts, conf, rec.load);
        hours.push_back(rec.hour);
        const int hod = civil_hour(rec.hour).hour;
        if (std::find(options.band_hours.begin(), options.band_hours.end(), hod) != options.band_hours.end()) {
            QuantileBand band{rec.hour, rec.load, {}};
            for (double tau : options.band_levels) band.quantiles.push_back(quantile(learner, tau));
            bands.push_back(std::move(band));
        }
        temperature = rec.temperature;
    }
    RegretReport report = regret_report(game.log(), crps_regret_bound(options.mode, domain, roster.size()));
    return LoadRun{domain, std::move(roster), std::move(hours), game.log(), std::move(report), std::move(bands),
                   clipped};
}

void write_confidence_csv(std::ostream& out, const Roster& roster, std::span<const HourStamp> hours,
                          ConfidenceMode mode) {
    out << "timestamp";
    for (const auto& e : roster.experts()) out << ',' << e.name;
    out << '\n';
    for (HourStamp h : hours) {
        out << format_timestamp(h);
        for (double c : roster.confidences(h, mode)) out << ',' << fmt(c);
        out << '\n';
    }
}

void write_bands_csv(std::ostream& out, std::span<const double> levels, std::span<const QuantileBand> bands) {
    out << "timestamp,y";
    for (double tau : levels) out << ",q" << fmt(tau);
    out << '\n';
    for (const auto& b : bands) {
        out << format_timestamp(b.hour) << ',' << fmt(b.outcome);
        for (double q : b.quantiles) out << ',' << fmt(q);
        out << '\n';
    }
}

}  // namespace crpsmix

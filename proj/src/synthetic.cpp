#include <cmath>

#include "crpsmix/data.hpp"
#include "crpsmix/errors.hpp"
#include "crpsmix/random.hpp"

namespace crpsmix {

namespace {

void check_weights(const std::vector<double>& w, std::size_t generators) {
    if (w.size() != generators) throw ArgumentError("segment weight vectors differ in length");
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0)) throw ArgumentError("mixture weights must be non-negative");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ArgumentError("mixture weights must sum to 1");
}

std::vector<double> one_hot(std::size_t n, std::size_t i) {
    std::vector<double> w(n, 0.0);
    w[i] = 1.0;
    return w;
}

}  // namespace

MixtureSchedule::MixtureSchedule(std::vector<MixtureSegment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw ArgumentError("mixture schedule needs at least one segment");
    const std::size_t g = segments_.front().start_weights.size();
    if (g == 0) throw ArgumentError("mixture schedule needs at least one generator");
    for (const auto& seg : segments_) {
        if (seg.length == 0) throw ArgumentError("mixture segments must be non-empty");
        check_weights(seg.start_weights, g);
        check_weights(seg.end_weights, g);
        length_ += seg.length;
    }
}

MixtureSchedule MixtureSchedule::rotating_leader(std::size_t generators, std::size_t segment_length,
                                                 std::size_t steps) {
    if (generators == 0 || segment_length == 0) throw ArgumentError("need generators and a positive segment length");
    std::vector<MixtureSegment> segs;
    for (std::size_t covered = 0, k = 0; covered < std::max<std::size_t>(steps, 1); covered += segment_length, ++k) {
        auto w = one_hot(generators, k % generators);
        segs.push_back({segment_length, w, w});
    }
    return MixtureSchedule(std::move(segs));
}

MixtureSchedule MixtureSchedule::smooth_rotation(std::size_t generators, std::size_t segment_length,
                                                 std::size_t steps) {
    if (generators == 0 || segment_length == 0) throw ArgumentError("need generators and a positive segment length");
    std::vector<MixtureSegment> segs;
    for (std::size_t covered = 0, k = 0; covered < std::max<std::size_t>(steps, 1); covered += segment_length, ++k) {
        segs.push_back({segment_length, one_hot(generators, k % generators), one_hot(generators, (k + 1) % generators)});
    }
    return MixtureSchedule(std::move(segs));
}

std::vector<double> MixtureSchedule::weights_at(std::size_t t) const {
    for (const auto& seg : segments_) {
        if (t < seg.length) {
            const double frac = static_cast<double>(t) / static_cast<double>(seg.length);
            std::vector<double> w(seg.start_weights.size());
            for (std::size_t j = 0; j < w.size(); ++j) {
                w[j] = (1.0 - frac) * seg.start_weights[j] + frac * seg.end_weights[j];
            }
            return w;
        }
        t -= seg.length;
    }
    throw ArgumentError("step beyond the end of the mixture schedule");
}

std::vector<double> synth_stream(std::span<const TriangularExpert> generators, const MixtureSchedule& schedule,
                                 std::size_t steps, std::uint64_t seed) {
    if (generators.size() != schedule.generators()) {
        throw ArgumentError("schedule and generator counts differ");
    }
    if (schedule.length() < steps) throw ArgumentError("mixture schedule shorter than the requested stream");
    for (const auto& g : generators) g.validate();
    CounterRng rng(seed, 0x73796e74);
    std::vector<double> out;
    out.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        const auto w = schedule.weights_at(t);
        const double pick = rng.uniform();
        const double u = rng.uniform();
        // Falls back to the last generator with positive weight if rounding
        // leaves pick above the final cumulative sum.
        std::size_t chosen = w.size();
        double acc = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w[j] <= 0.0) continue;
            acc += w[j];
            chosen = j;
            if (pick < acc) break;
        }
        out.push_back(generators[chosen].inverse_cdf(u));
    }
    return out;
}

}  // namespace crpsmix

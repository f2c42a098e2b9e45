#include "crpsmix/grid_cdf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "crpsmix/errors.hpp"
#include "crpsmix/numeric.hpp"

namespace crpsmix {

namespace {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_double(std::string_view field) {
    while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r')) field.remove_suffix(1);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ArgumentError("not a number: '" + std::string(field) + "'");
    }
    return out;
}

}  // namespace

GridDomain::GridDomain(double a, double b, std::size_t cells) : a_(a), b_(b), cells_(cells) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
        throw ArgumentError("grid domain requires finite a < b");
    }
    if (cells == 0) throw ArgumentError("grid domain requires at least one cell");
}

double GridDomain::point(std::size_t s) const {
    if (s >= cells_) return b_;
    return a_ + (b_ - a_) * static_cast<double>(s) / static_cast<double>(cells_);
}

double GridDomain::clip(double y) const { return std::clamp(y, a_, b_); }

std::size_t GridDomain::first_point_at_or_above(double y) const {
    if (!contains(y)) throw DomainError("outcome " + format_double(y) + " outside grid domain");
    // Binary search over s in [1, d]; point(d) = b >= y always holds.
    std::size_t lo = 1;
    std::size_t hi = cells_;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (point(mid) >= y) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return lo;
}

GridCdf::GridCdf(GridDomain domain, std::vector<double> values, RepairReport* report)
    : domain_(domain), values_(std::move(values)) {
    if (values_.size() != domain_.cells()) {
        throw ArgumentError("CDF has " + std::to_string(values_.size()) + " values for " +
                            std::to_string(domain_.cells()) + " grid cells");
    }
    RepairReport local;
    auto note = [&](double violation) {
        if (violation > kRepairTolerance || !std::isfinite(violation)) {
            throw ArgumentError("CDF invariant violated by " + format_double(violation));
        }
        if (violation > 0.0) {
            ++local.repaired;
            local.max_violation = std::max(local.max_violation, violation);
        }
    };

    double running = 0.0;
    for (double& f : values_) {
        if (std::isnan(f)) throw ArgumentError("CDF value is NaN");
        if (f < 0.0) note(-f);
        if (f > 1.0) note(f - 1.0);
        f = std::clamp(f, 0.0, 1.0);
        if (f < running) {
            note(running - f);
            f = running;
        }
        running = f;
    }
    double& last = values_.back();
    if (last != 1.0) {
        note(1.0 - last);
        last = 1.0;
    }
    if (report != nullptr) *report = local;
}

double GridCdf::operator()(double u) const {
    if (u <= domain_.a()) return 0.0;
    if (u >= domain_.b()) return 1.0;
    return values_[domain_.first_point_at_or_above(u) - 1];
}

double crps(const GridCdf& forecast, double y) {
    const GridDomain& dom = forecast.domain();
    const std::size_t k = dom.first_point_at_or_above(y);
    const auto f = forecast.values();
    CompensatedSum sum;
    for (std::size_t s = 1; s < k; ++s) sum.add(f[s - 1] * f[s - 1]);
    for (std::size_t s = k; s <= f.size(); ++s) {
        const double gap = 1.0 - f[s - 1];
        sum.add(gap * gap);
    }
    return dom.delta() * sum.value();
}

GridCdf heaviside_cdf(const GridDomain& domain, double y) {
    const std::size_t k = domain.first_point_at_or_above(y);
    std::vector<double> values(domain.cells(), 0.0);
    std::fill(values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end(), 1.0);
    return GridCdf(domain, std::move(values));
}

double quantile(const GridCdf& forecast, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw ArgumentError("quantile level must lie in (0, 1)");
    const auto f = forecast.values();
    const auto it = std::lower_bound(f.begin(), f.end(), tau);
    const auto s = static_cast<std::size_t>(it - f.begin()) + 1;
    return forecast.domain().point(s);
}

GridCdf empirical_cdf(std::span<const double> samples, const GridDomain& domain) {
    if (samples.empty()) throw ArgumentError("empirical CDF needs at least one sample");
    std::vector<double> sorted(samples.begin(), samples.end());
    for (double x : sorted) {
        if (!domain.contains(x)) throw DomainError("sample " + format_double(x) + " outside grid domain");
    }
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<double> values(domain.cells());
    auto it = sorted.begin();
    for (std::size_t s = 1; s <= domain.cells(); ++s) {
        const double z = domain.point(s);
        it = std::upper_bound(it, sorted.end(), z);
        values[s - 1] = static_cast<double>(it - sorted.begin()) / n;
    }
    values.back() = 1.0;
    return GridCdf(domain, std::move(values));
}

std::string to_csv_row(const GridCdf& forecast) {
    const GridDomain& dom = forecast.domain();
    std::string out = format_double(dom.a()) + ',' + format_double(dom.b()) + ',' + std::to_string(dom.cells());
    for (double f : forecast.values()) {
        out += ',';
        out += format_double(f);
    }
    return out;
}

GridCdf parse_csv_row(std::string_view row) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = row.find(',', start);
        fields.push_back(row.substr(start, comma == std::string_view::npos ? row.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (fields.size() < 4) throw ArgumentError("CDF row needs a, b, d and at least one value");
    const double cells = parse_double(fields[2]);
    if (cells < 1 || cells != std::floor(cells) || fields.size() != static_cast<std::size_t>(cells) + 3) {
        throw ArgumentError("CDF row has " + std::to_string(fields.size()) + " columns, expected d + 3");
    }
    GridDomain domain(parse_double(fields[0]), parse_double(fields[1]), static_cast<std::size_t>(cells));
    std::vector<double> values;
    values.reserve(domain.cells());
    for (std::size_t i = 3; i < fields.size(); ++i) values.push_back(parse_double(fields[i]));
    return GridCdf(domain, std::move(values));
}

}  // namespace crpsmix

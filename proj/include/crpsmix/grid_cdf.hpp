#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crpsmix {

/// Uniform grid a = z_0 < z_1 < ... < z_d = b on a finite outcome interval.
class GridDomain {
public:
    /// Throws ArgumentError unless a < b (both finite) and cells >= 1.
    GridDomain(double a, double b, std::size_t cells);

    double a() const { return a_; }
    double b() const { return b_; }
    std::size_t cells() const { return cells_; }
    double width() const { return b_ - a_; }
    /// Cell width (b - a) / d.
    double delta() const { return (b_ - a_) / static_cast<double>(cells_); }

    /// Grid point z_s for s in [0, d]; z_0 = a and z_d = b exactly.
    double point(std::size_t s) const;

    bool contains(double y) const { return y >= a_ && y <= b_; }
    double clip(double y) const;

    /// Smallest s in [1, d] with z_s >= y. Requires y in [a, b].
    std::size_t first_point_at_or_above(double y) const;

    /// Same endpoints and cell count. Endpoints compare exactly.
    bool operator==(const GridDomain&) const = default;

private:
    double a_;
    double b_;
    std::size_t cells_;
};

/// Largest invariant violation repaired while building a GridCdf.
struct RepairReport {
    std::size_t repaired = 0;
    double max_violation = 0.0;
};

/// Piecewise-constant, right-continuous CDF: F(u) = f_s for z_{s-1} < u <= z_s.
///
/// values()[s - 1] holds f_s. f_0 = 0 is implicit. Construction enforces
/// 0 <= f_1 <= ... <= f_d = 1: violations up to kRepairTolerance are clamped
/// away, anything larger is rejected with ArgumentError.
class GridCdf {
public:
    static constexpr double kRepairTolerance = 1e-12;

    GridCdf(GridDomain domain, std::vector<double> values, RepairReport* report = nullptr);

    const GridDomain& domain() const { return domain_; }
    std::span<const double> values() const { return values_; }
    std::size_t cells() const { return values_.size(); }

    /// F(u) with F = 0 below the first grid cell and 1 at or above b.
    double operator()(double u) const;

private:
    GridDomain domain_;
    std::vector<double> values_;
};

/// Discretized CRPS: delta * sum_s (f_s - 1{z_s >= y})^2, compensated summation.
/// Throws DomainError if y is outside [a, b].
double crps(const GridCdf& forecast, double y);

/// Step CDF of a point mass at y: f_s = 1{z_s >= y}.
GridCdf heaviside_cdf(const GridDomain& domain, double y);

/// Smallest grid point z_s with f_s >= tau, tau in (0, 1).
double quantile(const GridCdf& forecast, double tau);

/// f_s = #{samples <= z_s} / n with f_d forced to 1.
GridCdf empirical_cdf(std::span<const double> samples, const GridDomain& domain);

/// "a,b,d,f_1,...,f_d" with round-trip precision.
std::string to_csv_row(const GridCdf& forecast);
GridCdf parse_csv_row(std::string_view row);

}  // namespace crpsmix

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crpsmix/grid_cdf.hpp"

namespace crpsmix {

// ---------------------------------------------------------------------------
// Triangular experts
// ---------------------------------------------------------------------------

/// Fixed triangular density with support [left, right] and mode at peak.
struct TriangularExpert {
    double left;
    double peak;
    double right;

    /// Throws ArgumentError unless left < peak < right.
    void validate() const;
    double density(double x) const;
    double cdf(double x) const;
    /// Inverse CDF for u in [0, 1].
    double inverse_cdf(double u) const;
};

/// Exact CDF of the triangle sampled at the grid points.
/// Throws ArgumentError if the support leaves the domain.
GridCdf triangular_cdf(const TriangularExpert& expert, const GridDomain& domain);

// ---------------------------------------------------------------------------
// Bivariate Gaussian mixtures over (temperature, load)
// ---------------------------------------------------------------------------

struct Point2 {
    double temp;
    double load;
};

struct GaussianComponent {
    double weight;
    double mean_temp;
    double mean_load;
    double var_temp;
    double cov;
    double var_load;

    double determinant() const { return var_temp * var_load - cov * cov; }
};

struct Gmm2D {
    std::vector<GaussianComponent> components;

    /// Throws ArgumentError if weights do not sum to 1 within 1e-9 or a
    /// covariance is not positive definite.
    void validate() const;
    double log_density(Point2 p) const;
};

struct EmOptions {
    int max_iterations = 500;
    /// Stop when the per-point objective improves by less than this.
    double tolerance = 1e-8;
    /// Diagonal ridge as a fraction of the per-coordinate data variance.
    double ridge = 1e-6;
};

struct GmmFit {
    Gmm2D model;
    /// Objective after the seeding step and after every EM iteration. This is
    /// the mixture log-likelihood with each component density scaled by
    /// exp(-tr(R Sigma^-1)/2), R the diagonal ridge; EM with ridged
    /// covariances is an exact ascent method for it.
    std::vector<double> objective_trace;
    /// Plain log-likelihood of the returned model.
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// EM for a k-component mixture (k in {1,2,3}) with k-means++ seeding.
/// Needs at least 10k points; throws DegenerateFitError if every point is
/// identical or a covariance collapses.
GmmFit fit_gmm_em(std::span<const Point2> points, int k, std::uint64_t seed, const EmOptions& options = {});

/// Load distribution given temperature: a univariate mixture with posterior
/// component weights and Gaussian conditioning per component. Mass below a
/// and above b lands on the end cells.
GridCdf conditional_load_cdf(const Gmm2D& model, double temp, const GridDomain& domain);

/// Plain-text parameter file: k, then one line per component with
/// weight, mean_temp, mean_load, var_temp, cov, var_load.
void write_gmm(std::ostream& out, const Gmm2D& model);
Gmm2D read_gmm(std::istream& in);

// ---------------------------------------------------------------------------
// Confidence schedules
// ---------------------------------------------------------------------------

/// A plateau of full confidence with linear ramps on either side.
struct ConfidenceBlock {
    double plateau_start;
    double plateau_end;
    double ramp_up = 0.0;
    double ramp_down = 0.0;
};

/// Piecewise-linear confidence: 1 on plateaus, linear on ramps, 0 elsewhere.
/// Overlapping blocks combine by maximum. A periodic schedule wraps t
/// modulo the period; blocks may straddle the wrap point.
struct ConfidenceSchedule {
    std::vector<ConfidenceBlock> blocks;
    std::optional<double> period;

    static ConfidenceSchedule always();
};

double confidence_at(const ConfidenceSchedule& schedule, double t);

/// Product of a seasonal and a daily confidence, each evaluated on its own clock.
double combined_confidence(const ConfidenceSchedule& season, const ConfidenceSchedule& day, double season_t,
                           double day_t);

}  // namespace crpsmix

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crpsmix/grid_cdf.hpp"

namespace crpsmix {

enum class AggregationMode { AA, WA };

/// 2/(b-a) for the aggregating algorithm, 1/(2(b-a)) for weighted averaging.
double default_learning_rate(AggregationMode mode, double width);

/// Square-loss learning rate behind the CRPS substitution rule.
inline constexpr double kCrpsSquareRate = 2.0;

/// Exponential weights over N experts, kept as log-weights.
///
/// The stored log-weights are shifted after every update so the largest is
/// 0; log_scale() accumulates the shifts, so ln w_i = log_weights()[i] +
/// log_scale() is the unshifted weight of the textbook recursion started at
/// w_i = 1/N. Every normalized quantity is invariant under the shift.
class ExpertPool {
public:
    ExpertPool(std::size_t n, double eta, double alpha = 0.0, AggregationMode mode = AggregationMode::AA);

    /// Pool with the mode's default learning rate for the domain width.
    static ExpertPool for_domain(std::size_t n, AggregationMode mode, const GridDomain& domain, double alpha = 0.0);

    std::size_t size() const { return log_weights_.size(); }
    double eta() const { return eta_; }
    double alpha() const { return alpha_; }
    AggregationMode mode() const { return mode_; }

    std::span<const double> log_weights() const { return log_weights_; }
    double log_scale() const { return log_scale_; }
    /// exp(log_weights()), i.e. weights after the last rescale.
    std::vector<double> weights() const;
    /// ln of the unshifted total weight W.
    double log_total_weight() const;

    /// Replace the stored log-weights; throws ArgumentError on size mismatch or NaN.
    ExpertPool with_log_weights(std::vector<double> log_weights, double log_scale = 0.0) const;

private:
    std::vector<double> log_weights_;
    double log_scale_ = 0.0;
    double eta_;
    double alpha_;
    AggregationMode mode_;
};

/// q_i = w_i / sum_j w_j.
std::vector<double> normalized_weights(const ExpertPool& pool);

/// w^p_i = p_i w_i / sum_j p_j w_j; throws AllAsleepError if every p_i w_i is 0.
std::vector<double> confidence_reweight(const ExpertPool& pool, std::span<const double> confidence);

/// -(1/eta) ln sum_i q_i exp(-eta * losses_i).
double superprediction(std::span<const double> losses, std::span<const double> q, double eta);

/// AA forecast for square loss with binary outcomes, 0 < eta <= 2; result in [0, 1].
double substitute_square_aa(std::span<const double> forecasts, std::span<const double> q, double eta);

/// Column-wise square-loss substitution for N rows of d-dimensional forecasts.
std::vector<double> substitute_vector_aa(std::span<const std::vector<double>> forecasts,
                                         std::span<const double> q, double eta);

/// Pointwise CRPS substitution rule,
///   F(u) = 1/2 - 1/4 ln( sum q_i e^{-2 F_i(u)^2} / sum q_i e^{-2 (1 - F_i(u))^2} ),
/// before any invariant repair.
std::vector<double> substitute_crps_aa_values(std::span<const GridCdf> forecasts, std::span<const double> q);

/// The AA learner forecast under CRPS. Throws ArgumentError on mismatched
/// domains and ConsistencyError if the raw values break CDF invariants by
/// more than GridCdf::kRepairTolerance.
GridCdf substitute_crps_aa(std::span<const GridCdf> forecasts, std::span<const double> q);

/// Pointwise convex combination sum_i q_i F_i.
GridCdf combine_wa(std::span<const GridCdf> forecasts, std::span<const double> q);

/// w_i <- w_i exp(-eta * losses_i), then shift so max log-weight is 0.
ExpertPool update_weights(const ExpertPool& pool, std::span<const double> losses);

/// Virtual-expert update: exponent -eta (p_i l_i + (1 - p_i) h).
ExpertPool update_weights_confidence(const ExpertPool& pool, std::span<const double> confidence,
                                     std::span<const double> expert_losses, double learner_loss);

/// Fixed share to the start vector: w_i <- alpha/N + (1 - alpha) w_i / sum_j w_j.
ExpertPool mix_past_posteriors(const ExpertPool& pool);

namespace detail {
/// Square-loss substitution on log-weights without range checks on the rate.
double substitute_square_kernel(std::span<const double> forecasts, std::span<const double> log_q, double rate);
}  // namespace detail

}  // namespace crpsmix

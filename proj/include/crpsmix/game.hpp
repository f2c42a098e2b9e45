#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "crpsmix/grid_cdf.hpp"
#include "crpsmix/mixing.hpp"

namespace crpsmix {

struct GameConfig {
    AggregationMode mode = AggregationMode::AA;
    /// Defaults to 2/(b-a) for AA and 1/(2(b-a)) for WA.
    std::optional<double> eta;
    /// Fixed-share rate toward the uniform start vector; 0 disables sharing.
    double alpha = 0.0;
    GridDomain domain{0.0, 1.0, 1024};
    /// When false every confidence level is treated as 1.
    bool confidence_enabled = false;

    double learning_rate() const;
};

/// One round of the game as seen after the outcome is revealed.
struct GameStep {
    double outcome;
    double learner_loss;
    /// -(1/eta) ln sum_i q_i e^{-eta l_i} with q the mixing distribution used
    /// for the forecast.
    double superprediction;
    /// ln W_{t+1}, total unshifted weight after the update.
    double log_total_weight;
    std::vector<double> expert_losses;
    std::vector<double> confidences;
    /// Normalized weights w*_t held before this round's update.
    std::vector<double> weights;
    /// True when every confidence was 0 and the uniform fallback was used.
    bool all_asleep = false;
};

/// Per-step record of a game with running totals.
class GameLog {
public:
    GameLog(std::size_t experts, double eta);

    void append(GameStep step);

    std::size_t size() const { return steps_.size(); }
    bool empty() const { return steps_.empty(); }
    std::size_t experts() const { return experts_; }
    double eta() const { return eta_; }
    const std::vector<GameStep>& steps() const { return steps_; }

    /// H_T for T = 1..size().
    const std::vector<double>& learner_cumulative() const { return learner_cumulative_; }
    /// L^i_T, indexed [T-1][i].
    const std::vector<std::vector<double>>& expert_cumulative() const { return expert_cumulative_; }
    /// D^i_T = sum_{t<=T} p_{i,t} (h_t - l_{i,t}), indexed [T-1][i].
    const std::vector<std::vector<double>>& discounted_regret() const { return discounted_regret_; }

private:
    std::size_t experts_;
    double eta_;
    std::vector<GameStep> steps_;
    std::vector<double> learner_cumulative_;
    std::vector<std::vector<double>> expert_cumulative_;
    std::vector<std::vector<double>> discounted_regret_;
};

/// Online aggregation of grid CDFs under CRPS with optional confidence levels
/// and fixed-share mixing. Deterministic given its inputs.
class Game {
public:
    Game(GameConfig config, std::size_t experts);

    /// Presents the learner forecast for this round, scores everything on
    /// the outcome and updates the weights. Throws ArgumentError on grid
    /// mismatch or out-of-range confidences, DomainError on an outcome
    /// outside [a, b], ConsistencyError on non-finite losses.
    GridCdf step(std::span<const GridCdf> forecasts, std::span<const double> confidences, double outcome);
    GridCdf step(std::span<const GridCdf> forecasts, double outcome);

    /// Learner forecast for the current weights without advancing the game.
    GridCdf forecast(std::span<const GridCdf> forecasts, std::span<const double> confidences) const;

    const GameConfig& config() const { return config_; }
    const ExpertPool& pool() const { return pool_; }
    const GameLog& log() const { return log_; }

private:
    std::vector<double> mixing_distribution(std::span<const double> confidences, bool& all_asleep) const;

    GameConfig config_;
    ExpertPool pool_;
    GameLog log_;
};

struct ExpertRegret {
    double final_regret;      // H_T - L^i_T
    double final_discounted;  // D^i_T
    double max_discounted;    // max over prefixes of D^i_T
    bool bound_satisfied;     // D^i_T <= ln N / eta at every prefix
};

struct RegretReport {
    std::size_t steps = 0;
    std::size_t experts = 0;
    double eta = 0.0;
    /// ln N / eta.
    double eta_bound = 0.0;
    /// Loss-specific constant when supplied, e.g. (b-a)/2 ln N for AA under CRPS.
    std::optional<double> theorem_bound;
    /// max_i R^i_T at the final step.
    double final_regret = 0.0;
    /// max over prefixes T of H_T - min_i L^i_T.
    double max_prefix_regret = 0.0;
    bool regret_bound_satisfied = false;
    bool discounted_bound_satisfied = false;
    std::vector<ExpertRegret> per_expert;
};

/// Absolute slack allowed on bound checks after T rounds, covering floating
/// accumulation: 1e-9 (1 + T) / eta.
double bound_slack(std::size_t steps, double eta);

/// (b-a)/2 ln N for AA and 2(b-a) ln N for WA.
double crps_regret_bound(AggregationMode mode, const GridDomain& domain, std::size_t experts);

/// Throws ArgumentError on an empty log. Without theorem_bound the regret
/// check uses ln N / eta.
RegretReport regret_report(const GameLog& log, std::optional<double> theorem_bound = std::nullopt);

/// Aggregating algorithm for square loss on binary outcomes.
/// forecasts[t] holds the N expert predictions for round t.
GameLog run_square_loss_game(std::span<const std::vector<double>> forecasts, std::span<const double> outcomes,
                             double eta);

/// CSV with columns t, y_t, h_t, l_1..l_N, p_1..p_N, q_1..q_N, D_1..D_N.
void write_game_csv(std::ostream& out, const GameLog& log);

}  // namespace crpsmix

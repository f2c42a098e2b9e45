#include "crpsmix/game.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "crpsmix/errors.hpp"
#include "crpsmix/numeric.hpp"

namespace crpsmix {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

double GameConfig::learning_rate() const { return eta ? *eta : default_learning_rate(mode, domain.width()); }

GameLog::GameLog(std::size_t experts, double eta) : experts_(experts), eta_(eta) {
    if (experts == 0) throw ArgumentError("game log needs at least one expert");
}

void GameLog::append(GameStep step) {
    if (step.expert_losses.size() != experts_ || step.confidences.size() != experts_ ||
        step.weights.size() != experts_) {
        throw ArgumentError("game step has the wrong number of experts");
    }
    const double prev_h = learner_cumulative_.empty() ? 0.0 : learner_cumulative_.back();
    learner_cumulative_.push_back(prev_h + step.learner_loss);
    std::vector<double> cum(experts_);
    std::vector<double> disc(experts_);
    for (std::size_t i = 0; i < experts_; ++i) {
        const double prev_l = expert_cumulative_.empty() ? 0.0 : expert_cumulative_.back()[i];
        const double prev_d = discounted_regret_.empty() ? 0.0 : discounted_regret_.back()[i];
        cum[i] = prev_l + step.expert_losses[i];
        disc[i] = prev_d + step.confidences[i] * (step.learner_loss - step.expert_losses[i]);
    }
    expert_cumulative_.push_back(std::move(cum));
    discounted_regret_.push_back(std::move(disc));
    steps_.push_back(std::move(step));
}

Game::Game(GameConfig config, std::size_t experts)
    : config_(config),
      pool_(experts, config.learning_rate(), config.alpha, config.mode),
      log_(experts, config.learning_rate()) {}

std::vector<double> Game::mixing_distribution(std::span<const double> confidences, bool& all_asleep) const {
    all_asleep = false;
    if (!config_.confidence_enabled) return normalized_weights(pool_);
    try {
        return confidence_reweight(pool_, confidences);
    } catch (const AllAsleepError&) {
        all_asleep = true;
        return std::vector<double>(pool_.size(), 1.0 / static_cast<double>(pool_.size()));
    }
}

GridCdf Game::forecast(std::span<const GridCdf> forecasts, std::span<const double> confidences) const {
    if (forecasts.size() != pool_.size()) {
        throw ArgumentError("expected " + std::to_string(pool_.size()) + " forecasts, got " +
                            std::to_string(forecasts.size()));
    }
    for (const auto& f : forecasts) {
        if (!(f.domain() == config_.domain)) throw ArgumentError("expert forecast is not on the game grid");
    }
    bool asleep = false;
    const auto q = mixing_distribution(confidences, asleep);
    return config_.mode == AggregationMode::AA ? substitute_crps_aa(forecasts, q) : combine_wa(forecasts, q);
}

GridCdf Game::step(std::span<const GridCdf> forecasts, std::span<const double> confidences, double outcome) {
    const std::size_t n = pool_.size();
    if (forecasts.size() != n) {
        throw ArgumentError("expected " + std::to_string(n) + " forecasts, got " + std::to_string(forecasts.size()));
    }
    for (const auto& f : forecasts) {
        if (!(f.domain() == config_.domain)) throw ArgumentError("expert forecast is not on the game grid");
    }
    if (!config_.domain.contains(outcome)) throw DomainError("outcome outside the game domain");

    std::vector<double> p(n, 1.0);
    if (config_.confidence_enabled) {
        if (confidences.size() != n) throw ArgumentError("confidence vector has the wrong length");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(confidences[i] >= 0.0 && confidences[i] <= 1.0)) {
                throw ArgumentError("confidence levels must lie in [0, 1]");
            }
            p[i] = confidences[i];
        }
    }

    bool asleep = false;
    const auto q = mixing_distribution(p, asleep);
    GridCdf learner =
        config_.mode == AggregationMode::AA ? substitute_crps_aa(forecasts, q) : combine_wa(forecasts, q);

    const double h = crps(learner, outcome);
    std::vector<double> losses(n);
    for (std::size_t i = 0; i < n; ++i) losses[i] = crps(forecasts[i], outcome);
    const bool finite = std::isfinite(h) && std::all_of(losses.begin(), losses.end(), [](double l) {
                            return std::isfinite(l);
                        });
    if (!finite) {
        throw ConsistencyError("non-finite loss at step " + std::to_string(log_.size() + 1));
    }

    GameStep rec;
    rec.outcome = outcome;
    rec.learner_loss = h;
    rec.superprediction = superprediction(losses, q, pool_.eta());
    rec.weights = normalized_weights(pool_);
    rec.all_asleep = asleep;

    if (!asleep) pool_ = update_weights_confidence(pool_, p, losses, h);
    pool_ = mix_past_posteriors(pool_);

    rec.log_total_weight = pool_.log_total_weight();
    rec.expert_losses = std::move(losses);
    rec.confidences = std::move(p);
    log_.append(std::move(rec));
    return learner;
}

GridCdf Game::step(std::span<const GridCdf> forecasts, double outcome) {
    const std::vector<double> ones(pool_.size(), 1.0);
    return step(forecasts, ones, outcome);
}

double bound_slack(std::size_t steps, double eta) { return 1e-9 * (1.0 + static_cast<double>(steps)) / eta; }

double crps_regret_bound(AggregationMode mode, const GridDomain& domain, std::size_t experts) {
    const double log_n = std::log(static_cast<double>(experts));
    return mode == AggregationMode::AA ? 0.5 * domain.width() * log_n : 2.0 * domain.width() * log_n;
}

RegretReport regret_report(const GameLog& log, std::optional<double> theorem_bound) {
    if (log.empty()) throw ArgumentError("regret report needs a non-empty game log");
    RegretReport rep;
    rep.steps = log.size();
    rep.experts = log.experts();
    rep.eta = log.eta();
    rep.eta_bound = std::log(static_cast<double>(log.experts())) / log.eta();
    rep.theorem_bound = theorem_bound;
    const double regret_limit = theorem_bound.value_or(rep.eta_bound);

    rep.per_expert.assign(log.experts(), ExpertRegret{0.0, 0.0, -std::numeric_limits<double>::infinity(), true});
    rep.regret_bound_satisfied = true;
    rep.max_prefix_regret = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < log.size(); ++t) {
        const double slack = bound_slack(t + 1, log.eta());
        const auto& cum = log.expert_cumulative()[t];
        const double best = *std::min_element(cum.begin(), cum.end());
        const double regret = log.learner_cumulative()[t] - best;
        rep.max_prefix_regret = std::max(rep.max_prefix_regret, regret);
        if (regret > regret_limit + slack) rep.regret_bound_satisfied = false;
        for (std::size_t i = 0; i < log.experts(); ++i) {
            const double d = log.discounted_regret()[t][i];
            auto& e = rep.per_expert[i];
            e.max_discounted = std::max(e.max_discounted, d);
            if (d > rep.eta_bound + slack) e.bound_satisfied = false;
        }
    }
    rep.discounted_bound_satisfied = true;
    rep.final_regret = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < log.experts(); ++i) {
        auto& e = rep.per_expert[i];
        e.final_regret = log.learner_cumulative().back() - log.expert_cumulative().back()[i];
        e.final_discounted = log.discounted_regret().back()[i];
        rep.final_regret = std::max(rep.final_regret, e.final_regret);
        rep.discounted_bound_satisfied = rep.discounted_bound_satisfied && e.bound_satisfied;
    }
    return rep;
}

GameLog run_square_loss_game(std::span<const std::vector<double>> forecasts, std::span<const double> outcomes,
                             double eta) {
    if (forecasts.empty()) throw ArgumentError("square-loss game needs at least one round");
    if (forecasts.size() != outcomes.size()) throw ArgumentError("forecast and outcome sequences differ in length");
    if (!(eta > 0.0 && eta <= 2.0)) throw ArgumentError("square loss is mixable only for 0 < eta <= 2");
    const std::size_t n = forecasts.front().size();
    ExpertPool pool(n, eta);
    GameLog log(n, eta);
    const std::vector<double> ones(n, 1.0);
    for (std::size_t t = 0; t < forecasts.size(); ++t) {
        const double y = outcomes[t];
        if (y != 0.0 && y != 1.0) throw ArgumentError("square-loss outcomes must be 0 or 1");
        if (forecasts[t].size() != n) throw ArgumentError("every round needs the same number of experts");
        const auto q = normalized_weights(pool);
        const double f = substitute_square_aa(forecasts[t], q, eta);
        std::vector<double> losses(n);
        for (std::size_t i = 0; i < n; ++i) losses[i] = (forecasts[t][i] - y) * (forecasts[t][i] - y);
        GameStep rec;
        rec.outcome = y;
        rec.learner_loss = (f - y) * (f - y);
        rec.superprediction = superprediction(losses, q, eta);
        rec.weights = q;
        pool = update_weights(pool, losses);
        rec.log_total_weight = pool.log_total_weight();
        rec.expert_losses = std::move(losses);
        rec.confidences = ones;
        log.append(std::move(rec));
    }
    return log;
}

void write_game_csv(std::ostream& out, const GameLog& log) {
    const std::size_t n = log.experts();
    out << "t,y,h";
    for (const char* prefix : {"l_", "p_", "q_", "D_"}) {
        for (std::size_t i = 1; i <= n; ++i) out << ',' << prefix << i;
    }
    out << '\n';
    for (std::size_t t = 0; t < log.size(); ++t) {
        const GameStep& s = log.steps()[t];
        out << (t + 1) << ',' << fmt(s.outcome) << ',' << fmt(s.learner_loss);
        for (double v : s.expert_losses) out << ',' << fmt(v);
        for (double v : s.confidences) out << ',' << fmt(v);
        for (double v : s.weights) out << ',' << fmt(v);
        for (double v : log.discounted_regret()[t]) out << ',' << fmt(v);
        out << '\n';
    }
}

}  // namespace crpsmix

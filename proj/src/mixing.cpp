#include "crpsmix/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crpsmix/errors.hpp"
#include "crpsmix/numeric.hpp"

namespace crpsmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw ArgumentError(std::string(what) + ": expected " + std::to_string(want) + " entries, got " +
                            std::to_string(got));
    }
}

std::vector<double> log_of(std::span<const double> q) {
    std::vector<double> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!(q[i] >= 0.0)) throw ArgumentError("weights must be non-negative");
        out[i] = q[i] > 0.0 ? std::log(q[i]) : kNegInf;
    }
    return out;
}

const GridDomain& shared_domain(std::span<const GridCdf> forecasts, std::span<const double> q) {
    if (forecasts.empty()) throw ArgumentError("aggregation needs at least one forecast");
    require_size(q.size(), forecasts.size(), "weight vector");
    const GridDomain& dom = forecasts.front().domain();
    for (const GridCdf& f : forecasts) {
        if (!(f.domain() == dom)) throw ArgumentError("forecasts are defined on different grids");
    }
    return dom;
}

// Index of the only positive weight, or size() when there are zero or several.
std::size_t sole_support(std::span<const double> q) {
    std::size_t found = q.size();
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] > 0.0) {
            if (found != q.size()) return q.size();
            found = i;
        }
    }
    return found;
}

ExpertPool shifted(const ExpertPool& pool, std::vector<double> log_w) {
    double hi = kNegInf;
    for (double v : log_w) hi = std::max(hi, v);
    if (!std::isfinite(hi)) throw ArgumentError("weight update produced no finite weight");
    for (double& v : log_w) v -= hi;
    return pool.with_log_weights(std::move(log_w), pool.log_scale() + hi);
}

void check_losses(std::span<const double> losses) {
    for (double l : losses) {
        if (!std::isfinite(l) || l < 0.0) throw ArgumentError("losses must be finite and non-negative");
    }
}

}  // namespace

double default_learning_rate(AggregationMode mode, double width) {
    if (!(width > 0.0)) throw ArgumentError("domain width must be positive");
    return mode == AggregationMode::AA ? 2.0 / width : 1.0 / (2.0 * width);
}

ExpertPool::ExpertPool(std::size_t n, double eta, double alpha, AggregationMode mode)
    : log_weights_(n, n > 0 ? -std::log(static_cast<double>(n)) : 0.0), eta_(eta), alpha_(alpha), mode_(mode) {
    if (n == 0) throw ArgumentError("expert pool needs at least one expert");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ArgumentError("learning rate must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("mixing rate alpha must lie in [0, 1]");
}

ExpertPool ExpertPool::for_domain(std::size_t n, AggregationMode mode, const GridDomain& domain, double alpha) {
    return ExpertPool(n, default_learning_rate(mode, domain.width()), alpha, mode);
}

std::vector<double> ExpertPool::weights() const {
    std::vector<double> w(log_weights_.size());
    std::transform(log_weights_.begin(), log_weights_.end(), w.begin(), [](double v) { return std::exp(v); });
    return w;
}

double ExpertPool::log_total_weight() const { return log_sum_exp(log_weights_) + log_scale_; }

ExpertPool ExpertPool::with_log_weights(std::vector<double> log_weights, double log_scale) const {
    require_size(log_weights.size(), size(), "log-weights");
    for (double v : log_weights) {
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
            throw ArgumentError("log-weights must be finite or -inf");
        }
    }
    ExpertPool out = *this;
    out.log_weights_ = std::move(log_weights);
    out.log_scale_ = log_scale;
    return out;
}

std::vector<double> normalized_weights(const ExpertPool& pool) {
    const auto lw = pool.log_weights();
    const double total = log_sum_exp(lw);
    std::vector<double> q(lw.size());
    for (std::size_t i = 0; i < lw.size(); ++i) q[i] = std::exp(lw[i] - total);
    return q;
}

std::vector<double> confidence_reweight(const ExpertPool& pool, std::span<const double> confidence) {
    require_size(confidence.size(), pool.size(), "confidence vector");
    const auto lw = pool.log_weights();
    std::vector<double> logs(lw.size());
    for (std::size_t i = 0; i < lw.size(); ++i) {
        const double p = confidence[i];
        if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("confidence levels must lie in [0, 1]");
        logs[i] = p > 0.0 ? std::log(p) + lw[i] : kNegInf;
    }
    const double total = log_sum_exp(logs);
    if (!std::isfinite(total)) throw AllAsleepError();
    for (double& v : logs) v = std::exp(v - total);
    return logs;
}

double superprediction(std::span<const double> losses, std::span<const double> q, double eta) {
    require_size(losses.size(), q.size(), "loss vector");
    if (!(eta > 0.0)) throw ArgumentError("learning rate must be positive");
    std::vector<double> terms = log_of(q);
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] -= eta * losses[i];
    return -log_sum_exp(terms) / eta;
}

double detail::substitute_square_kernel(std::span<const double> forecasts, std::span<const double> log_q,
                                        double rate) {
    // Stack buffers cover the usual pool sizes; larger pools fall back to the heap.
    constexpr std::size_t kInline = 64;
    double zero_buf[kInline];
    double one_buf[kInline];
    std::vector<double> zero_heap;
    std::vector<double> one_heap;
    double* zero = zero_buf;
    double* one = one_buf;
    if (forecasts.size() > kInline) {
        zero_heap.resize(forecasts.size());
        one_heap.resize(forecasts.size());
        zero = zero_heap.data();
        one = one_heap.data();
    }
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const double f = forecasts[i];
        zero[i] = log_q[i] - rate * f * f;
        one[i] = log_q[i] - rate * (1.0 - f) * (1.0 - f);
    }
    const std::span<const double> zs(zero, forecasts.size());
    const std::span<const double> os(one, forecasts.size());
    return 0.5 - (log_sum_exp(zs) - log_sum_exp(os)) / (2.0 * rate);
}

double substitute_square_aa(std::span<const double> forecasts, std::span<const double> q, double eta) {
    require_size(q.size(), forecasts.size(), "weight vector");
    if (forecasts.empty()) throw ArgumentError("substitution needs at least one forecast");
    if (!(eta > 0.0 && eta <= 2.0)) throw ArgumentError("square loss is mixable only for 0 < eta <= 2");
    for (double f : forecasts) {
        if (!(f >= 0.0 && f <= 1.0)) throw ArgumentError("square-loss forecasts must lie in [0, 1]");
    }
    if (const std::size_t only = sole_support(q); only < q.size()) return forecasts[only];
    const auto log_q = log_of(q);
    return std::clamp(detail::substitute_square_kernel(forecasts, log_q, eta), 0.0, 1.0);
}

std::vector<double> substitute_vector_aa(std::span<const std::vector<double>> forecasts,
                                         std::span<const double> q, double eta) {
    if (forecasts.empty()) throw ArgumentError("substitution needs at least one forecast");
    const std::size_t d = forecasts.front().size();
    for (const auto& row : forecasts) require_size(row.size(), d, "forecast row");
    std::vector<double> column(forecasts.size());
    std::vector<double> out(d);
    for (std::size_t s = 0; s < d; ++s) {
        for (std::size_t i = 0; i < forecasts.size(); ++i) column[i] = forecasts[i][s];
        out[s] = substitute_square_aa(column, q, eta);
    }
    return out;
}

std::vector<double> substitute_crps_aa_values(std::span<const GridCdf> forecasts, std::span<const double> q) {
    const GridDomain& dom = shared_domain(forecasts, q);
    if (const std::size_t only = sole_support(q); only < q.size()) {
        const auto v = forecasts[only].values();
        return {v.begin(), v.end()};
    }
    const auto log_q = log_of(q);
    std::vector<double> column(forecasts.size());
    std::vector<double> out(dom.cells());
    for (std::size_t s = 0; s < dom.cells(); ++s) {
        for (std::size_t i = 0; i < forecasts.size(); ++i) column[i] = forecasts[i].values()[s];
        out[s] = detail::substitute_square_kernel(column, log_q, kCrpsSquareRate);
    }
    return out;
}

GridCdf substitute_crps_aa(std::span<const GridCdf> forecasts, std::span<const double> q) {
    auto values = substitute_crps_aa_values(forecasts, q);
    const GridDomain& dom = forecasts.front().domain();
    try {
        return GridCdf(dom, std::move(values));
    } catch (const ArgumentError& e) {
        throw ConsistencyError(std::string("CRPS substitution broke CDF invariants: ") + e.what());
    }
}

GridCdf combine_wa(std::span<const GridCdf> forecasts, std::span<const double> q) {
    const GridDomain& dom = shared_domain(forecasts, q);
    std::vector<double> out(dom.cells(), 0.0);
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        if (!(q[i] >= 0.0)) throw ArgumentError("weights must be non-negative");
        if (q[i] == 0.0) continue;
        const auto v = forecasts[i].values();
        for (std::size_t s = 0; s < out.size(); ++s) out[s] += q[i] * v[s];
    }
    try {
        return GridCdf(dom, std::move(out));
    } catch (const ArgumentError& e) {
        throw ConsistencyError(std::string("weighted average broke CDF invariants: ") + e.what());
    }
}

ExpertPool update_weights(const ExpertPool& pool, std::span<const double> losses) {
    require_size(losses.size(), pool.size(), "loss vector");
    check_losses(losses);
    std::vector<double> lw(pool.log_weights().begin(), pool.log_weights().end());
    for (std::size_t i = 0; i < lw.size(); ++i) lw[i] -= pool.eta() * losses[i];
    return shifted(pool, std::move(lw));
}

ExpertPool update_weights_confidence(const ExpertPool& pool, std::span<const double> confidence,
                                     std::span<const double> expert_losses, double learner_loss) {
    require_size(confidence.size(), pool.size(), "confidence vector");
    require_size(expert_losses.size(), pool.size(), "loss vector");
    check_losses(expert_losses);
    if (!std::isfinite(learner_loss) || learner_loss < 0.0) {
        throw ArgumentError("learner loss must be finite and non-negative");
    }
    std::vector<double> lw(pool.log_weights().begin(), pool.log_weights().end());
    for (std::size_t i = 0; i < lw.size(); ++i) {
        const double p = confidence[i];
        if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("confidence levels must lie in [0, 1]");
        lw[i] -= pool.eta() * (p * expert_losses[i] + (1.0 - p) * learner_loss);
    }
    return shifted(pool, std::move(lw));
}

ExpertPool mix_past_posteriors(const ExpertPool& pool) {
    const auto lw = pool.log_weights();
    const double total = log_sum_exp(lw);
    const double alpha = pool.alpha();
    const double share = alpha / static_cast<double>(pool.size());
    std::vector<double> out(lw.size());
    for (std::size_t i = 0; i < lw.size(); ++i) {
        // With alpha = 0 stay in the log domain so underflowed experts keep their rank.
        out[i] = alpha == 0.0 ? lw[i] - total : std::log(share + (1.0 - alpha) * std::exp(lw[i] - total));
    }
    return pool.with_log_weights(std::move(out), pool.log_scale() + total);
}

}  // namespace crpsmix

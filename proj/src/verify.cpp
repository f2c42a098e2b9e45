#include "crpsmix/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include <json.hpp>

#include "crpsmix/errors.hpp"
#include "crpsmix/experiment.hpp"
#include "crpsmix/game.hpp"

namespace crpsmix {

namespace {

using json = nlohmann::json;

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Records the smallest margin and the first failing witness.
struct Tally {
    SuiteResult result;

    explicit Tally(std::string name) {
        result.name = std::move(name);
        result.worst_margin = std::numeric_limits<double>::infinity();
    }

    void check(double margin, const std::function<json()>& witness) {
        ++result.checks;
        if (margin < result.worst_margin) result.worst_margin = margin;
        if (!(margin >= 0.0) && result.passed) {
            result.passed = false;
            result.witness = witness().dump();
        }
    }

    void fail(const json& witness) {
        ++result.checks;
        if (result.passed) {
            result.passed = false;
            result.witness = witness.dump();
        }
        result.worst_margin = -std::numeric_limits<double>::infinity();
    }
};

std::vector<double> random_simplex(CounterRng& rng, std::size_t n) {
    std::vector<double> q(n);
    const auto kind = rng.below(3);
    for (auto& v : q) {
        if (kind == 0) {
            v = -std::log(rng.uniform_open());
        } else if (kind == 1) {
            v = std::exp(rng.uniform(-30.0, 0.0));
        } else {
            v = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
        }
    }
    double total = 0.0;
    for (double v : q) total += v;
    if (!(total > 0.0)) {
        q.assign(n, 0.0);
        q[rng.below(n)] = 1.0;
        return q;
    }
    for (auto& v : q) v /= total;
    return q;
}

GridDomain random_domain(CounterRng& rng, std::size_t cells) {
    const double a = rng.uniform(-5.0, 5.0);
    return GridDomain(a, a + rng.uniform(0.5, 20.0), cells);
}

/// crps(F, z_j) for j = 1..d via prefix sums; entry j - 1.
std::vector<double> crps_at_grid(const GridCdf& f) {
    const auto v = f.values();
    const std::size_t d = v.size();
    std::vector<double> below(d + 1, 0.0);
    std::vector<double> above(d + 1, 0.0);
    for (std::size_t s = 0; s < d; ++s) below[s + 1] = below[s] + v[s] * v[s];
    for (std::size_t s = d; s-- > 0;) above[s] = above[s + 1] + (1.0 - v[s]) * (1.0 - v[s]);
    std::vector<double> out(d);
    for (std::size_t j = 0; j < d; ++j) out[j] = f.domain().delta() * (below[j] + above[j]);
    return out;
}

json cdf_json(const GridCdf& f) {
    return json{{"a", f.domain().a()}, {"b", f.domain().b()}, {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

GridCdf kernel_learner(std::span<const GridCdf> forecasts, std::span<const double> q, double rate) {
    const GridDomain& dom = forecasts.front().domain();
    std::vector<double> log_q(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        log_q[i] = q[i] > 0.0 ? std::log(q[i]) : -std::numeric_limits<double>::infinity();
    }
    std::vector<double> column(forecasts.size());
    std::vector<double> values(dom.cells());
    double running = 0.0;
    for (std::size_t s = 0; s < values.size(); ++s) {
        for (std::size_t i = 0; i < forecasts.size(); ++i) column[i] = forecasts[i].values()[s];
        running = std::max(running, std::clamp(detail::substitute_square_kernel(column, log_q, rate), 0.0, 1.0));
        values[s] = running;
    }
    values.back() = 1.0;
    return GridCdf(dom, std::move(values));
}

double piecewise_linear(std::span<const double> xs, std::span<const double> ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return ys[k - 1] + t * (ys[k] - ys[k - 1]);
}

}  // namespace

bool VerifyReport::passed() const {
    return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
}

GridCdf random_monotone_cdf(CounterRng& rng, const GridDomain& domain) {
    const std::size_t d = domain.cells();
    std::vector<double> inc(d, 0.0);
    switch (rng.below(3)) {
        case 0:
            for (auto& v : inc) v = std::pow(rng.uniform(), 3.0);
            break;
        case 1: {
            const std::size_t atoms = 1 + rng.below(3);
            for (std::size_t k = 0; k < atoms; ++k) inc[rng.below(d)] += rng.uniform_open();
            break;
        }
        default: {
            std::size_t lo = rng.below(d);
            std::size_t hi = rng.below(d);
            if (lo > hi) std::swap(lo, hi);
            for (std::size_t s = lo; s <= hi; ++s) inc[s] = rng.uniform();
            inc[hi] += 1e-3;
            break;
        }
    }
    double total = 0.0;
    for (double v : inc) total += v;
    std::vector<double> values(d);
    double acc = 0.0;
    for (std::size_t s = 0; s < d; ++s) {
        acc += inc[s];
        values[s] = std::min(1.0, acc / total);
    }
    values.back() = 1.0;
    return GridCdf(domain, std::move(values));
}

SuiteResult check_crps_mixability(const VerifyOptions& options, AggregationMode mode, double tol) {
    Stopwatch clock;
    Tally tally(mode == AggregationMode::AA ? "crps_mixability_aa" : "crps_exp_concavity_wa");
    CounterRng rng(options.seed, mode == AggregationMode::AA ? 1 : 2);
    static constexpr std::size_t kGrids[] = {16, 256, 1024};
    for (std::size_t c = 0; c < options.cases; ++c) {
        const GridDomain dom = random_domain(rng, kGrids[rng.below(3)]);
        const std::size_t n = 2 + rng.below(7);
        std::vector<GridCdf> experts;
        for (std::size_t i = 0; i < n; ++i) experts.push_back(random_monotone_cdf(rng, dom));
        const auto q = random_simplex(rng, n);
        const double eta = default_learning_rate(mode, dom.width());

        std::optional<GridCdf> learner;
        try {
            if (mode == AggregationMode::WA) {
                learner = combine_wa(experts, q);
            } else if (options.substitution_rate == kCrpsSquareRate) {
                learner = substitute_crps_aa(experts, q);
            } else {
                learner = kernel_learner(experts, q, options.substitution_rate);
            }
        } catch (const std::exception& e) {
            json w{{"case", c}, {"error", e.what()}, {"q", q}};
            for (const auto& f : experts) w["experts"].push_back(cdf_json(f));
            tally.fail(w);
            continue;
        }

        const auto h = crps_at_grid(*learner);
        std::vector<std::vector<double>> l;
        for (const auto& f : experts) l.push_back(crps_at_grid(f));
        const std::size_t probe = rng.below(dom.cells());
        const double direct = crps(*learner, dom.point(probe + 1));
        if (std::abs(direct - h[probe]) > 1e-12 * (1.0 + dom.width())) {
            tally.fail(json{{"case", c}, {"error", "prefix-sum oracle disagrees with crps"}, {"direct", direct},
                            {"prefix", h[probe]}});
            continue;
        }
        for (std::size_t j = 0; j < h.size(); ++j) {
            double mix = 0.0;
            for (std::size_t i = 0; i < n; ++i) mix += q[i] * std::exp(-eta * l[i][j]);
            const double lhs = std::exp(-eta * h[j]);
            tally.check(lhs - mix + tol, [&] {
                json w{{"case", c}, {"eta", eta}, {"y", dom.point(j + 1)}, {"q", q}, {"lhs", lhs}, {"rhs", mix},
                       {"learner", cdf_json(*learner)}};
                for (const auto& f : experts) w["experts"].push_back(cdf_json(f));
                return w;
            });
        }
        ++tally.result.cases;
    }
    tally.result.seconds = clock.seconds();
    return tally.result;
}

SuiteResult check_vector_mixability(const VerifyOptions& options, std::size_t max_dim, std::size_t max_experts,
                                    double eta, double tol) {
    if (max_dim == 0 || max_dim > 20 || max_experts == 0) throw ArgumentError("invalid enumeration limits");
    Stopwatch clock;
    Tally tally("vector_mixability_enumeration");
    CounterRng rng(options.seed, 3);
    for (std::size_t c = 0; c < options.cases; ++c) {
        const std::size_t d = 1 + rng.below(max_dim);
        const std::size_t n = 1 + rng.below(max_experts);
        std::vector<std::vector<double>> rows(n, std::vector<double>(d));
        for (auto& row : rows) {
            for (auto& v : row) {
                const double u = rng.uniform();
                v = u < 0.1 ? 0.0 : (u < 0.2 ? 1.0 : rng.uniform());
            }
        }
        const auto q = random_simplex(rng, n);
        const auto gamma = substitute_vector_aa(rows, q, eta);
        const double rate = eta / static_cast<double>(d);
        for (std::uint32_t omega = 0; omega < (1u << d); ++omega) {
            auto loss = [&](std::span<const double> f) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    const double e = f[k] - static_cast<double>((omega >> k) & 1u);
                    s += e * e;
                }
                return s;
            };
            double mix = 0.0;
            for (std::size_t i = 0; i < n; ++i) mix += q[i] * std::exp(-rate * loss(rows[i]));
            const double lhs = std::exp(-rate * loss(gamma));
            tally.check(lhs - mix + tol, [&] {
                return json{{"case", c}, {"omega", omega}, {"d", d}, {"q", q}, {"experts", rows},
                            {"learner", gamma}, {"lhs", lhs}, {"rhs", mix}};
            });
        }
        ++tally.result.cases;
    }
    tally.result.seconds = clock.seconds();
    return tally.result;
}

SuiteResult check_square_loss_bound(const VerifyOptions& options) {
    Stopwatch clock;
    Tally tally("square_loss_regret");
    CounterRng rng(options.seed, 4);
    const std::size_t games = std::max<std::size_t>(20, options.cases / 10);
    for (std::size_t c = 0; c < games; ++c) {
        const std::size_t n = 1 + rng.below(6);
        const double eta = c % 3 == 0 ? 2.0 : rng.uniform(0.05, 2.0);
        const std::size_t steps = 200;
        const auto pattern = rng.below(3);
        std::vector<std::vector<double>> forecasts(steps, std::vector<double>(n));
        std::vector<double> outcomes(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            double mean = 0.0;
            for (auto& v : forecasts[t]) {
                v = rng.uniform();
                mean += v / static_cast<double>(n);
            }
            if (pattern == 0) {
                outcomes[t] = rng.uniform() < 0.5 ? 0.0 : 1.0;
            } else if (pattern == 1) {
                outcomes[t] = static_cast<double>(t % 2);
            } else {
                outcomes[t] = mean < 0.5 ? 1.0 : 0.0;
            }
        }
        const GameLog log = run_square_loss_game(forecasts, outcomes, eta);
        const RegretReport rep = regret_report(log);
        const double slack = bound_slack(steps, eta);
        tally.check(rep.eta_bound + slack - rep.max_prefix_regret, [&] {
            return json{{"case", c}, {"eta", eta}, {"pattern", pattern}, {"max_prefix_regret", rep.max_prefix_regret},
                        {"bound", rep.eta_bound}};
        });
        ++tally.result.cases;
    }
    tally.result.seconds = clock.seconds();
    return tally.result;
}

SuiteResult check_telescoping(const VerifyOptions& options, std::size_t steps) {
    Stopwatch clock;
    Tally tally("telescoping");
    SyntheticOptions so;
    so.steps = steps;
    so.seed = options.seed;
    const SyntheticRun run = run_synthetic(so);
    const GameLog& log = run.log;
    for (std::size_t t = 0; t < log.size(); ++t) {
        const double ceiling = -log.steps()[t].log_total_weight / log.eta();
        const double h = log.learner_cumulative()[t];
        tally.check(ceiling + 1e-8 * static_cast<double>(t + 1) - h, [&] {
            return json{{"T", t + 1}, {"H_T", h}, {"ceiling", ceiling}};
        });
        const GameStep& s = log.steps()[t];
        tally.check(s.superprediction + 1e-9 - s.learner_loss, [&] {
            return json{{"t", t + 1}, {"h", s.learner_loss}, {"g", s.superprediction}, {"y", s.outcome}};
        });
    }
    tally.result.cases = 1;
    tally.result.seconds = clock.seconds();
    return tally.result;
}

SuiteResult check_discounted_regret(const VerifyOptions& options, std::size_t runs) {
    Stopwatch clock;
    Tally tally("discounted_regret");
    CounterRng rng(options.seed, 5);
    for (std::size_t c = 0; c < runs; ++c) {
        GameConfig cfg;
        cfg.mode = c % 2 == 0 ? AggregationMode::AA : AggregationMode::WA;
        cfg.domain = random_domain(rng, 16 + rng.below(49));
        cfg.confidence_enabled = true;
        const std::size_t n = 2 + rng.below(5);
        Game game(cfg, n);
        const auto pattern = rng.below(3);
        const std::size_t steps = 150;
        std::vector<GridCdf> experts;
        for (std::size_t i = 0; i < n; ++i) experts.push_back(random_monotone_cdf(rng, cfg.domain));
        std::size_t asleep_steps = 0;
        for (std::size_t t = 0; t < steps; ++t) {
            if (rng.uniform() < 0.3) experts[rng.below(n)] = random_monotone_cdf(rng, cfg.domain);
            std::vector<double> p(n);
            const bool all_zero = rng.uniform() < 0.1;
            for (auto& v : p) {
                if (all_zero) {
                    v = 0.0;
                } else if (pattern == 0) {
                    v = rng.uniform();
                } else if (pattern == 1) {
                    v = rng.uniform() < 0.5 ? 0.0 : 1.0;
                } else {
                    v = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
                }
            }
            // Adversary: the candidate outcome that hurts the learner most.
            const GridCdf learner = game.forecast(experts, p);
            double y = cfg.domain.a();
            double worst = -1.0;
            for (double cand : {cfg.domain.a(), cfg.domain.b(), rng.uniform(cfg.domain.a(), cfg.domain.b())}) {
                const double loss = crps(learner, cand);
                if (loss > worst) {
                    worst = loss;
                    y = cand;
                }
            }
            game.step(experts, p, y);
            if (game.log().steps().back().all_asleep) ++asleep_steps;
        }
        const RegretReport rep = regret_report(game.log());
        for (std::size_t i = 0; i < n; ++i) {
            const double margin = rep.eta_bound + bound_slack(steps, rep.eta) - rep.per_expert[i].max_discounted;
            tally.check(margin, [&] {
                return json{{"run", c}, {"expert", i}, {"pattern", pattern}, {"max_discounted", rep.per_expert[i].max_discounted},
                            {"bound", rep.eta_bound}, {"asleep_steps", asleep_steps}};
            });
        }
        ++tally.result.cases;
    }
    tally.result.seconds = clock.seconds();
    return tally.result;
}

SuiteResult check_discretization(const VerifyOptions& options, std::size_t cases) {
    Stopwatch clock;
    Tally tally("discretization");
    CounterRng rng(options.seed, 6);
    for (std::size_t c = 0; c < cases; ++c) {
        const double a = rng.uniform(-5.0, 5.0);
        const double b = a + rng.uniform(0.5, 20.0);
        const std::size_t d = std::size_t{8} << rng.below(7);
        const std::size_t knots = 2 + rng.below(8);
        std::vector<double> xs{a, b};
        for (std::size_t k = 0; k < knots; ++k) xs.push_back(rng.uniform(a, b));
        std::sort(xs.begin(), xs.end());
        std::vector<double> ys(xs.size());
        for (auto& v : ys) v = rng.uniform();
        std::sort(ys.begin(), ys.end());
        ys.front() = 0.0;
        ys.back() = 1.0;
        auto sample = [&](std::size_t cells) {
            const GridDomain dom(a, b, cells);
            std::vector<double> values(cells);
            for (std::size_t s = 0; s < cells; ++s) values[s] = piecewise_linear(xs, ys, dom.point(s + 1));
            values.back() = 1.0;
            return GridCdf(dom, std::move(values));
        };
        const double y = rng.uniform(a, b);
        const double coarse = crps(sample(d), y);
        const double fine = crps(sample(2 * d), y);
        const double limit = 2.0 * (b - a) / static_cast<double>(d);
        tally.check(limit - std::abs(coarse - fine), [&] {
            return json{{"case", c}, {"d", d}, {"y", y}, {"coarse", coarse}, {"fine", fine}, {"limit", limit}};
        });
        ++tally.result.cases;
    }
    tally.result.seconds = clock.seconds();
    return tally.result;
}

VerifyReport run_verify(const VerifyOptions& options) {
    if (options.cases == 0) throw ArgumentError("verify needs at least one case");
    VerifyReport rep;
    rep.suites.push_back(check_crps_mixability(options, AggregationMode::AA));
    rep.suites.push_back(check_crps_mixability(options, AggregationMode::WA));
    rep.suites.push_back(check_vector_mixability(options));
    rep.suites.push_back(check_square_loss_bound(options));
    rep.suites.push_back(check_telescoping(options));
    rep.suites.push_back(check_discounted_regret(options));
    rep.suites.push_back(check_discretization(options));
    return rep;
}

std::string to_json(const VerifyReport& report, const VerifyOptions& options) {
    json out{{"seed", options.seed}, {"cases", options.cases}, {"substitution_rate", options.substitution_rate},
             {"passed", report.passed()}};
    out["suites"] = json::array();
    for (const auto& s : report.suites) {
        json j{{"name", s.name}, {"cases", s.cases}, {"checks", s.checks}, {"passed", s.passed},
               {"seconds", s.seconds}};
        j["worst_margin"] = std::isfinite(s.worst_margin) ? json(s.worst_margin) : json(nullptr);
        if (!s.witness.empty()) j["witness"] = json::parse(s.witness);
        out["suites"].push_back(std::move(j));
    }
    return out.dump(2);
}

}  // namespace crpsmix

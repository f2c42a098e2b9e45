#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "crpsmix/errors.hpp"
#include "crpsmix/experts.hpp"
#include "crpsmix/game.hpp"
#include "crpsmix/random.hpp"
#include "crpsmix/verify.hpp"

using namespace crpsmix;
using Catch::Approx;

namespace {

std::vector<GridCdf> random_experts(CounterRng& rng, const GridDomain& dom, std::size_t n) {
    std::vector<GridCdf> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_monotone_cdf(rng, dom));
    return out;
}

GameConfig config_for(AggregationMode mode, const GridDomain& dom, bool confidence = false, double alpha = 0.0) {
    GameConfig c;
    c.mode = mode;
    c.domain = dom;
    c.confidence_enabled = confidence;
    c.alpha = alpha;
    return c;
}

}  // namespace

TEST_CASE("learning rates follow the domain width") {
    GameConfig c = config_for(AggregationMode::AA, GridDomain(0.0, 4.0, 8));
    CHECK(c.learning_rate() == 0.5);
    c.mode = AggregationMode::WA;
    CHECK(c.learning_rate() == 0.125);
    c.eta = 0.3;
    CHECK(c.learning_rate() == 0.3);
}

TEST_CASE("a single expert is reproduced exactly") {
    const GridDomain dom(0.0, 10.0, 128);
    CounterRng rng(1);
    for (auto mode : {AggregationMode::AA, AggregationMode::WA}) {
        Game game(config_for(mode, dom), 1);
        for (int t = 0; t < 200; ++t) {
            const auto f = random_experts(rng, dom, 1);
            const GridCdf h = game.step(f, rng.uniform(0.0, 10.0));
            for (std::size_t s = 0; s < dom.cells(); ++s) CHECK(h.values()[s] == Approx(f[0].values()[s]).margin(1e-12));
        }
        const auto rep = regret_report(game.log(), crps_regret_bound(mode, dom, 1));
        CHECK(std::abs(rep.final_regret) <= 1e-9);
        CHECK(rep.regret_bound_satisfied);
    }
}

TEST_CASE("unit confidences reproduce the plain game") {
    const GridDomain dom(-1.0, 1.0, 64);
    CounterRng rng(2);
    Game plain(config_for(AggregationMode::AA, dom), 4);
    Game sleepy(config_for(AggregationMode::AA, dom, true), 4);
    const std::vector<double> ones(4, 1.0);
    for (int t = 0; t < 300; ++t) {
        const auto f = random_experts(rng, dom, 4);
        const double y = rng.uniform(-1.0, 1.0);
        const GridCdf a = plain.step(f, y);
        const GridCdf b = sleepy.step(f, ones, y);
        CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    }
    CHECK(plain.log().learner_cumulative() == sleepy.log().learner_cumulative());
}

TEST_CASE("regret bounds hold on random games") {
    CounterRng rng(3);
    for (auto mode : {AggregationMode::AA, AggregationMode::WA}) {
        for (int run = 0; run < 5; ++run) {
            const GridDomain dom(0.0, rng.uniform(1.0, 20.0), 32 + rng.below(200));
            const std::size_t n = 2 + rng.below(6);
            Game game(config_for(mode, dom), n);
            // Experts fixed for the run, one of which is good late.
            const auto f = random_experts(rng, dom, n);
            for (int t = 0; t < 1000; ++t) {
                const double y = rng.uniform() < 0.5 ? dom.a() : rng.uniform(dom.a(), dom.b());
                game.step(f, y);
            }
            const auto rep = regret_report(game.log(), crps_regret_bound(mode, dom, n));
            CHECK(rep.regret_bound_satisfied);
            CHECK(rep.discounted_bound_satisfied);
            CHECK(rep.max_prefix_regret <= *rep.theorem_bound + bound_slack(rep.steps, rep.eta));
        }
    }
}

TEST_CASE("aa loss never exceeds the superprediction and telescopes") {
    const GridDomain dom(0.0, 3.0, 256);
    CounterRng rng(4);
    Game game(config_for(AggregationMode::AA, dom), 5);
    for (int t = 0; t < 500; ++t) game.step(random_experts(rng, dom, 5), rng.uniform(0.0, 3.0));
    const double eta = game.config().learning_rate();
    const auto& steps = game.log().steps();
    for (std::size_t t = 0; t < steps.size(); ++t) {
        CHECK(steps[t].learner_loss <= steps[t].superprediction + 1e-9);
        CHECK(game.log().learner_cumulative()[t] <= -steps[t].log_total_weight / eta + 1e-8 * (t + 1));
    }
}

TEST_CASE("all-asleep rounds fall back to uniform weights and keep the state") {
    const GridDomain dom(0.0, 1.0, 16);
    CounterRng rng(5);
    Game game(config_for(AggregationMode::AA, dom, true), 3);
    const std::vector<double> some{1.0, 0.0, 0.5};
    const std::vector<double> none(3, 0.0);
    game.step(random_experts(rng, dom, 3), some, 0.2);
    const std::vector<double> before = game.pool().weights();
    game.step(random_experts(rng, dom, 3), none, 0.7);
    CHECK(game.log().steps().back().all_asleep);
    CHECK(game.pool().weights() == before);
    const auto& d = game.log().discounted_regret();
    CHECK(d[1] == d[0]);
}

TEST_CASE("game input validation") {
    const GridDomain dom(0.0, 1.0, 16);
    CounterRng rng(6);
    Game game(config_for(AggregationMode::AA, dom, true), 2);
    const auto f = random_experts(rng, dom, 2);
    const std::vector<double> ok{1.0, 1.0};
    CHECK_THROWS_AS(game.step(f, ok, 1.5), DomainError);
    CHECK_THROWS_AS(game.step(f, std::vector<double>{1.0, 1.2}, 0.5), ArgumentError);
    CHECK_THROWS_AS(game.step(f, std::vector<double>{1.0}, 0.5), ArgumentError);
    const std::vector<GridCdf> wrong{random_monotone_cdf(rng, GridDomain(0.0, 1.0, 8)), f[1]};
    CHECK_THROWS_AS(game.step(wrong, ok, 0.5), ArgumentError);
    CHECK(game.log().empty());
    CHECK_THROWS_AS(regret_report(game.log()), ArgumentError);
    CHECK_THROWS_AS(Game(config_for(AggregationMode::AA, dom), 0), ArgumentError);
}

TEST_CASE("square-loss aggregating algorithm") {
    SECTION("constant zero outcomes with experts 0 and 1") {
        std::vector<std::vector<double>> f(50, std::vector<double>{0.0, 1.0});
        std::vector<double> y(50, 0.0);
        const GameLog log = run_square_loss_game(f, y, 2.0);
        const auto rep = regret_report(log, std::log(2.0) / 2.0);
        CHECK(rep.final_regret <= std::log(2.0) / 2.0);
        CHECK(rep.regret_bound_satisfied);
        CHECK(log.learner_cumulative().back() > 0.0);
    }
    SECTION("one expert is followed") {
        std::vector<std::vector<double>> f(10, std::vector<double>{0.3});
        std::vector<double> y{0, 1, 1, 0, 1, 0, 0, 1, 1, 1};
        const GameLog log = run_square_loss_game(f, y, 2.0);
        for (const auto& s : log.steps()) CHECK(s.learner_loss == Approx(s.expert_losses[0]).margin(1e-12));
    }
    SECTION("alternating outcomes") {
        std::vector<std::vector<double>> f;
        std::vector<double> y;
        for (int t = 0; t < 400; ++t) {
            f.push_back({0.0, 1.0, 0.5, 0.9});
            y.push_back(t % 2);
        }
        const GameLog log = run_square_loss_game(f, y, 2.0);
        const auto rep = regret_report(log, std::log(4.0) / 2.0);
        CHECK(rep.regret_bound_satisfied);
    }
    SECTION("input errors") {
        std::vector<std::vector<double>> f(1, std::vector<double>{0.0, 1.0});
        CHECK_THROWS_AS(run_square_loss_game(f, std::vector<double>{0.5}, 2.0), ArgumentError);
        CHECK_THROWS_AS(run_square_loss_game(f, std::vector<double>{1.0}, 2.5), ArgumentError);
    }
}

TEST_CASE("game csv layout") {
    const GridDomain dom(0.0, 1.0, 8);
    CounterRng rng(7);
    Game game(config_for(AggregationMode::WA, dom), 2);
    game.step(random_experts(rng, dom, 2), 0.4);
    game.step(random_experts(rng, dom, 2), 0.9);
    std::ostringstream out;
    write_game_csv(out, game.log());
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,y,h,l_1,l_2,p_1,p_2,q_1,q_2,D_1,D_2");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 10);
    }
    CHECK(rows == 2);
}

#include <catch_amalgamated.hpp>

#include <json.hpp>

#include "crpsmix/errors.hpp"
#include "crpsmix/verify.hpp"

using namespace crpsmix;

TEST_CASE("random cdfs are valid") {
    CounterRng rng(1);
    for (int k = 0; k < 500; ++k) {
        const GridDomain dom(0.0, 1.0, 1 + rng.below(100));
        const GridCdf f = random_monotone_cdf(rng, dom);
        CHECK(f.values().back() == 1.0);
        for (std::size_t s = 1; s < f.cells(); ++s) CHECK(f.values()[s] >= f.values()[s - 1]);
    }
}

TEST_CASE("small suites pass with the correct learner") {
    VerifyOptions opts;
    opts.cases = 40;
    CHECK(check_crps_mixability(opts, AggregationMode::AA).passed);
    CHECK(check_crps_mixability(opts, AggregationMode::WA).passed);
    CHECK(check_vector_mixability(opts, 6, 3).passed);
    CHECK(check_square_loss_bound(opts).passed);
    CHECK(check_telescoping(opts, 400).passed);
    CHECK(check_discounted_regret(opts, 10).passed);
    CHECK(check_discretization(opts, 40).passed);
}

TEST_CASE("a mis-scaled substitution is caught with a witness") {
    VerifyOptions opts;
    opts.cases = 100;
    opts.substitution_rate = 4.0;
    const SuiteResult r = check_crps_mixability(opts, AggregationMode::AA);
    CHECK_FALSE(r.passed);
    CHECK(r.worst_margin < 0.0);
    REQUIRE_FALSE(r.witness.empty());
    const auto w = nlohmann::json::parse(r.witness);
    CHECK(w.is_object());
}

TEST_CASE("report json lists every suite") {
    VerifyOptions opts;
    opts.cases = 10;
    const VerifyReport rep = run_verify(opts);
    CHECK(rep.passed());
    const auto j = nlohmann::json::parse(to_json(rep, opts));
    CHECK(j.dump().find("crps") != std::string::npos);
    opts.cases = 0;
    CHECK_THROWS_AS(run_verify(opts), ArgumentError);
}

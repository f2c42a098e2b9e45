#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "crpsmix/errors.hpp"
#include "crpsmix/experts.hpp"
#include "crpsmix/random.hpp"

using namespace crpsmix;
using Catch::Approx;

namespace {

double trapezoid_cdf(const TriangularExpert& e, double x, std::size_t steps) {
    if (x <= e.left) return 0.0;
    const double hi = std::min(x, e.right);
    const double h = (hi - e.left) / static_cast<double>(steps);
    double acc = 0.5 * (e.density(e.left) + e.density(hi));
    for (std::size_t k = 1; k < steps; ++k) acc += e.density(e.left + h * static_cast<double>(k));
    return acc * h;
}

struct Sample2 {
    std::vector<Point2> points;
};

// Correlated Gaussian draws with the given moments.
std::vector<Point2> gaussian_cloud(CounterRng& rng, std::size_t n, double mt, double ml, double st, double sl,
                                   double rho) {
    std::vector<Point2> out(n);
    for (auto& p : out) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        p.temp = mt + st * z1;
        p.load = ml + sl * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2);
    }
    return out;
}

}  // namespace

TEST_CASE("triangular expert basics") {
    const TriangularExpert sym{0.0, 0.5, 1.0};
    CHECK(sym.cdf(0.5) == Approx(0.5).margin(1e-15));
    CHECK(sym.cdf(0.0) == 0.0);
    CHECK(sym.cdf(1.0) == 1.0);
    CHECK(sym.inverse_cdf(0.5) == Approx(0.5).margin(1e-15));
    CHECK_THROWS_AS((TriangularExpert{1.0, 1.0, 2.0}.validate()), ArgumentError);
    CHECK_THROWS_AS((TriangularExpert{0.0, 3.0, 2.0}.validate()), ArgumentError);

    const GridCdf g = triangular_cdf(TriangularExpert{2.0, 3.0, 7.0}, GridDomain(0.0, 10.0, 10));
    CHECK(g.values()[1] == 0.0);
    CHECK(g.values()[6] == 1.0);
    CHECK_THROWS_AS(triangular_cdf(TriangularExpert{-1.0, 3.0, 7.0}, GridDomain(0.0, 10.0, 10)), ArgumentError);
}

TEST_CASE("triangular cdf matches trapezoid integration of the density") {
    CounterRng rng(77);
    for (int k = 0; k < 100; ++k) {
        double pts[3] = {rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0)};
        std::sort(pts, pts + 3);
        if (pts[1] - pts[0] < 1e-3 || pts[2] - pts[1] < 1e-3) continue;
        const TriangularExpert e{pts[0], pts[1], pts[2]};
        const GridDomain dom(0.0, 10.0, 64);
        const GridCdf g = triangular_cdf(e, dom);
        for (std::size_t s = 1; s <= dom.cells(); s += 7) {
            CHECK(g.values()[s - 1] == Approx(trapezoid_cdf(e, dom.point(s), 20000)).margin(1e-6));
        }
        for (double u : {0.01, 0.3, 0.77, 0.999}) CHECK(e.cdf(e.inverse_cdf(u)) == Approx(u).margin(1e-12));
    }
}

TEST_CASE("em with one component returns the sample moments") {
    CounterRng rng(5);
    const auto pts = gaussian_cloud(rng, 400, 50.0, 3000.0, 12.0, 400.0, 0.6);
    const GmmFit fit = fit_gmm_em(pts, 1, 1);
    REQUIRE(fit.model.components.size() == 1);
    const auto& c = fit.model.components[0];
    double mt = 0, ml = 0;
    for (const auto& p : pts) {
        mt += p.temp;
        ml += p.load;
    }
    mt /= pts.size();
    ml /= pts.size();
    double vt = 0, vl = 0, ctl = 0;
    for (const auto& p : pts) {
        vt += (p.temp - mt) * (p.temp - mt);
        vl += (p.load - ml) * (p.load - ml);
        ctl += (p.temp - mt) * (p.load - ml);
    }
    vt /= pts.size();
    vl /= pts.size();
    ctl /= pts.size();
    CHECK(c.weight == Approx(1.0).margin(1e-15));
    CHECK(c.mean_temp == Approx(mt).epsilon(1e-12));
    CHECK(c.mean_load == Approx(ml).epsilon(1e-12));
    CHECK(c.var_temp == Approx(vt * (1.0 + 1e-6)).epsilon(1e-10));
    CHECK(c.var_load == Approx(vl * (1.0 + 1e-6)).epsilon(1e-10));
    CHECK(c.cov == Approx(ctl).epsilon(1e-10));
    CHECK(fit.converged);
}

TEST_CASE("em separates two clusters and its objective never decreases") {
    CounterRng rng(99);
    auto a = gaussian_cloud(rng, 600, 20.0, 1000.0, 3.0, 80.0, 0.3);
    auto b = gaussian_cloud(rng, 400, 80.0, 2500.0, 4.0, 120.0, -0.5);
    std::vector<Point2> pts(a);
    pts.insert(pts.end(), b.begin(), b.end());
    const GmmFit fit = fit_gmm_em(pts, 2, 3);
    REQUIRE(fit.model.components.size() == 2);
    auto c0 = fit.model.components[0];
    auto c1 = fit.model.components[1];
    if (c0.mean_temp > c1.mean_temp) std::swap(c0, c1);
    CHECK(std::abs(c0.mean_temp - 20.0) <= 0.1 * 3.0);
    CHECK(std::abs(c0.mean_load - 1000.0) <= 0.1 * 80.0);
    CHECK(std::abs(c1.mean_temp - 80.0) <= 0.1 * 4.0);
    CHECK(std::abs(c1.mean_load - 2500.0) <= 0.1 * 120.0);
    CHECK(c0.weight == Approx(0.6).margin(0.01));
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
        CHECK(fit.objective_trace[i] >= fit.objective_trace[i - 1] - 1e-9 * std::abs(fit.objective_trace[i - 1]));
    }
    CHECK(std::isfinite(fit.log_likelihood));
}

TEST_CASE("em is deterministic per seed and rejects bad input") {
    CounterRng rng(3);
    const auto pts = gaussian_cloud(rng, 200, 0.0, 0.0, 1.0, 1.0, 0.0);
    const auto f1 = fit_gmm_em(pts, 3, 42);
    const auto f2 = fit_gmm_em(pts, 3, 42);
    CHECK(f1.objective_trace == f2.objective_trace);

    const std::vector<Point2> same(50, Point2{1.0, 2.0});
    CHECK_THROWS_AS(fit_gmm_em(same, 2, 1), DegenerateFitError);
    CHECK_THROWS_AS(fit_gmm_em(pts, 4, 1), ArgumentError);
    CHECK_THROWS_AS(fit_gmm_em(std::span(pts).first(15), 2, 1), ArgumentError);
}

TEST_CASE("conditional cdf without correlation ignores temperature") {
    Gmm2D m{{GaussianComponent{1.0, 10.0, 5.0, 4.0, 0.0, 1.0}}};
    const GridDomain dom(0.0, 10.0, 100);
    const GridCdf a = conditional_load_cdf(m, -30.0, dom);
    const GridCdf b = conditional_load_cdf(m, 40.0, dom);
    for (std::size_t s = 0; s < dom.cells(); ++s) {
        CHECK(a.values()[s] == b.values()[s]);
        if (s + 1 < dom.cells()) {
            const double z = dom.point(s + 1);
            CHECK(a.values()[s] == Approx(0.5 * std::erfc(-(z - 5.0) / std::sqrt(2.0))).margin(1e-12));
        }
    }
}

TEST_CASE("conditional cdf tracks Monte Carlo draws") {
    const double st = 3.0, sl = 2.0, rho = 0.7;
    Gmm2D m{{GaussianComponent{1.0, 10.0, 20.0, st * st, rho * st * sl, sl * sl}}};
    const GridDomain dom(0.0, 40.0, 400);
    CounterRng rng(123);
    // Draw from the conditional law by rejection on a thin temperature slice.
    auto conditional_median = [&](double temp) {
        std::vector<double> loads;
        while (loads.size() < 4000) {
            const double z1 = rng.normal();
            const double t = 10.0 + st * z1;
            if (std::abs(t - temp) > 0.05) continue;
            loads.push_back(20.0 + sl * (rho * z1 + std::sqrt(1 - rho * rho) * rng.normal()));
        }
        std::sort(loads.begin(), loads.end());
        return loads[loads.size() / 2];
    };
    const double slope_mc = (conditional_median(13.0) - conditional_median(7.0)) / 6.0;
    CHECK(slope_mc == Approx(rho * sl / st).margin(0.05));
    const double slope_cdf = (quantile(conditional_load_cdf(m, 13.0, dom), 0.5) -
                              quantile(conditional_load_cdf(m, 7.0, dom), 0.5)) /
                             6.0;
    CHECK(slope_cdf == Approx(rho * sl / st).margin(2.0 * dom.delta() / 6.0 + 1e-12));

    // Two-component mixture: sup distance between the grid cdf and 1e5 draws.
    Gmm2D mix{{GaussianComponent{0.4, 0.0, 10.0, 4.0, 1.0, 3.0}, GaussianComponent{0.6, 3.0, 25.0, 2.0, -0.8, 5.0}}};
    const double temp = 1.5;
    std::vector<double> post(2), mean(2), sd(2);
    for (int j = 0; j < 2; ++j) {
        const auto& c = mix.components[j];
        post[j] = c.weight * std::exp(-0.5 * (temp - c.mean_temp) * (temp - c.mean_temp) / c.var_temp) /
                  std::sqrt(c.var_temp);
        mean[j] = c.mean_load + c.cov / c.var_temp * (temp - c.mean_temp);
        sd[j] = std::sqrt(c.var_load - c.cov * c.cov / c.var_temp);
    }
    const double norm = post[0] + post[1];
    std::vector<double> draws(100000);
    for (auto& x : draws) {
        const int j = rng.uniform() * norm < post[0] ? 0 : 1;
        x = std::clamp(mean[j] + sd[j] * rng.normal(), dom.a(), dom.b());
    }
    const GridCdf emp = empirical_cdf(draws, dom);
    const GridCdf cdf = conditional_load_cdf(mix, temp, dom);
    double sup = 0.0;
    for (std::size_t s = 0; s < dom.cells(); ++s) sup = std::max(sup, std::abs(emp.values()[s] - cdf.values()[s]));
    CHECK(sup <= 0.01);
}

TEST_CASE("mixture parameter files round-trip") {
    Gmm2D m{{GaussianComponent{0.25, 1.5, 2.5, 3.0, 0.5, 2.0}, GaussianComponent{0.75, -1.0, 7.0, 1.0, -0.2, 4.0}}};
    std::stringstream ss;
    write_gmm(ss, m);
    const Gmm2D r = read_gmm(ss);
    REQUIRE(r.components.size() == 2);
    CHECK(r.components[1].var_load == 4.0);
    CHECK(r.components[0].cov == 0.5);
    std::stringstream bad("2\n0.5 0 0 1 0 1\n");
    CHECK_THROWS_AS(read_gmm(bad), DataError);
}

TEST_CASE("confidence schedules") {
    const ConfidenceSchedule s{{ConfidenceBlock{10.0, 20.0, 4.0, 2.0}}, std::nullopt};
    CHECK(confidence_at(s, 15.0) == 1.0);
    CHECK(confidence_at(s, 10.0) == 1.0);
    CHECK(confidence_at(s, 20.0) == 1.0);
    CHECK(confidence_at(s, 8.0) == 0.5);
    CHECK(confidence_at(s, 21.0) == 0.5);
    CHECK(confidence_at(s, 6.0) == 0.0);
    CHECK(confidence_at(s, 22.0) == 0.0);
    CHECK(confidence_at(s, 100.0) == 0.0);

    const ConfidenceSchedule step{{ConfidenceBlock{6.0, 11.0}}, 24.0};
    CHECK(confidence_at(step, 5.0) == 0.0);
    CHECK(confidence_at(step, 6.0) == 1.0);
    CHECK(confidence_at(step, 11.0) == 1.0);
    CHECK(confidence_at(step, 12.0) == 0.0);
    CHECK(confidence_at(step, 24.0 * 5 + 7.0) == 1.0);

    const ConfidenceSchedule wrap{{ConfidenceBlock{11.0, 14.0, 1.5, 1.5}}, 12.0};
    CHECK(confidence_at(wrap, 0.5) == 1.0);
    CHECK(confidence_at(wrap, 2.75) == 0.5);
    CHECK(confidence_at(wrap, 10.25) == 0.5);
    CHECK(confidence_at(wrap, 6.0) == 0.0);

    CHECK(confidence_at(ConfidenceSchedule::always(), -1e9) == 1.0);

    CHECK(combined_confidence(s, step, 15.0, 7.0) == 1.0);
    CHECK(combined_confidence(s, step, 15.0, 3.0) == 0.0);
    CHECK(combined_confidence(s, s, 8.0, 21.0) == 0.25);

    CounterRng rng(1);
    for (int k = 0; k < 1000; ++k) {
        const double v = confidence_at(wrap, rng.uniform(-50.0, 50.0));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

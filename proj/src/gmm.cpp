#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "crpsmix/errors.hpp"
#include "crpsmix/experts.hpp"
#include "crpsmix/numeric.hpp"
#include "crpsmix/random.hpp"

namespace crpsmix {

namespace {

struct Ridge {
    double temp;
    double load;
};

double log_normal_2d(const GaussianComponent& c, Point2 p) {
    const double det = c.determinant();
    const double dt = p.temp - c.mean_temp;
    const double dl = p.load - c.mean_load;
    const double quad = (c.var_load * dt * dt - 2.0 * c.cov * dt * dl + c.var_temp * dl * dl) / det;
    return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
}

// -tr(R Sigma^-1)/2 for a diagonal ridge R.
double ridge_penalty(const GaussianComponent& c, Ridge r) {
    return -0.5 * (r.temp * c.var_load + r.load * c.var_temp) / c.determinant();
}

double log_normal_1d(double x, double mean, double var) {
    const double z = x - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * z * z / var;
}

// Weighted mean and ridged scatter for one component.
GaussianComponent m_step(std::span<const Point2> pts, std::span<const double> resp, double total, Ridge r) {
    double nk = 0.0;
    double st = 0.0;
    double sl = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        nk += resp[i];
        st += resp[i] * pts[i].temp;
        sl += resp[i] * pts[i].load;
    }
    if (!(nk > 1e-8 * total)) throw DegenerateFitError("mixture component collapsed to no points");
    GaussianComponent c{};
    c.weight = nk / total;
    c.mean_temp = st / nk;
    c.mean_load = sl / nk;
    double vtt = 0.0;
    double vtl = 0.0;
    double vll = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double dt = pts[i].temp - c.mean_temp;
        const double dl = pts[i].load - c.mean_load;
        vtt += resp[i] * dt * dt;
        vtl += resp[i] * dt * dl;
        vll += resp[i] * dl * dl;
    }
    c.var_temp = vtt / nk + r.temp;
    c.cov = vtl / nk;
    c.var_load = vll / nk + r.load;
    if (!(c.determinant() > 0.0)) throw DegenerateFitError("mixture component covariance became singular");
    return c;
}

// k-means++ seeding in standardized coordinates.
std::vector<Point2> seed_centers(std::span<const Point2> pts, int k, double sd_t, double sd_l, CounterRng& rng) {
    auto dist2 = [&](Point2 x, Point2 y) {
        const double a = (x.temp - y.temp) / sd_t;
        const double b = (x.load - y.load) / sd_l;
        return a * a + b * b;
    };
    std::vector<Point2> centers{pts[rng.below(pts.size())]};
    std::vector<double> d2(pts.size(), std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            d2[i] = std::min(d2[i], dist2(pts[i], centers.back()));
            total += d2[i];
        }
        if (!(total > 0.0)) throw DegenerateFitError("fewer distinct points than mixture components");
        double target = rng.uniform() * total;
        std::size_t pick = pts.size() - 1;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            target -= d2[i];
            if (target < 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(pts[pick]);
    }
    return centers;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void Gmm2D::validate() const {
    if (components.empty()) throw ArgumentError("mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0)) throw ArgumentError("mixture weights must be positive");
        if (!(c.var_temp > 0.0 && c.var_load > 0.0 && c.determinant() > 0.0)) {
            throw ArgumentError("component covariance must be positive definite");
        }
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("mixture weights must sum to 1");
}

double Gmm2D::log_density(Point2 p) const {
    std::vector<double> terms;
    terms.reserve(components.size());
    for (const auto& c : components) terms.push_back(std::log(c.weight) + log_normal_2d(c, p));
    return log_sum_exp(terms);
}

GmmFit fit_gmm_em(std::span<const Point2> points, int k, std::uint64_t seed, const EmOptions& options) {
    if (k < 1 || k > 3) throw ArgumentError("component count must be 1, 2 or 3");
    if (points.size() < static_cast<std::size_t>(10 * k)) {
        throw ArgumentError("EM needs at least " + std::to_string(10 * k) + " points, got " +
                            std::to_string(points.size()));
    }
    const double n = static_cast<double>(points.size());
    double mt = 0.0;
    double ml = 0.0;
    for (const auto& p : points) {
        mt += p.temp;
        ml += p.load;
    }
    mt /= n;
    ml /= n;
    double vt = 0.0;
    double vl = 0.0;
    double ctl = 0.0;
    for (const auto& p : points) {
        vt += (p.temp - mt) * (p.temp - mt);
        vl += (p.load - ml) * (p.load - ml);
        ctl += (p.temp - mt) * (p.load - ml);
    }
    vt /= n;
    vl /= n;
    ctl /= n;
    if (!(vt > 0.0) || !(vl > 0.0)) throw DegenerateFitError("data has zero variance in a coordinate");
    const Ridge ridge{options.ridge * vt, options.ridge * vl};

    CounterRng rng(seed, 0x67'6d'6d);
    const auto centers = seed_centers(points, k, std::sqrt(vt), std::sqrt(vl), rng);
    Gmm2D model;
    for (const auto& c : centers) {
        model.components.push_back({1.0 / k, c.temp, c.load, vt + ridge.temp, ctl, vl + ridge.load});
    }
    if (!(model.components.front().determinant() > 0.0)) {
        throw DegenerateFitError("data covariance is singular");
    }

    const std::size_t kk = model.components.size();
    std::vector<std::vector<double>> resp(kk, std::vector<double>(points.size()));
    std::vector<double> terms(kk);
    GmmFit fit;

    // Computes responsibilities for the current model and returns the ridged objective.
    auto e_step = [&]() {
        CompensatedSum objective;
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t j = 0; j < kk; ++j) {
                const auto& c = model.components[j];
                terms[j] = std::log(c.weight) + log_normal_2d(c, points[i]) + ridge_penalty(c, ridge);
            }
            const double lse = log_sum_exp(terms);
            objective.add(lse);
            for (std::size_t j = 0; j < kk; ++j) resp[j][i] = std::exp(terms[j] - lse);
        }
        return objective.value();
    };

    double current = e_step();
    fit.objective_trace.push_back(current);
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        Gmm2D next;
        for (std::size_t j = 0; j < kk; ++j) next.components.push_back(m_step(points, resp[j], n, ridge));
        model = std::move(next);
        const double updated = e_step();
        fit.objective_trace.push_back(updated);
        fit.iterations = iter;
        const double gain = (updated - current) / n;
        current = updated;
        if (gain < options.tolerance) {
            fit.converged = true;
            break;
        }
    }

    double weight_total = 0.0;
    for (const auto& c : model.components) weight_total += c.weight;
    for (auto& c : model.components) c.weight /= weight_total;

    CompensatedSum ll;
    for (const auto& p : points) ll.add(model.log_density(p));
    fit.log_likelihood = ll.value();
    fit.model = std::move(model);
    return fit;
}

GridCdf conditional_load_cdf(const Gmm2D& model, double temp, const GridDomain& domain) {
    if (!std::isfinite(temp)) throw ArgumentError("temperature must be finite");
    const std::size_t kk = model.components.size();
    std::vector<double> log_post(kk);
    std::vector<double> mean(kk);
    std::vector<double> sd(kk);
    for (std::size_t j = 0; j < kk; ++j) {
        const auto& c = model.components[j];
        log_post[j] = std::log(c.weight) + log_normal_1d(temp, c.mean_temp, c.var_temp);
        mean[j] = c.mean_load + c.cov / c.var_temp * (temp - c.mean_temp);
        sd[j] = std::sqrt(std::max(c.var_load - c.cov * c.cov / c.var_temp, 0.0));
    }
    const double norm = log_sum_exp(log_post);
    for (double& v : log_post) v = std::exp(v - norm);

    std::vector<double> values(domain.cells());
    for (std::size_t s = 1; s <= domain.cells(); ++s) {
        const double z = domain.point(s);
        double f = 0.0;
        for (std::size_t j = 0; j < kk; ++j) {
            const double phi = sd[j] > 0.0 ? 0.5 * std::erfc(-(z - mean[j]) / (sd[j] * std::numbers::sqrt2))
                                           : (z >= mean[j] ? 1.0 : 0.0);
            f += log_post[j] * phi;
        }
        values[s - 1] = std::min(f, 1.0);
    }
    values.back() = 1.0;
    return GridCdf(domain, std::move(values));
}

void write_gmm(std::ostream& out, const Gmm2D& model) {
    out << model.components.size() << '\n';
    for (const auto& c : model.components) {
        out << fmt(c.weight) << ' ' << fmt(c.mean_temp) << ' ' << fmt(c.mean_load) << ' ' << fmt(c.var_temp) << ' '
            << fmt(c.cov) << ' ' << fmt(c.var_load) << '\n';
    }
}

Gmm2D read_gmm(std::istream& in) {
    int k = 0;
    if (!(in >> k) || k < 1) throw DataError("mixture file: bad component count");
    Gmm2D model;
    for (int j = 0; j < k; ++j) {
        GaussianComponent c{};
        if (!(in >> c.weight >> c.mean_temp >> c.mean_load >> c.var_temp >> c.cov >> c.var_load)) {
            throw DataError("mixture file: truncated component " + std::to_string(j + 1));
        }
        model.components.push_back(c);
    }
    try {
        model.validate();
    } catch (const ArgumentError& e) {
        throw DataError(std::string("mixture file: ") + e.what());
    }
    return model;
}

}  // namespace crpsmix

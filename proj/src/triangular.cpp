#include <cmath>
#include <vector>

#include "crpsmix/errors.hpp"
#include "crpsmix/experts.hpp"

namespace crpsmix {

void TriangularExpert::validate() const {
    if (!(left < peak && peak < right)) throw ArgumentError("triangle needs left < peak < right");
}

double TriangularExpert::density(double x) const {
    if (x <= left || x >= right) return 0.0;
    const double base = right - left;
    if (x <= peak) return 2.0 * (x - left) / (base * (peak - left));
    return 2.0 * (right - x) / (base * (right - peak));
}

double TriangularExpert::cdf(double x) const {
    if (x <= left) return 0.0;
    if (x >= right) return 1.0;
    const double base = right - left;
    if (x <= peak) return (x - left) * (x - left) / (base * (peak - left));
    return 1.0 - (right - x) * (right - x) / (base * (right - peak));
}

double TriangularExpert::inverse_cdf(double u) const {
    const double base = right - left;
    const double split = (peak - left) / base;
    if (u <= split) return left + std::sqrt(u * base * (peak - left));
    return right - std::sqrt((1.0 - u) * base * (right - peak));
}

GridCdf triangular_cdf(const TriangularExpert& expert, const GridDomain& domain) {
    expert.validate();
    if (expert.left < domain.a() || expert.right > domain.b()) {
        throw ArgumentError("triangle support must lie inside the grid domain");
    }
    std::vector<double> values(domain.cells());
    for (std::size_t s = 1; s <= domain.cells(); ++s) values[s - 1] = expert.cdf(domain.point(s));
    return GridCdf(domain, std::move(values));
}

}  // namespace crpsmix

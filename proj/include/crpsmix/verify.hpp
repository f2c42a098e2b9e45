#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crpsmix/grid_cdf.hpp"
#include "crpsmix/mixing.hpp"
#include "crpsmix/random.hpp"

namespace crpsmix {

struct SuiteResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t checks = 0;
    bool passed = true;
    /// Smallest slack seen; negative on failure.
    double worst_margin = 0.0;
    /// JSON object describing the first falsifying case; empty when passed.
    std::string witness;
    double seconds = 0.0;
};

struct VerifyOptions {
    std::uint64_t seed = 20240601;
    std::size_t cases = 500;
    /// Square-loss rate used inside the CRPS substitution. Anything other
    /// than 2 is a deliberately broken learner.
    double substitution_rate = kCrpsSquareRate;
};

struct VerifyReport {
    std::vector<SuiteResult> suites;
    bool passed() const;
};

/// Random non-decreasing grid CDF ending at 1. Mixes smooth shapes, point
/// masses and flat stretches.
GridCdf random_monotone_cdf(CounterRng& rng, const GridDomain& domain);

/// e^{-eta crps(F, y)} >= sum q_i e^{-eta crps(F_i, y)} - tol at every grid outcome,
/// N in 2..8 and d in {16, 256, 1024}. AA uses eta = 2/(b-a), WA 1/(2(b-a)).
SuiteResult check_crps_mixability(const VerifyOptions& options, AggregationMode mode, double tol = 1e-9);

/// Exhaustive check of the vector square-loss inequality over all 2^d
/// binary outcomes at rate eta/d, d <= max_dim, N <= max_experts.
SuiteResult check_vector_mixability(const VerifyOptions& options, std::size_t max_dim = 12,
                                    std::size_t max_experts = 4, double eta = 2.0, double tol = 1e-10);

/// Square-loss games with binary outcomes: regret <= ln N / eta at every prefix.
SuiteResult check_square_loss_bound(const VerifyOptions& options);

/// Synthetic three-expert AA run: H_T <= -(1/eta) ln W_{T+1} + 1e-8 T at every T.
SuiteResult check_telescoping(const VerifyOptions& options, std::size_t steps = 3000);

/// Randomized adversaries with random, binary and all-zero confidence
/// patterns: sum_t p_it (h_t - l_it) <= ln N / eta for every expert and prefix.
SuiteResult check_discounted_regret(const VerifyOptions& options, std::size_t runs = 100);

/// |crps on d cells - crps on 2d cells| <= 2 (b-a)/d for random continuous CDFs.
SuiteResult check_discretization(const VerifyOptions& options, std::size_t cases = 200);

/// All suites above.
VerifyReport run_verify(const VerifyOptions& options);

/// Machine-readable summary including witnesses.
std::string to_json(const VerifyReport& report, const VerifyOptions& options);

}  // namespace crpsmix

#pragma once

#include <stdexcept>
#include <string>

namespace crpsmix {

/// Value outside the support [a, b] of a grid domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed arguments: mismatched grids, empty inputs, bad sizes.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Every confidence level is zero, so no reweighted distribution exists.
class AllAsleepError : public std::runtime_error {
public:
    AllAsleepError() : std::runtime_error("all experts asleep: every confidence level is zero") {}
};

/// An aggregation formula produced a result that violates a CDF invariant
/// by more than rounding noise.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// EM cannot fit a mixture to the given points.
class DegenerateFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data could not be read or failed validation.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace crpsmix

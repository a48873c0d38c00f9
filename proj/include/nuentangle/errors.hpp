#pragma once

#include <stdexcept>
#include <string>

namespace nuent {

/// Argument outside the mathematical domain of the quantity (e.g. an energy
/// where the decay spectrum turns negative).
struct OutOfDomain : std::domain_error {
    explicit OutOfDomain(const std::string& what) : std::domain_error(what) {}
};

/// distance <-> s conversion requested at zero (or negative) energy.
struct ZeroEnergy : std::domain_error {
    explicit ZeroEnergy(const std::string& what) : std::domain_error(what) {}
};

/// A search range with lo > hi.
struct EmptyRange : std::invalid_argument {
    explicit EmptyRange(const std::string& what) : std::invalid_argument(what) {}
};

/// The optimizer never saw a point satisfying the denominator floor.
struct NoFeasiblePoint : std::runtime_error {
    explicit NoFeasiblePoint(const std::string& what) : std::runtime_error(what) {}
};

} // namespace nuent

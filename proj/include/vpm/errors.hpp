#pragma once

#include <stdexcept>
#include <string>

namespace vpm {

/// Argument outside the mathematical domain of an operation.
using domain_error = std::domain_error;

/// Malformed request: bad kind tag, mismatched lengths, invalid configuration.
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A named object (corpus function id, suite name) could not be resolved.
class lookup_error : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

} // namespace vpm

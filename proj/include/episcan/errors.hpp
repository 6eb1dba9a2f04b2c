#pragma once

#include <stdexcept>
#include <string>

namespace episcan {

/// A block or lattice index falls outside the lattice.
class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Inconsistent or invalid configuration (bad parameters, empty groups, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input data (field files, report files).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A dense structure would exceed the configured memory cap.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace episcan

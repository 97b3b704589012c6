#pragma once

#include <stdexcept>
#include <string>

namespace rdde {

// Invalid user input: malformed specs, bad windows, dimension mismatches.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Evaluation requested outside the realized time window of a driver.
class WindowError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Non-finite values, failed root searches, degenerate decompositions.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rdde

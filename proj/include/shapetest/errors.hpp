#pragma once

#include <stdexcept>
#include <string>

namespace shapetest {

// Raised when ||y - Pi_V y|| is numerically zero: constant or duplicated
// input, a probability-zero event for continuous data.
struct ZeroResidualError : std::runtime_error {
    explicit ZeroResidualError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when the Monte-Carlo search finds no admissible u on the grid.
struct CalibrationError : std::runtime_error {
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shapetest

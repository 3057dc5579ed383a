#include "shapetest/design.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shapetest {

DesignGrid::DesignGrid(std::vector<double> xs) : x(std::move(xs)) {
    if (x.empty()) throw std::invalid_argument("DesignGrid: empty design");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) throw std::invalid_argument("DesignGrid: non-finite x");
        if (x[i] < 0.0 || x[i] > 1.0) {
            throw std::invalid_argument("DesignGrid: x[" + std::to_string(i + 1) +
                                        "]=" + std::to_string(x[i]) + " outside [0,1]");
        }
        if (i > 0 && !(x[i] > x[i - 1])) {
            throw std::invalid_argument("DesignGrid: x must be strictly increasing at position " +
                                        std::to_string(i + 1));
        }
    }
}

DesignGrid equispaced_design(int n) {
    if (n < 1) throw std::invalid_argument("equispaced_design: n must be positive");
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        xs[static_cast<std::size_t>(i - 1)] = static_cast<double>(i) / (n + 1);
    }
    return DesignGrid(std::move(xs));
}

}  // namespace shapetest

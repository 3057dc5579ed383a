#pragma once

#include <vector>

namespace shapetest {

// Strictly increasing design points in [0,1].
struct DesignGrid {
    std::vector<double> x;

    DesignGrid() = default;
    explicit DesignGrid(std::vector<double> xs);

    int n() const { return static_cast<int>(x.size()); }
};

// The simulation-study design x_i = i/(n+1).
DesignGrid equispaced_design(int n);

}  // namespace shapetest

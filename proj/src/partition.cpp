#include "shapetest/partition.hpp"

#include <stdexcept>
#include <string>

namespace shapetest {

Partition build_base_partition(int n, int ell_n) {
    if (n < 1) throw std::invalid_argument("build_base_partition: n must be positive");
    if (ell_n < 1 || ell_n > n) {
        throw std::invalid_argument("build_base_partition: ell_n must lie in {1,...,n}, got " +
                                    std::to_string(ell_n) + " for n=" + std::to_string(n));
    }
    Partition p;
    p.n = n;
    p.blocks.reserve(static_cast<std::size_t>(ell_n));
    // (k-1)n/ell_n < i <= kn/ell_n, evaluated in exact integer arithmetic.
    for (int k = 1; k <= ell_n; ++k) {
        const int lo = static_cast<int>((static_cast<long long>(k - 1) * n) / ell_n) + 1;
        const int hi = static_cast<int>((static_cast<long long>(k) * n) / ell_n);
        p.blocks.push_back({lo, hi});
    }
    return p;
}

Partition coarsen_partition(const Partition& base, int ell) {
    const int ell_n = base.scale();
    if (ell < 1 || ell > ell_n) {
        throw std::invalid_argument("coarsen_partition: ell must lie in {1,...," +
                                    std::to_string(ell_n) + "}, got " + std::to_string(ell));
    }
    Partition p;
    p.n = base.n;
    p.blocks.reserve(static_cast<std::size_t>(ell));
    for (int j = 1; j <= ell; ++j) {
        // base blocks k with (j-1)/ell < k/ell_n <= j/ell
        const int k_lo = static_cast<int>((static_cast<long long>(j - 1) * ell_n) / ell) + 1;
        const int k_hi = static_cast<int>((static_cast<long long>(j) * ell_n) / ell);
        p.blocks.push_back({base.blocks[static_cast<std::size_t>(k_lo - 1)].lo,
                            base.blocks[static_cast<std::size_t>(k_hi - 1)].hi});
    }
    return p;
}

const Partition& PartitionFamily::at(int ell) const {
    if (ell < 1 || ell > ell_n) {
        throw std::invalid_argument("PartitionFamily::at: scale " + std::to_string(ell) +
                                    " outside {1,...," + std::to_string(ell_n) + "}");
    }
    return levels[static_cast<std::size_t>(ell - 1)];
}

PartitionFamily partition_family(int n, int ell_n) {
    PartitionFamily fam;
    fam.n = n;
    fam.ell_n = ell_n;
    const Partition base = build_base_partition(n, ell_n);
    fam.levels.reserve(static_cast<std::size_t>(ell_n));
    for (int ell = 1; ell <= ell_n; ++ell) {
        fam.levels.push_back(coarsen_partition(base, ell));
    }
    return fam;
}

}  // namespace shapetest

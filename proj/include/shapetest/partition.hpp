#pragma once

// Almost-regular partitions of {1,...,n} and their coarsenings.
// Indices are 1-based throughout the partition math; conversion to 0-based
// array offsets happens at the call sites that touch data vectors.

#include <vector>

namespace shapetest {

struct Block {
    int lo = 0;  // first index, 1-based inclusive
    int hi = 0;  // last index, 1-based inclusive

    int size() const { return hi - lo + 1; }
    bool operator==(const Block&) const = default;
};

struct Partition {
    int n = 0;
    std::vector<Block> blocks;

    int scale() const { return static_cast<int>(blocks.size()); }
    bool operator==(const Partition&) const = default;
};

// Base partition: block k = { i : (k-1)/ell_n < i/n <= k/ell_n }.
// Rejects n < 1 and ell_n outside {1,...,n}.
Partition build_base_partition(int n, int ell_n);

// Coarsening into ell blocks: block j gathers the base blocks k with
// (j-1)/ell < k/ell_n <= j/ell.  Rejects ell outside {1,...,ell_n}.
Partition coarsen_partition(const Partition& base, int ell);

struct PartitionFamily {
    int n = 0;
    int ell_n = 0;
    std::vector<Partition> levels;  // levels[l-1] has exactly l blocks

    const Partition& at(int ell) const;
    const Partition& base() const { return levels.back(); }
};

PartitionFamily partition_family(int n, int ell_n);

}  // namespace shapetest

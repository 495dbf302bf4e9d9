#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace viewgraph {

/// Stratified k-fold assignment. Run r tests on fold r, validates on fold
/// (r + 1) mod k and trains on the remaining k - 2 folds.
struct FoldSplit {
    int k = 5;
    std::vector<int> fold_of;  // sample -> fold

    struct Roles {
        std::vector<std::size_t> train, val, test;
    };
    Roles roles(int run) const;
    std::vector<std::size_t> members(int fold) const;
};

/// Each class is shuffled with `seed` and dealt round-robin over the folds,
/// the dealing position carrying over from one class to the next so fold
/// sizes differ by at most one. Needs at least k samples per class.
FoldSplit make_folds(std::span<const int> labels, int k = 5, std::uint64_t seed = 0);

}  // namespace viewgraph

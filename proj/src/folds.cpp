#include "viewgraph/folds.hpp"

#include <algorithm>
#include <random>

#include "viewgraph/error.hpp"

namespace viewgraph {

std::vector<std::size_t> FoldSplit::members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(i);
    return out;
}

FoldSplit::Roles FoldSplit::roles(int run) const {
    if (run < 0 || run >= k) throw ArgumentError("run index out of range");
    if (k < 3) throw ArgumentError("train/val/test rotation needs at least 3 folds");
    const int val_fold = (run + 1) % k;
    Roles r;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == run) r.test.push_back(i);
        else if (fold_of[i] == val_fold) r.val.push_back(i);
        else r.train.push_back(i);
    }
    return r;
}

FoldSplit make_folds(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) throw ArgumentError("need at least two folds");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw ArgumentError("labels must be 0 or 1");
        by_class[labels[i]].push_back(i);
    }
    for (const auto& members : by_class) {
        if (members.size() < std::size_t(k)) {
            throw ArgumentError("each class needs at least " + std::to_string(k) + " samples for stratified folds");
        }
    }
    FoldSplit split;
    split.k = k;
    split.fold_of.assign(labels.size(), -1);
    std::mt19937_64 rng(seed);
    int next = 0;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i : members) {
            split.fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    return split;
}

}  // namespace viewgraph

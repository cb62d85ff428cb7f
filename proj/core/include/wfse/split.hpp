#pragma once

#include <cstdint>
#include <vector>

#include "wfse/trace.hpp"

namespace wfse {

// One cross-validation fold: the other folds' samples train the embedding,
// the held-out fold is halved into the two estimation sets.
struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> e1;
    std::vector<std::size_t> e2;
};

struct SplitPlan {
    std::vector<FoldSplit> folds;
    // Per-class remainders that keep folds and halves from having equal
    // per-class counts are dropped, never silently spread.
    std::size_t dropped_samples = 0;
};

// Stratified plan: per class, a seeded shuffle deals the largest multiple of
// 2*num_folds into equal fold chunks, each chunk halved per class into E1 and
// E2. Deterministic given seed. Throws DataError naming the first class with
// fewer than 2*num_folds samples.
SplitPlan make_folds(const TraceDataset& dataset, std::size_t num_folds = 5,
                     std::uint64_t seed = 0);

} // namespace wfse

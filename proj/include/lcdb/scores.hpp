#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <stdexcept>

#include "lcdb/errors.hpp"

namespace lcdb {

/// Ordered (cause, effect) pair of system-variable indices.
struct GenePair {
    std::size_t cause = 0;
    std::size_t effect = 0;

    friend auto operator<=>(const GenePair&, const GenePair&) = default;
};

/// Stabilized prediction counts over `runs` estimator runs.
struct PredictionScores {
    std::map<GenePair, int> counts;
    int runs = 1;

    void add(GenePair pair, int count = 1) {
        if (pair.cause == pair.effect) throw DomainError("prediction pair with cause == effect");
        counts[pair] += count;
    }

    int count(GenePair pair) const {
        const auto it = counts.find(pair);
        return it == counts.end() ? 0 : it->second;
    }

    bool contains(GenePair pair) const { return counts.count(pair) != 0; }
};

}  // namespace lcdb

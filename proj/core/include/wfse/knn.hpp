#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "wfse/feature_matrix.hpp"

namespace wfse {

// Both backends must return identical results, bit for bit. They share one
// distance function, rank neighbors by (squared distance, index), and the
// tree prunes only cells whose one-dimensional bound strictly exceeds the
// current worst candidate, so boundary ties never diverge.
enum class KnnBackend { BruteForce, SpatialTree };

// Accumulates in dimension order; every distance in either backend goes
// through here so floating-point rounding is identical.
double squared_distance(const double* a, const double* b, std::size_t dim);

class KnnIndex {
public:
    static constexpr std::uint32_t kNoExclude = 0xffffffffu;

    // Copies the points. dim >= 1, values.size() divisible by dim.
    KnnIndex(std::vector<double> values, std::size_t dim, KnnBackend backend);

    std::size_t size() const { return count_; }
    std::size_t dim() const { return dim_; }
    const double* point(std::uint32_t i) const { return values_.data() + i * dim_; }

    // k nearest points by (squared distance, index), ascending. exclude names
    // one point to skip, for queries that are themselves reference points.
    // Throws ConfigError when fewer than k points are available.
    std::vector<std::pair<double, std::uint32_t>> nearest(const double* query, std::size_t k,
                                                          std::uint32_t exclude = kNoExclude) const;

    // Number of points with squared distance <= radius_sq, minus the excluded
    // one when it qualifies.
    std::size_t count_within(const double* query, double radius_sq,
                             std::uint32_t exclude = kNoExclude) const;

private:
    struct Node {
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::uint32_t split_dim = 0;
        double split_val = 0.0;
        bool leaf = true;
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end);

    std::vector<double> values_;
    std::size_t dim_;
    std::size_t count_;
    KnnBackend backend_;
    std::vector<std::uint32_t> order_; // tree leaves index into this permutation
    std::vector<Node> nodes_;
    std::uint32_t root_ = 0;
};

} // namespace wfse

#include "wfse/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wfse/errors.hpp"

namespace wfse {

double squared_distance(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

namespace {

constexpr std::uint32_t kLeafSize = 16;

using Candidate = std::pair<double, std::uint32_t>;

// Max-heap on (squared distance, index); top is the current worst keeper.
struct NeighborHeap {
    std::vector<Candidate> heap;
    std::size_t k;

    explicit NeighborHeap(std::size_t k_) : k(k_) { heap.reserve(k_); }

    bool full() const { return heap.size() == k; }
    const Candidate& worst() const { return heap.front(); }

    void offer(double d2, std::uint32_t idx) {
        const Candidate c{d2, idx};
        if (!full()) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end());
        } else if (c < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end());
        }
    }

    std::vector<Candidate> sorted() && {
        std::sort_heap(heap.begin(), heap.end());
        return std::move(heap);
    }
};

} // namespace

KnnIndex::KnnIndex(std::vector<double> values, std::size_t dim, KnnBackend backend)
    : values_(std::move(values)), dim_(dim), backend_(backend) {
    if (dim_ == 0) throw ConfigError("KnnIndex: dimension must be >= 1");
    if (values_.size() % dim_ != 0) throw ConfigError("KnnIndex: values not divisible by dim");
    count_ = values_.size() / dim_;
    if (backend_ == KnnBackend::SpatialTree && count_ > 0) {
        order_.resize(count_);
        std::iota(order_.begin(), order_.end(), 0u);
        nodes_.reserve(2 * count_ / kLeafSize + 2);
        root_ = build(0, static_cast<std::uint32_t>(count_));
    }
}

std::uint32_t KnnIndex::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }

    std::uint32_t split_dim = 0;
    double best_spread = -1.0;
    for (std::size_t j = 0; j < dim_; ++j) {
        double lo = point(order_[begin])[j];
        double hi = lo;
        for (std::uint32_t i = begin + 1; i < end; ++i) {
            const double v = point(order_[i])[j];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best_spread) {
            best_spread = hi - lo;
            split_dim = static_cast<std::uint32_t>(j);
        }
    }

    const std::uint32_t mid = begin + (end - begin) / 2;
    // Index tie-break keeps the partition deterministic when coordinates
    // repeat, which duplicated traces make common.
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double va = point(a)[split_dim];
                         const double vb = point(b)[split_dim];
                         if (va != vb) return va < vb;
                         return a < b;
                     });

    nodes_[id].leaf = false;
    nodes_[id].split_dim = split_dim;
    nodes_[id].split_val = point(order_[mid])[split_dim];
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<Candidate> KnnIndex::nearest(const double* query, std::size_t k,
                                         std::uint32_t exclude) const {
    const std::size_t available = count_ - (exclude != kNoExclude && exclude < count_ ? 1 : 0);
    if (k == 0 || k > available)
        throw ConfigError("KnnIndex::nearest: need k in [1, " + std::to_string(available) +
                          "], got " + std::to_string(k));

    NeighborHeap heap(k);
    if (backend_ == KnnBackend::BruteForce) {
        for (std::uint32_t i = 0; i < count_; ++i) {
            if (i == exclude) continue;
            heap.offer(squared_distance(query, point(i), dim_), i);
        }
        return std::move(heap).sorted();
    }

    // Near child first; the far child's one-dimensional bound is re-checked
    // at pop time, after the near subtree has tightened the heap. A cell is
    // skipped only when its bound strictly exceeds the worst kept candidate,
    // so equal-distance points are always visited and index ties stay exact.
    std::vector<std::pair<double, std::uint32_t>> stack;
    stack.emplace_back(0.0, root_);
    while (!stack.empty()) {
        const auto [bound, node_id] = stack.back();
        stack.pop_back();
        if (heap.full() && bound > heap.worst().first) continue;
        const Node& n = nodes_[node_id];
        if (n.leaf) {
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                const std::uint32_t idx = order_[i];
                if (idx == exclude) continue;
                heap.offer(squared_distance(query, point(idx), dim_), idx);
            }
            continue;
        }
        const double diff = query[n.split_dim] - n.split_val;
        const std::uint32_t near = diff <= 0.0 ? n.left : n.right;
        const std::uint32_t far = diff <= 0.0 ? n.right : n.left;
        stack.emplace_back(std::max(bound, diff * diff), far);
        stack.emplace_back(bound, near);
    }
    return std::move(heap).sorted();
}

std::size_t KnnIndex::count_within(const double* query, double radius_sq,
                                   std::uint32_t exclude) const {
    std::size_t count = 0;
    if (backend_ == KnnBackend::BruteForce) {
        for (std::uint32_t i = 0; i < count_; ++i) {
            if (i == exclude) continue;
            if (squared_distance(query, point(i), dim_) <= radius_sq) ++count;
        }
        return count;
    }

    if (count_ == 0) return 0;
    std::vector<std::uint32_t> stack;
    stack.push_back(root_);
    while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        if (n.leaf) {
            for (std::uint32_t i = n.begin; i < n.end; ++i) {
                const std::uint32_t idx = order_[i];
                if (idx == exclude) continue;
                if (squared_distance(query, point(idx), dim_) <= radius_sq) ++count;
            }
            continue;
        }
        const double diff = query[n.split_dim] - n.split_val;
        const std::uint32_t near = diff <= 0.0 ? n.left : n.right;
        const std::uint32_t far = diff <= 0.0 ? n.right : n.left;
        if (diff * diff <= radius_sq) stack.push_back(far);
        stack.push_back(near);
    }
    return count;
}

} // namespace wfse

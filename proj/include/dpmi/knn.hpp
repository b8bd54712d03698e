#pragma once

// Exact k-th nearest-neighbor Euclidean distances. Three paths: a sorted
// two-pointer walk for d=1, a k-d tree for the general case, and a quadratic
// brute-force used for tiny inputs and as the oracle in tests. All paths
// agree exactly (same distance values; ties occupy consecutive ranks).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "common.hpp"

namespace dpmi {

struct PointSet {
    // borrowed view: points are stored row-major in `coords`, m rows of d
    const double* coords = nullptr;
    std::size_t m = 0;
    std::size_t d = 0;

    PointSet() = default;
    PointSet(const double* c, std::size_t m_, std::size_t d_) : coords(c), m(m_), d(d_) {}
    explicit PointSet(const Matrix& mat)
        : coords(mat.data().data()), m(mat.rows()), d(mat.cols()) {}
    PointSet(const std::vector<double>& values)  // 1-d convenience
        : coords(values.data()), m(values.size()), d(1) {}

    const double* row(std::size_t i) const { return coords + i * d; }
};

struct KnnResult {
    unsigned k = 0;
    std::vector<double> distances;  // distance from point i to its k-th nearest other point
    std::size_t zero_count = 0;     // exact zeros among the reported distances
};

namespace detail {

inline double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

// Bounded max-heap of the k smallest squared distances seen so far.
class KBest {
public:
    explicit KBest(unsigned k) : k_(k) { heap_.reserve(k); }

    double worst() const {
        return heap_.size() < k_ ? std::numeric_limits<double>::infinity() : heap_.front();
    }
    void offer(double sq) {
        if (heap_.size() < k_) {
            heap_.push_back(sq);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (sq < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = sq;
            std::push_heap(heap_.begin(), heap_.end());
        }
    }
    double kth() const { return heap_.front(); }

private:
    unsigned k_;
    std::vector<double> heap_;
};

}  // namespace detail

// O(m^2) reference: for each point, the k-th smallest distance to the others.
inline KnnResult knn_distances_brute(const PointSet& pts, unsigned k) {
    if (pts.m < 2) throw usage_error("knn: need at least 2 points");
    if (k < 1 || k > pts.m - 1) throw usage_error("knn: k out of range");
    KnnResult out;
    out.k = k;
    out.distances.resize(pts.m);
    for (std::size_t i = 0; i < pts.m; ++i) {
        detail::KBest best(k);
        for (std::size_t j = 0; j < pts.m; ++j) {
            if (j == i) continue;
            const double sq = detail::sq_dist(pts.row(i), pts.row(j), pts.d);
            best.offer(sq);
        }
        const double dist = std::sqrt(best.kth());
        out.distances[i] = dist;
        if (dist == 0.0) ++out.zero_count;
    }
    return out;
}

// Sorted two-pointer walk for the 1-d case: the k-th neighbor of x_i among
// sorted values lies inside a window of k positions on each side.
inline KnnResult knn_distances_1d(const std::vector<double>& values, unsigned k) {
    const std::size_t m = values.size();
    if (m < 2) throw usage_error("knn: need at least 2 points");
    if (k < 1 || k > m - 1) throw usage_error("knn: k out of range");

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    KnnResult out;
    out.k = k;
    out.distances.resize(m);
    std::vector<double> window;
    window.reserve(2 * k);
    for (std::size_t pos = 0; pos < m; ++pos) {
        const double x = values[order[pos]];
        window.clear();
        const std::size_t lo = pos >= k ? pos - k : 0;
        const std::size_t hi = std::min(m - 1, pos + k);
        for (std::size_t q = lo; q <= hi; ++q)
            if (q != pos) window.push_back(std::abs(values[order[q]] - x));
        std::nth_element(window.begin(), window.begin() + (k - 1), window.end());
        const double dist = window[k - 1];
        out.distances[order[pos]] = dist;
        if (dist == 0.0) ++out.zero_count;
    }
    return out;
}

// k-d tree over an immutable point set; built once, queried per point.
class KdTree {
public:
    KdTree(const PointSet& pts) : pts_(pts) {
        index_.resize(pts.m);
        std::iota(index_.begin(), index_.end(), 0);
        nodes_.reserve(2 * pts.m);
        root_ = build(0, pts.m, 0);
    }

    // squared distance from pts[i] to its k-th nearest other point
    double kth_sq_dist(std::size_t i, unsigned k) const {
        detail::KBest best(k);
        search(root_, pts_.row(i), i, best);
        return best.kth();
    }

private:
    struct Node {
        double split = 0.0;
        unsigned axis = 0;
        int left = -1, right = -1;
        std::size_t begin = 0, end = 0;  // leaf range into index_
        bool leaf = false;
    };

    static constexpr std::size_t kLeafSize = 16;

    int build(std::size_t begin, std::size_t end, unsigned depth) {
        Node node;
        if (end - begin <= kLeafSize) {
            node.leaf = true;
            node.begin = begin;
            node.end = end;
            nodes_.push_back(node);
            return static_cast<int>(nodes_.size() - 1);
        }
        const unsigned axis = depth % pts_.d;
        const std::size_t mid = (begin + end) / 2;
        std::nth_element(index_.begin() + begin, index_.begin() + mid,
                         index_.begin() + end, [&](std::size_t a, std::size_t b) {
                             return pts_.row(a)[axis] < pts_.row(b)[axis];
                         });
        node.axis = axis;
        node.split = pts_.row(index_[mid])[axis];
        nodes_.push_back(node);
        const int self = static_cast<int>(nodes_.size() - 1);
        const int l = build(begin, mid, depth + 1);
        const int r = build(mid, end, depth + 1);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    void search(int ni, const double* q, std::size_t skip, detail::KBest& best) const {
        const Node& node = nodes_[ni];
        if (node.leaf) {
            for (std::size_t t = node.begin; t < node.end; ++t) {
                const std::size_t j = index_[t];
                if (j == skip) continue;
                best.offer(detail::sq_dist(q, pts_.row(j), pts_.d));
            }
            return;
        }
        const double delta = q[node.axis] - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        search(near, q, skip, best);
        if (delta * delta < best.worst()) search(far, q, skip, best);
    }

    PointSet pts_;
    std::vector<std::size_t> index_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// General entry point. Dispatches to the 1-d walk, brute force for tiny sets,
// or the k-d tree.
inline KnnResult knn_distances(const PointSet& pts, unsigned k) {
    if (pts.m < 2) throw usage_error("knn: need at least 2 points");
    if (k < 1 || k > pts.m - 1) throw usage_error("knn: k out of range");
    if (pts.d == 1) {
        std::vector<double> v(pts.coords, pts.coords + pts.m);
        return knn_distances_1d(v, k);
    }
    if (pts.m <= 64) return knn_distances_brute(pts, k);

    KdTree tree(pts);
    KnnResult out;
    out.k = k;
    out.distances.resize(pts.m);
    for (std::size_t i = 0; i < pts.m; ++i) {
        const double dist = std::sqrt(tree.kth_sq_dist(i, k));
        out.distances[i] = dist;
        if (dist == 0.0) ++out.zero_count;
    }
    return out;
}

}  // namespace dpmi

#pragma once

// The two entropy estimators: the unweighted k-NN estimator
//
//   H = (d/m) sum_i log R_i + log(pi^{d/2}/Gamma(d/2+1)) - L_{k-1} + gamma + log(m-1)
//
// and its weighted form over a discrete random measure, where uniform weights
// 1/m recover the unweighted value exactly. The m in log(m-1) is the number
// of support points actually present in the point set handed in.

#include <cmath>
#include <cstddef>
#include <vector>

#include "common.hpp"
#include "knn.hpp"
#include "stats.hpp"

namespace dpmi {

struct EntropyEstimate {
    double value = 0.0;
    unsigned k = 0;
    std::size_t m = 0;               // point count used
    std::size_t zero_distance_count = 0;
};

// Shared constant block of both estimators.
inline double entropy_constant(unsigned d, unsigned k, std::size_t m) {
    return unit_ball_log_volume(d) - harmonic_number(k - 1) + euler_gamma
        + std::log(static_cast<double>(m - 1));
}

namespace detail {

// Floors zero distances at epsilon so the log stays finite; count is reported
// so callers can see how often the guard fired.
inline double floored_log(double r, double epsilon, std::size_t& zeros) {
    if (r <= 0.0) {
        ++zeros;
        r = epsilon;
    }
    return std::log(r);
}

}  // namespace detail

inline EntropyEstimate knn_entropy(const PointSet& pts, unsigned k,
                                   double epsilon_floor = 1e-10) {
    if (pts.m < static_cast<std::size_t>(k) + 1)
        throw usage_error("knn_entropy: need at least k+1 points");
    const KnnResult nn = knn_distances(pts, k);
    if (nn.zero_count == pts.m)
        throw degenerate_error("knn_entropy: all pairwise distances zero");

    EntropyEstimate est;
    est.k = k;
    est.m = pts.m;
    double sum_log = 0.0;
    for (double r : nn.distances)
        sum_log += detail::floored_log(r, epsilon_floor, est.zero_distance_count);
    est.value = static_cast<double>(pts.d) / static_cast<double>(pts.m) * sum_log
        + entropy_constant(pts.d, k, pts.m);
    return est;
}

// Weighted form: atom i contributes weight[i] * d * log R_i instead of the
// uniform 1/m. Weights must already be normalized.
inline EntropyEstimate weighted_knn_entropy(const PointSet& atoms,
                                            const std::vector<double>& weights,
                                            unsigned k,
                                            double epsilon_floor = 1e-10) {
    if (atoms.m < static_cast<std::size_t>(k) + 1)
        throw usage_error("weighted_knn_entropy: need at least k+1 atoms");
    if (weights.size() != atoms.m)
        throw usage_error("weighted_knn_entropy: weight count != atom count");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw usage_error("weighted_knn_entropy: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-10)
        throw usage_error("weighted_knn_entropy: weights must sum to 1");

    const KnnResult nn = knn_distances(atoms, k);
    if (nn.zero_count == atoms.m)
        throw degenerate_error("weighted_knn_entropy: all pairwise distances zero");

    EntropyEstimate est;
    est.k = k;
    est.m = atoms.m;
    double weighted_sum = 0.0;
    for (std::size_t i = 0; i < atoms.m; ++i) {
        const double lr =
            detail::floored_log(nn.distances[i], epsilon_floor, est.zero_distance_count);
        weighted_sum += weights[i] * lr;
    }
    est.value = static_cast<double>(atoms.d) * weighted_sum
        + entropy_constant(atoms.d, k, atoms.m);
    return est;
}

}  // namespace dpmi

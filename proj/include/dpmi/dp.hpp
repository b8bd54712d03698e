#pragma once

// Finite approximation of the Dirichlet-process posterior DP(a+n, G_{a,n}),
// G_{a,n} = a/(a+n) G + n/(a+n) F_n. Conceptually the approximation is
// P_N = sum_{i=1}^N J_i delta_{Y_i} with Y_i iid G_{a,n} and
// (J_1..J_N) ~ Dirichlet((a+n)/N, ..., (a+n)/N).
//
// With a small and N >> n, most Y_i are exact copies of data rows, so the
// N-atom multiset collapses onto roughly n distinct positions. We store the
// measure in collapsed form: one entry per *distinct* atom with its
// multiplicity, and the Dirichlet weight of each entry drawn as
// Gamma(multiplicity * (a+n)/N) — summing the i.i.d. Gamma((a+n)/N) shares of
// identical atoms, which is the exact aggregation law of the Dirichlet.
// Nearest-neighbor geometry then runs over distinct positions only; see the
// repo notes on why treating copies as separate jittered points wrecks the
// estimator (the k nearest neighbors of every atom become its own copies and
// the entropy estimate measures the jitter scale, not the data).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "common.hpp"
#include "stats.hpp"

namespace dpmi {

struct PriorSpec {
    double concentration = 0.05;  // a
    BaseMeasure base;             // G; default set by callers to standard normal

    void validate() const {
        if (!(concentration > 0.0)) throw usage_error("prior: a > 0 required");
    }
};

struct JitterPolicy {
    double scale = 0.01;  // per-dimension sd multiplier; 0 disables
};

// Collapsed representation of P_N. weights[i] is the total Dirichlet mass of
// all copies of atoms.row(i); multiplicity[i] is the copy count (so
// sum(multiplicity) == N). source_prior[i] records which mixture branch the
// atom came from.
struct DPApproximation {
    Matrix atoms;                        // M x d distinct positions
    std::vector<double> weights;         // length M, sums to 1
    std::vector<std::uint32_t> multiplicity;  // length M, sums to N
    std::vector<bool> source_prior;      // length M
    std::size_t total_atoms = 0;         // N

    std::size_t distinct_count() const { return atoms.rows(); }
};

// Atom positions + multiplicities from the base mixture: each of the N
// conceptual atoms independently picks the prior branch with probability
// a/(a+n), otherwise a uniformly random data row. Row identity is the dedup
// key, so after aggregation the only way two atoms can coincide is when the
// dataset itself contains exactly duplicated rows (rounded measurements,
// repeated records). Those rows — and only those — receive additive Gaussian
// jitter (scale * per-column sd) so every atom position is distinct and k-NN
// distances stay strictly positive. Atoms born from unique rows sit at the
// exact data position, which keeps the estimate independent of the jitter
// scale on continuous data; prior draws are continuous already and are never
// jittered.
struct BaseSampleResult {
    Matrix atoms;
    std::vector<std::uint32_t> multiplicity;
    std::vector<bool> source_prior;
    std::size_t total_atoms = 0;
};

inline BaseSampleResult posterior_base_sample(const Matrix& data,
                                              const PriorSpec& prior,
                                              std::size_t N,
                                              const JitterPolicy& jitter,
                                              std::mt19937_64& rng) {
    prior.validate();
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    if (n < 2) throw usage_error("posterior_base_sample: need n >= 2 data rows");
    if (N < 2) throw usage_error("posterior_base_sample: need N >= 2");
    if (prior.base.dim != d)
        throw usage_error("posterior_base_sample: base measure dimension != data dimension");

    const double a = prior.concentration;
    const double p_prior = a / (a + static_cast<double>(n));

    // One pass over the N conceptual atoms: count row hits, collect prior draws.
    std::vector<std::uint32_t> counts(n, 0);
    std::size_t n_prior = 0;
    {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t i = 0; i < N; ++i) {
            if (unif(rng) < p_prior) ++n_prior;
            else ++counts[pick(rng)];
        }
    }
    Matrix prior_draws;
    if (n_prior > 0) prior_draws = sample_scenario(prior.base, n_prior, rng);

    std::size_t hit_rows = 0;
    for (auto c : counts) hit_rows += (c > 0);

    BaseSampleResult out;
    out.total_atoms = N;
    out.atoms = Matrix(hit_rows + n_prior, d);
    out.multiplicity.reserve(hit_rows + n_prior);
    out.source_prior.reserve(hit_rows + n_prior);

    // Mark rows that appear more than once (exact coordinate-wise equality):
    // only their atoms need jitter to keep positions distinct.
    std::vector<bool> duplicated(n, false);
    bool any_duplicated = false;
    if (jitter.scale > 0.0) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            for (std::size_t j = 0; j < d; ++j) {
                if (data(x, j) < data(y, j)) return true;
                if (data(x, j) > data(y, j)) return false;
            }
            return false;
        });
        auto rows_equal = [&](std::size_t x, std::size_t y) {
            for (std::size_t j = 0; j < d; ++j)
                if (data(x, j) != data(y, j)) return false;
            return true;
        };
        for (std::size_t i = 1; i < n; ++i) {
            if (rows_equal(order[i - 1], order[i])) {
                duplicated[order[i - 1]] = true;
                duplicated[order[i]] = true;
                any_duplicated = true;
            }
        }
    }

    // per-column sd of the data, for the jitter scale
    std::vector<double> col_sd(d, 0.0);
    if (any_duplicated) {
        for (std::size_t j = 0; j < d; ++j) {
            double mu = 0.0;
            for (std::size_t i = 0; i < n; ++i) mu += data(i, j);
            mu /= static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double t = data(i, j) - mu;
                ss += t * t;
            }
            col_sd[j] = std::sqrt(ss / static_cast<double>(n - 1));
        }
    }

    std::normal_distribution<double> stdn(0.0, 1.0);
    std::size_t row_out = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[i] == 0) continue;
        for (std::size_t j = 0; j < d; ++j) {
            double v = data(i, j);
            if (duplicated[i]) v += jitter.scale * col_sd[j] * stdn(rng);
            out.atoms(row_out, j) = v;
        }
        out.multiplicity.push_back(counts[i]);
        out.source_prior.push_back(false);
        ++row_out;
    }
    for (std::size_t i = 0; i < n_prior; ++i) {
        for (std::size_t j = 0; j < d; ++j) out.atoms(row_out, j) = prior_draws(i, j);
        out.multiplicity.push_back(1);
        out.source_prior.push_back(true);
        ++row_out;
    }
    return out;
}

// Normalized i.i.d. Gamma((a+n)/N, 1) — the symmetric
// Dirichlet((a+n)/N, ..., (a+n)/N). std::gamma_distribution handles
// shape < 1; the retry loop covers the (absurdly unlikely) event that every
// draw underflows to exact zero.
inline std::vector<double> dirichlet_weights(std::size_t N, double total_mass,
                                             std::mt19937_64& rng) {
    if (N < 1) throw usage_error("dirichlet_weights: N >= 1 required");
    if (!(total_mass > 0.0)) throw usage_error("dirichlet_weights: total_mass > 0 required");
    std::vector<double> w(N);
    const double shape = total_mass / static_cast<double>(N);
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::gamma_distribution<double> gamma(shape, 1.0);
        double sum = 0.0;
        for (auto& v : w) {
            v = gamma(rng);
            sum += v;
        }
        if (sum > 0.0 && std::isfinite(sum)) {
            for (auto& v : w) v /= sum;
            return w;
        }
    }
    throw degenerate_error("dirichlet_weights: gamma draws degenerate (all zero)");
}

// Aggregated weights for a collapsed atom list: the total weight of m copies
// of one atom is Gamma(m * shape), exactly the sum of m iid Gamma(shape).
inline std::vector<double> aggregated_dirichlet_weights(
    const std::vector<std::uint32_t>& multiplicity, double total_mass,
    std::size_t total_atoms, std::mt19937_64& rng) {
    if (multiplicity.empty()) throw usage_error("dirichlet weights: no atoms");
    const double unit_shape = total_mass / static_cast<double>(total_atoms);
    std::vector<double> w(multiplicity.size());
    for (int attempt = 0; attempt < 100; ++attempt) {
        double sum = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            std::gamma_distribution<double> gamma(unit_shape * multiplicity[i], 1.0);
            w[i] = gamma(rng);
            sum += w[i];
        }
        if (sum > 0.0 && std::isfinite(sum)) {
            for (auto& v : w) v /= sum;
            return w;
        }
    }
    throw degenerate_error("dirichlet weights: gamma draws degenerate (all zero)");
}

inline DPApproximation sample_dp_posterior(const Matrix& data, const PriorSpec& prior,
                                           std::size_t N, const JitterPolicy& jitter,
                                           std::mt19937_64& rng) {
    BaseSampleResult base = posterior_base_sample(data, prior, N, jitter, rng);
    const double total_mass = prior.concentration + static_cast<double>(data.rows());
    DPApproximation dp;
    dp.atoms = std::move(base.atoms);
    dp.multiplicity = std::move(base.multiplicity);
    dp.source_prior = std::move(base.source_prior);
    dp.total_atoms = base.total_atoms;
    dp.weights = aggregated_dirichlet_weights(dp.multiplicity, total_mass,
                                              dp.total_atoms, rng);
    return dp;
}

}  // namespace dpmi

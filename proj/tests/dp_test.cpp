#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <dpmi/common.hpp>
#include <dpmi/dp.hpp>
#include <dpmi/stats.hpp>

using namespace dpmi;

namespace {

Matrix gaussian_data(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng = make_stream(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) = g(rng);
    return out;
}

PriorSpec standard_prior(double a, unsigned d) {
    PriorSpec p;
    p.concentration = a;
    p.base = standard_normal_base(d);
    return p;
}

}  // namespace

TEST(DirichletWeights, SymmetricBasics) {
    std::mt19937_64 rng = make_stream(501);
    const std::vector<double> w = dirichlet_weights(1000, 50.05, rng);
    ASSERT_EQ(w.size(), 1000u);
    double sum = 0.0;
    for (double v : w) {
        EXPECT_GE(v, 0.0);
        sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(DirichletWeights, TinyShapeNeverNaN) {
    // shape 0.05 per component puts most mass near zero; the normalization
    // must survive 1e5 draws without a NaN or an un-normalized vector
    std::mt19937_64 rng = make_stream(502);
    for (int rep = 0; rep < 100000; ++rep) {
        const std::vector<double> w = dirichlet_weights(100, 5.0, rng);  // shape 0.05
        double sum = 0.0;
        for (double v : w) {
            ASSERT_FALSE(std::isnan(v));
            sum += v;
        }
        ASSERT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(DirichletWeights, AggregationMatchesShapes) {
    // E[w_i] = shape_i / total for a Dirichlet; multiplicity 3 atoms should
    // carry three times the average mass of multiplicity 1 atoms
    std::mt19937_64 rng = make_stream(503);
    std::vector<std::uint32_t> mult = {3, 1, 1, 1};  // total atoms 6
    double acc3 = 0.0, acc1 = 0.0;
    const int reps = 20000;
    for (int rep = 0; rep < reps; ++rep) {
        const std::vector<double> w = aggregated_dirichlet_weights(mult, 6.0, 6, rng);
        double sum = 0.0;
        for (double v : w) sum += v;
        ASSERT_NEAR(sum, 1.0, 1e-12);
        acc3 += w[0];
        acc1 += (w[1] + w[2] + w[3]) / 3.0;
    }
    EXPECT_NEAR(acc3 / reps, 0.5, 0.01);        // 3/6
    EXPECT_NEAR(acc1 / reps, 1.0 / 6.0, 0.005);  // 1/6
}

TEST(PosteriorBase, NegligibleConcentrationIsAllEmpirical) {
    const Matrix data = gaussian_data(10, 2, 601);
    std::mt19937_64 rng = make_stream(602);
    const BaseSampleResult base =
        posterior_base_sample(data, standard_prior(1e-12, 2), 1000, JitterPolicy{0.0}, rng);
    EXPECT_EQ(base.total_atoms, 1000u);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < base.multiplicity.size(); ++i) {
        EXPECT_FALSE(base.source_prior[i]);
        total += base.multiplicity[i];
        // with jitter off, every atom must coincide exactly with a data row
        bool matched = false;
        for (std::size_t r = 0; r < data.rows(); ++r) {
            bool same = true;
            for (std::size_t c = 0; c < 2; ++c)
                if (base.atoms(i, c) != data(r, c)) {
                    same = false;
                    break;
                }
            if (same) {
                matched = true;
                break;
            }
        }
        EXPECT_TRUE(matched) << "atom " << i;
    }
    EXPECT_EQ(total, 1000u);
    EXPECT_LE(base.atoms.rows(), data.rows());
}

TEST(PosteriorBase, PriorFractionMatchesConcentration) {
    // a = n makes the prior branch probability exactly 1/2
    const std::size_t n = 40;
    const Matrix data = gaussian_data(n, 2, 603);
    std::mt19937_64 rng = make_stream(604);
    const BaseSampleResult base = posterior_base_sample(
        data, standard_prior(static_cast<double>(n), 2), 100000, JitterPolicy{0.01}, rng);
    std::uint64_t prior_atoms = 0;
    for (std::size_t i = 0; i < base.multiplicity.size(); ++i)
        if (base.source_prior[i]) prior_atoms += base.multiplicity[i];
    EXPECT_NEAR(static_cast<double>(prior_atoms) / 100000.0, 0.5, 0.01);
}

TEST(PosteriorBase, SmallConcentrationAveragesOnePriorAtom) {
    // a=0.05, n=50: expected prior draws per 1000 atoms = 1000*a/(a+n) ~ 1.0
    const Matrix data = gaussian_data(50, 2, 605);
    double avg = 0.0;
    const int reps = 400;
    for (int rep = 0; rep < reps; ++rep) {
        std::mt19937_64 rng = make_stream(606, rep);
        const BaseSampleResult base = posterior_base_sample(
            data, standard_prior(0.05, 2), 1000, JitterPolicy{0.01}, rng);
        std::uint64_t prior_atoms = 0;
        for (std::size_t i = 0; i < base.multiplicity.size(); ++i)
            if (base.source_prior[i]) prior_atoms += base.multiplicity[i];
        avg += static_cast<double>(prior_atoms);
    }
    avg /= reps;
    EXPECT_GE(avg, 0.5);
    EXPECT_LE(avg, 1.5);
}

TEST(PosteriorBase, JitterTouchesOnlyDuplicatedRows) {
    // 30 rows, two of which share an exact position. Only the atoms born from
    // that shared position may move; everything else must land exactly on its
    // data row, and afterwards no two atoms may coincide.
    Matrix data = gaussian_data(30, 2, 607);
    data(17, 0) = data(4, 0);
    data(17, 1) = data(4, 1);
    std::mt19937_64 rng = make_stream(608);
    const double scale = 0.01;
    const BaseSampleResult base = posterior_base_sample(
        data, standard_prior(1e-12, 2), 2000, JitterPolicy{scale}, rng);
    std::size_t moved = 0;
    for (std::size_t i = 0; i < base.atoms.rows(); ++i) {
        double best = 1e300;
        for (std::size_t r = 0; r < data.rows(); ++r) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < 2; ++c) {
                const double delta = base.atoms(i, c) - data(r, c);
                d2 += delta * delta;
            }
            best = std::min(best, d2);
        }
        if (best > 0.0) {
            ++moved;
            EXPECT_LT(std::sqrt(best), 6.0 * scale * 2.0);
        }
    }
    // at N=2000 every row is hit, so exactly the two copies get perturbed
    EXPECT_EQ(moved, 2u);
    for (std::size_t i = 0; i < base.atoms.rows(); ++i)
        for (std::size_t j = i + 1; j < base.atoms.rows(); ++j)
            EXPECT_FALSE(base.atoms(i, 0) == base.atoms(j, 0) &&
                         base.atoms(i, 1) == base.atoms(j, 1))
                << "atoms " << i << " and " << j << " coincide";
}

TEST(PosteriorBase, DistinctRowDataIgnoresJitterScale) {
    // continuous data has no tied rows, so the jitter scale must not even be
    // consulted: runs at 1e-3 and 1e-1 consume identical randomness and
    // produce bit-identical atoms
    const Matrix data = gaussian_data(30, 2, 615);
    std::mt19937_64 r1 = make_stream(616);
    std::mt19937_64 r2 = make_stream(616);
    const BaseSampleResult b1 = posterior_base_sample(
        data, standard_prior(0.05, 2), 1000, JitterPolicy{1e-3}, r1);
    const BaseSampleResult b2 = posterior_base_sample(
        data, standard_prior(0.05, 2), 1000, JitterPolicy{1e-1}, r2);
    ASSERT_EQ(b1.atoms.rows(), b2.atoms.rows());
    for (std::size_t i = 0; i < b1.atoms.rows(); ++i) {
        EXPECT_EQ(b1.multiplicity[i], b2.multiplicity[i]);
        for (std::size_t j = 0; j < 2; ++j)
            EXPECT_EQ(b1.atoms(i, j), b2.atoms(i, j));
    }
}

TEST(PosteriorBase, RejectsDegenerateInputs) {
    const Matrix data = gaussian_data(10, 2, 609);
    std::mt19937_64 rng = make_stream(610);
    EXPECT_THROW(posterior_base_sample(data, standard_prior(0.0, 2), 100,
                                       JitterPolicy{0.01}, rng),
                 usage_error);
    EXPECT_THROW(posterior_base_sample(data, standard_prior(0.05, 2), 0,
                                       JitterPolicy{0.01}, rng),
                 usage_error);
    Matrix tiny(1, 2);
    tiny(0, 0) = 0.0;
    tiny(0, 1) = 1.0;
    EXPECT_THROW(posterior_base_sample(tiny, standard_prior(0.05, 2), 100,
                                       JitterPolicy{0.01}, rng),
                 usage_error);
}

TEST(SampleDpPosterior, WeightsAndMultiplicityConsistent) {
    const Matrix data = gaussian_data(50, 3, 611);
    std::mt19937_64 rng = make_stream(612);
    const DPApproximation dp =
        sample_dp_posterior(data, standard_prior(0.05, 3), 1000, JitterPolicy{0.01}, rng);
    EXPECT_EQ(dp.total_atoms, 1000u);
    EXPECT_EQ(dp.weights.size(), dp.distinct_count());
    EXPECT_EQ(dp.multiplicity.size(), dp.distinct_count());
    EXPECT_EQ(dp.source_prior.size(), dp.distinct_count());
    EXPECT_LE(dp.distinct_count(), 1000u);
    double sum = 0.0;
    std::uint64_t atoms = 0;
    for (std::size_t i = 0; i < dp.distinct_count(); ++i) {
        EXPECT_GE(dp.weights[i], 0.0);
        sum += dp.weights[i];
        atoms += dp.multiplicity[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(atoms, 1000u);
    // n=50 data rows nearly all get hit at N=1000; prior adds ~1
    EXPECT_GE(dp.distinct_count(), 45u);
    EXPECT_LE(dp.distinct_count(), 60u);
}

TEST(SampleDpPosterior, DeterministicPerStream) {
    const Matrix data = gaussian_data(20, 2, 613);
    std::mt19937_64 r1 = make_stream(614, 7);
    std::mt19937_64 r2 = make_stream(614, 7);
    const DPApproximation a =
        sample_dp_posterior(data, standard_prior(0.05, 2), 500, JitterPolicy{0.01}, r1);
    const DPApproximation b =
        sample_dp_posterior(data, standard_prior(0.05, 2), 500, JitterPolicy{0.01}, r2);
    ASSERT_EQ(a.distinct_count(), b.distinct_count());
    for (std::size_t i = 0; i < a.distinct_count(); ++i) {
        EXPECT_EQ(a.weights[i], b.weights[i]);
        EXPECT_EQ(a.multiplicity[i], b.multiplicity[i]);
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(a.atoms(i, j), b.atoms(i, j));
    }
}

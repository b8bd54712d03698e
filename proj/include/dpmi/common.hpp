#pragma once

// Shared plumbing: error taxonomy, a minimal row-major matrix, RNG stream
// derivation, and the quantile/midhinge helpers used by the estimator core.

#include <cstdint>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpmi {

inline constexpr const char* version_string = "1.0.0";

// Errors are split by who is at fault so the CLI can map them to distinct
// exit codes: bad parameters (usage), bad input data, and numerical
// degeneracy discovered mid-computation.
struct usage_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct degenerate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double euler_gamma = 0.5772156649015329;

// Row-major matrix of doubles. Small d (<= 10 or so) throughout, so no
// attempt at anything clever.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = data_[i * cols_ + j];
        return out;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// SplitMix64 — used only to turn (seed, stream indices) into well-mixed
// 64-bit state for seeding independent mt19937_64 streams. Keyed streams make
// results independent of execution order, so parallel replicates/draws are
// reproducible.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i0 = 0,
                                 std::uint64_t i1 = 0, std::uint64_t i2 = 0) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ splitmix64(i0 + 0x100000001ull));
    s = splitmix64(s ^ splitmix64(i1 + 0x200000002ull));
    s = splitmix64(s ^ splitmix64(i2 + 0x300000003ull));
    return s;
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t i0 = 0,
                                    std::uint64_t i1 = 0, std::uint64_t i2 = 0) {
    return std::mt19937_64(derive_seed(seed, i0, i1, i2));
}

enum class QuartileMethod {
    LinearInterpolation,  // quantile p sits at rank p*(m-1), interpolated
};

// Quantile of a sample under the configured rule. Sorts a copy; inputs here
// are at most a few thousand draws.
inline double quantile(std::vector<double> v, double p, QuartileMethod method) {
    if (v.empty()) throw usage_error("quantile: empty input");
    if (!(p >= 0.0 && p <= 1.0)) throw usage_error("quantile: p outside [0,1]");
    std::sort(v.begin(), v.end());
    switch (method) {
        case QuartileMethod::LinearInterpolation: {
            const double rank = p * static_cast<double>(v.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(rank);
            const double frac = rank - static_cast<double>(lo);
            if (lo + 1 >= v.size()) return v.back();
            return v[lo] + frac * (v[lo + 1] - v[lo]);
        }
    }
    throw usage_error("quantile: unknown method");
}

inline double midhinge(const std::vector<double>& values,
                       QuartileMethod method = QuartileMethod::LinearInterpolation) {
    if (values.empty()) throw usage_error("midhinge: empty input");
    return 0.5 * (quantile(values, 0.25, method) + quantile(values, 0.75, method));
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw usage_error("mean_of: empty input");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace dpmi

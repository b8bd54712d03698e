#pragma once

// Distribution sampling for every scenario family and base measure, the few
// special functions the closed-form MI expressions need, and those closed
// forms themselves (the oracles the simulation tables are scored against).

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"

namespace dpmi {

// ---------------------------------------------------------------------------
// special functions

inline double harmonic_number(unsigned j) {
    double s = 0.0;
    for (unsigned r = 1; r <= j; ++r) s += 1.0 / static_cast<double>(r);
    return s;
}

inline double log_gamma(double x) { return std::lgamma(x); }

// digamma via the usual recurrence up to x >= 10 plus the asymptotic series.
// Near machine precision for x > 0, which covers every use here (arguments
// are df/2-style positive reals).
inline double digamma(double x) {
    if (!(x > 0.0)) throw usage_error("digamma: requires x > 0");
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    // Bernoulli-number tail of the Stirling series; with the recurrence shift
    // to x >= 10 the first omitted term is below 1e-15.
    result += std::log(x) - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0
        - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0
        - inv2 * (691.0 / 32760.0))))));
    return result;
}

inline double log_beta(double a, double b) {
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

// log volume of the d-dimensional Euclidean unit ball, pi^{d/2}/Gamma(d/2+1).
inline double unit_ball_log_volume(unsigned d) {
    if (d < 1) throw usage_error("unit_ball_log_volume: d >= 1 required");
    return 0.5 * d * std::log(M_PI) - log_gamma(0.5 * d + 1.0);
}

// ---------------------------------------------------------------------------
// covariance matrices

struct CovarianceMatrix {
    Matrix entries;  // d x d, symmetric positive definite

    unsigned dim() const { return static_cast<unsigned>(entries.rows()); }
};

inline CovarianceMatrix cov_identity(unsigned d) {
    CovarianceMatrix c{Matrix(d, d)};
    for (unsigned i = 0; i < d; ++i) c.entries(i, i) = 1.0;
    return c;
}

// diag (1,2,1,...,1) with 0.5 everywhere off the diagonal
inline CovarianceMatrix cov_sigma(unsigned d) {
    CovarianceMatrix c{Matrix(d, d, 0.5)};
    for (unsigned i = 0; i < d; ++i) c.entries(i, i) = 1.0;
    if (d >= 2) c.entries(1, 1) = 2.0;
    return c;
}

// identity except a single 0.5 coupling between the last two coordinates
inline CovarianceMatrix cov_a(unsigned d) {
    CovarianceMatrix c{Matrix(d, d)};
    for (unsigned i = 0; i < d; ++i) c.entries(i, i) = 1.0;
    if (d >= 2) {
        c.entries(d - 1, d - 2) = 0.5;
        c.entries(d - 2, d - 1) = 0.5;
    }
    return c;
}

// 1 on the diagonal, 0.9 everywhere else
inline CovarianceMatrix cov_b(unsigned d) {
    CovarianceMatrix c{Matrix(d, d, 0.9)};
    for (unsigned i = 0; i < d; ++i) c.entries(i, i) = 1.0;
    return c;
}

inline void check_covariance(const CovarianceMatrix& cov) {
    const auto d = cov.entries.rows();
    if (d == 0 || cov.entries.cols() != d)
        throw usage_error("covariance: must be square and non-empty");
    for (std::size_t i = 0; i < d; ++i) {
        if (!(cov.entries(i, i) > 0.0))
            throw usage_error("covariance: diagonal must be strictly positive");
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(cov.entries(i, j) - cov.entries(j, i)) > 1e-12)
                throw usage_error("covariance: not symmetric");
    }
}

// Lower-triangular Cholesky factor; throws degenerate_error when the matrix
// is not positive definite.
inline Matrix cholesky(const CovarianceMatrix& cov) {
    check_covariance(cov);
    const std::size_t d = cov.entries.rows();
    Matrix L(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = cov.entries(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            if (i == j) {
                if (!(s > 0.0))
                    throw degenerate_error("cholesky: matrix not positive definite");
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return L;
}

inline double log_det_from_cholesky(const Matrix& L) {
    double s = 0.0;
    for (std::size_t i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
    return 2.0 * s;
}

// ---------------------------------------------------------------------------
// closed-form mutual information

// MI of a multivariate normal: -(1/2) log(det S / prod_i S_ii).
inline double gaussian_true_mi(const CovarianceMatrix& cov) {
    const Matrix L = cholesky(cov);
    double log_prod_diag = 0.0;
    for (std::size_t i = 0; i < cov.entries.rows(); ++i)
        log_prod_diag += std::log(cov.entries(i, i));
    const double mi = -0.5 * (log_det_from_cholesky(L) - log_prod_diag);
    return mi == 0.0 ? 0.0 : mi;  // normalize -0.0 (diagonal covariance)
}

// MI of a d-variate student-t with identity scale: the dependence carried by
// the shared mixing variable. Sum of marginal entropies minus joint entropy,
// both in closed form.
inline double student_true_mi(double df, unsigned d) {
    if (!(df > 0.0)) throw usage_error("student_true_mi: df > 0 required");
    if (d < 1) throw usage_error("student_true_mi: d >= 1 required");
    const double marginal =
        0.5 * (df + 1.0) * (digamma(0.5 * (df + 1.0)) - digamma(0.5 * df))
        + std::log(std::sqrt(df) * std::exp(log_beta(0.5 * df, 0.5)));
    const double joint =
        -(log_gamma(0.5 * (df + d)) - log_gamma(0.5 * df)
          - 0.5 * d * std::log(df * M_PI))
        + 0.5 * (df + d) * (digamma(0.5 * (df + d)) - digamma(0.5 * df));
    return d * marginal - joint;
}

// ---------------------------------------------------------------------------
// scenario families

enum class Family {
    MVNormal,            // mean vector + covariance
    MVStudent,           // location 0, identity scale, df degrees of freedom
    MaxwellProduct,      // d independent Maxwell-Boltzmann coordinates
    SphericalLogNormal,  // uniform direction times LogNormal(0, logsd^2) radius
};

struct ScenarioSpec {
    Family family = Family::MVNormal;
    unsigned dim = 2;
    std::vector<double> mean;      // MVNormal
    CovarianceMatrix cov;          // MVNormal
    double df = 3.0;               // MVStudent
    double scale = 10.0;           // MaxwellProduct
    double logsd = 0.5;            // SphericalLogNormal
    std::optional<double> true_mi; // filled by make_* helpers when known

    std::string label;             // grammar form, e.g. "normal:d=4:cov=Sigma"
};

inline ScenarioSpec make_normal_scenario(unsigned d, const CovarianceMatrix& cov,
                                         std::vector<double> mean = {}) {
    ScenarioSpec s;
    s.family = Family::MVNormal;
    s.dim = d;
    s.cov = cov;
    s.mean = mean.empty() ? std::vector<double>(d, 0.0) : std::move(mean);
    if (s.mean.size() != d) throw usage_error("scenario: mean length != dim");
    s.true_mi = gaussian_true_mi(cov);
    return s;
}

inline ScenarioSpec make_student_scenario(double df, unsigned d) {
    ScenarioSpec s;
    s.family = Family::MVStudent;
    s.dim = d;
    s.df = df;
    s.true_mi = student_true_mi(df, d);
    return s;
}

inline ScenarioSpec make_maxwell_scenario(double c, unsigned d) {
    ScenarioSpec s;
    s.family = Family::MaxwellProduct;
    s.dim = d;
    s.scale = c;
    s.true_mi = 0.0;  // product of independent marginals
    return s;
}

inline ScenarioSpec make_spherical_lognormal_scenario(unsigned d, double logsd) {
    ScenarioSpec s;
    s.family = Family::SphericalLogNormal;
    s.dim = d;
    s.logsd = logsd;
    return s;  // true MI not used anywhere; leave unset
}

// A base measure for the Dirichlet-process prior is just a samplable
// continuous scenario.
using BaseMeasure = ScenarioSpec;

inline BaseMeasure standard_normal_base(unsigned d) {
    return make_normal_scenario(d, cov_identity(d));
}

// ---------------------------------------------------------------------------
// sampling

namespace detail {

inline void sample_mvnormal_row(double* out, const std::vector<double>& mean,
                                const Matrix& L, std::mt19937_64& rng) {
    // Fresh distribution per call: normal_distribution caches a second
    // variate, and sharing that cache across RNG streams would break
    // per-stream determinism.
    std::normal_distribution<double> stdn(0.0, 1.0);
    const std::size_t d = L.rows();
    std::vector<double> z(d);
    for (auto& v : z) v = stdn(rng);
    for (std::size_t i = 0; i < d; ++i) {
        double s = mean[i];
        for (std::size_t j = 0; j <= i; ++j) s += L(i, j) * z[j];
        out[i] = s;
    }
}

}  // namespace detail

inline Matrix sample_scenario(const ScenarioSpec& spec, std::size_t n,
                              std::mt19937_64& rng) {
    if (n < 1) throw usage_error("sample_scenario: n >= 1 required");
    const unsigned d = spec.dim;
    if (d < 1) throw usage_error("sample_scenario: dim >= 1 required");
    Matrix X(n, d);
    std::normal_distribution<double> stdn(0.0, 1.0);

    switch (spec.family) {
        case Family::MVNormal: {
            const Matrix L = cholesky(spec.cov);
            const std::vector<double> mean =
                spec.mean.empty() ? std::vector<double>(d, 0.0) : spec.mean;
            for (std::size_t i = 0; i < n; ++i)
                detail::sample_mvnormal_row(X.row(i), mean, L, rng);
            break;
        }
        case Family::MVStudent: {
            if (!(spec.df > 0.0)) throw usage_error("sample_scenario: df > 0");
            // z / sqrt(w/df) with one chi-square mixing variable shared by all
            // coordinates of a row — that sharing is the whole dependence.
            std::chi_squared_distribution<double> chi(spec.df);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = std::sqrt(chi(rng) / spec.df);
                for (unsigned j = 0; j < d; ++j) X(i, j) = stdn(rng) / w;
            }
            break;
        }
        case Family::MaxwellProduct: {
            if (!(spec.scale > 0.0)) throw usage_error("sample_scenario: scale > 0");
            // Maxwell-Boltzmann speed = scale * norm of 3 standard normals.
            for (std::size_t i = 0; i < n; ++i)
                for (unsigned j = 0; j < d; ++j) {
                    const double a = stdn(rng), b = stdn(rng), c = stdn(rng);
                    X(i, j) = spec.scale * std::sqrt(a * a + b * b + c * c);
                }
            break;
        }
        case Family::SphericalLogNormal: {
            for (std::size_t i = 0; i < n; ++i) {
                double norm2 = 0.0;
                std::vector<double> v(d);
                do {
                    norm2 = 0.0;
                    for (unsigned j = 0; j < d; ++j) {
                        v[j] = stdn(rng);
                        norm2 += v[j] * v[j];
                    }
                } while (norm2 == 0.0);
                const double r = std::exp(spec.logsd * stdn(rng));
                const double inv = r / std::sqrt(norm2);
                for (unsigned j = 0; j < d; ++j) X(i, j) = v[j] * inv;
            }
            break;
        }
    }
    return X;
}

// ---------------------------------------------------------------------------
// scenario grammar: "normal:d=4:cov=Sigma", "student:df=3:d=4",
// "maxwell:c=10:d=2", "spherical:d=3:logsd=0.5". Used by the CLI and the
// experiment manifest.

inline std::string format_scenario(const ScenarioSpec& s) {
    if (!s.label.empty()) return s.label;
    std::ostringstream os;
    switch (s.family) {
        case Family::MVNormal:
            os << "normal:d=" << s.dim << ":cov=custom";
            break;
        case Family::MVStudent:
            os << "student:df=" << s.df << ":d=" << s.dim;
            break;
        case Family::MaxwellProduct:
            os << "maxwell:c=" << s.scale << ":d=" << s.dim;
            break;
        case Family::SphericalLogNormal:
            os << "spherical:d=" << s.dim << ":logsd=" << s.logsd;
            break;
    }
    return os.str();
}

inline ScenarioSpec parse_scenario(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    if (parts.empty()) throw usage_error("scenario: empty spec");

    auto value_of = [&](const std::string& key) -> std::optional<std::string> {
        for (std::size_t i = 1; i < parts.size(); ++i) {
            const auto pos = parts[i].find('=');
            if (pos != std::string::npos && parts[i].substr(0, pos) == key)
                return parts[i].substr(pos + 1);
        }
        return std::nullopt;
    };
    auto need_unsigned = [&](const std::string& key) -> unsigned {
        auto v = value_of(key);
        if (!v) throw usage_error("scenario: missing " + key + "= in '" + text + "'");
        return static_cast<unsigned>(std::stoul(*v));
    };
    auto need_double = [&](const std::string& key) -> double {
        auto v = value_of(key);
        if (!v) throw usage_error("scenario: missing " + key + "= in '" + text + "'");
        return std::stod(*v);
    };

    const std::string& fam = parts[0];
    ScenarioSpec out;
    if (fam == "normal") {
        const unsigned d = need_unsigned("d");
        const std::string covname = value_of("cov").value_or("identity");
        CovarianceMatrix cov;
        if (covname == "identity" || covname == "I") cov = cov_identity(d);
        else if (covname == "Sigma" || covname == "sigma") cov = cov_sigma(d);
        else if (covname == "A" || covname == "a") cov = cov_a(d);
        else if (covname == "B" || covname == "b") cov = cov_b(d);
        else throw usage_error("scenario: unknown cov '" + covname +
                               "' (expected identity|Sigma|A|B)");
        std::vector<double> mean(d, 0.0);
        if (auto m = value_of("mean")) std::fill(mean.begin(), mean.end(), std::stod(*m));
        out = make_normal_scenario(d, cov, mean);
    } else if (fam == "student") {
        out = make_student_scenario(need_double("df"), need_unsigned("d"));
    } else if (fam == "maxwell") {
        out = make_maxwell_scenario(need_double("c"), need_unsigned("d"));
    } else if (fam == "spherical") {
        double logsd = 0.5;
        if (auto v = value_of("logsd")) logsd = std::stod(*v);
        out = make_spherical_lognormal_scenario(need_unsigned("d"), logsd);
    } else {
        throw usage_error("scenario: unknown family '" + fam +
                          "' (expected normal|student|maxwell|spherical)");
    }
    out.label = text;
    return out;
}

}  // namespace dpmi

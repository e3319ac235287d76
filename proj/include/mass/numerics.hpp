#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mass {

/// Dense predictor matrix, one observation per row.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Binary class labels stored as 0/1 reals.
using Labels = Eigen::VectorXd;
using Index = Eigen::Index;

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string shape_string(Index rows, Index cols) {
    std::ostringstream os;
    os << rows << "x" << cols;
    return os.str();
}

template <class Derived>
inline std::string shape_of(const Eigen::MatrixBase<Derived>& m) {
    return shape_string(m.rows(), m.cols());
}

template <class Derived>
inline bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Seeded random stream. A stream with the same seed replays the same
/// sequence; child streams keyed by (seed, label) are decorrelated through
/// splitmix64 so adding a consumer never shifts another consumer's draws.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(detail::splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    RngStream child(std::uint64_t label) const {
        return RngStream(detail::splitmix64(seed_ ^ detail::splitmix64(label + 0x632be59bd9b4e019ULL)));
    }
    RngStream child(std::string_view label) const { return child(detail::fnv1a(label)); }

    double normal() { return normal_(engine_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    bool bernoulli(double prob) { return uniform() < prob; }

    double beta(double a, double b) {
        const double x = std::gamma_distribution<double>(a, 1.0)(engine_);
        const double y = std::gamma_distribution<double>(b, 1.0)(engine_);
        return x / (x + y);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

struct SvdResult {
    Matrix u;
    Vector singular_values;  // non-increasing
    Matrix v;
};

/// Thin SVD M = U diag(s) V^T.
inline SvdResult svd(const Matrix& m) {
    if (m.size() == 0) throw ShapeError("svd: empty matrix");
    if (!m.allFinite()) throw ParameterError("svd: non-finite entries in " + shape_of(m) + " matrix");
    Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("svd: decomposition did not converge for " + shape_of(m) + " matrix");
    }
    return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

/// n x d matrix whose rows are i.i.d. N(0, S) with S_kk = var and
/// S_kl = var * offdiag_corr.
inline Matrix sample_mvnormal(Index n, Index d, double var, double offdiag_corr, RngStream& rng) {
    if (n < 1 || d < 1) throw ParameterError("sample_mvnormal: n and d must be positive");
    if (!(var > 0.0)) throw ParameterError("sample_mvnormal: variance must be positive");
    if (!(offdiag_corr >= 0.0 && offdiag_corr < 1.0)) {
        throw ParameterError("sample_mvnormal: offdiag_corr must lie in [0, 1)");
    }
    Matrix sigma = Matrix::Constant(d, d, var * offdiag_corr);
    sigma.diagonal().setConstant(var);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw ParameterError("sample_mvnormal: covariance is not positive definite (d=" + std::to_string(d) + ")");
    }
    Matrix g(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < d; ++k) g(i, k) = rng.normal();
    return g * llt.matrixL().transpose();
}

/// Tukey g-and-h transform of a standard normal value.
inline double gh_transform(double z, double g, double h) {
    const double tail = std::exp(h * z * z / 2.0);
    if (g == 0.0) return z * tail;
    return std::expm1(g * z) / g * tail;
}

struct GhSample {
    Matrix values;
    std::size_t clamp_count = 0;
};

inline constexpr double kGhClamp = 1e12;

/// Correlated normals pushed marginally through the g-and-h transform.
inline GhSample sample_gh(Index n, Index d, double g, double h, double offdiag_corr, RngStream& rng) {
    if (!(h >= 0.0)) throw ParameterError("sample_gh: h must be non-negative");
    GhSample out{sample_mvnormal(n, d, 1.0, offdiag_corr, rng), 0};
    for (Index k = 0; k < d; ++k) {
        for (Index i = 0; i < n; ++i) {
            double t = gh_transform(out.values(i, k), g, h);
            if (!std::isfinite(t) || std::abs(t) > kGhClamp) {
                t = std::signbit(t) ? -kGhClamp : kGhClamp;
                ++out.clamp_count;
            }
            out.values(i, k) = t;
        }
    }
    return out;
}

}  // namespace mass

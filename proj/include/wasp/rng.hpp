// splitmix64 engine plus hand-rolled samplers. Everything here is written out
// explicitly (no std::normal_distribution etc.) so that draws are bit-identical
// across standard libraries and platforms; manifests record the family name.
#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wasp/common.hpp"

namespace wasp {

inline constexpr uint64_t kSplitMix64Gamma = 0x9e3779b97f4a7c15ULL;

inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct SplitMix64 {
    using result_type = uint64_t;
    uint64_t state = 0;

    SplitMix64() = default;
    explicit SplitMix64(uint64_t seed) : state(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~0ULL; }

    result_type operator()() {
        state += kSplitMix64Gamma;
        return mix64(state);
    }
};

// Child stream seed from (parent seed, stream index). Used master -> replication
// -> subset so scheduling can never change which stream a task consumes.
inline uint64_t derive_seed(uint64_t parent, uint64_t index) {
    return mix64(parent + kSplitMix64Gamma * (index + 1));
}

namespace rng {

inline double uniform01(SplitMix64& g) {
    // 53 random bits in [0,1). Never returns 1.0; may return 0.0.
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform01_open(SplitMix64& g) {
    double u;
    do {
        u = uniform01(g);
    } while (u <= 0.0);
    return u;
}

// Marsaglia polar method.
inline double normal(SplitMix64& g) {
    while (true) {
        double u = 2.0 * uniform01(g) - 1.0;
        double v = 2.0 * uniform01(g) - 1.0;
        double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

// Marsaglia-Tsang for shape >= 1; shape boost for shape < 1. Rate parameterization.
inline double gamma(SplitMix64& g, double shape, double rate) {
    require(shape > 0.0 && rate > 0.0, "gamma: shape and rate must be positive");
    if (shape < 1.0) {
        double x = gamma(g, shape + 1.0, 1.0);
        double u = uniform01_open(g);
        return x * std::pow(u, 1.0 / shape) / rate;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x = normal(g);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform01_open(g);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

inline double beta(SplitMix64& g, double a, double b) {
    double x = gamma(g, a, 1.0);
    double y = gamma(g, b, 1.0);
    return x / (x + y);
}

inline double inverse_gamma(SplitMix64& g, double shape, double scale) {
    return scale / gamma(g, shape, 1.0);
}

inline Vector dirichlet(SplitMix64& g, const Vector& conc) {
    Vector out(conc.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < conc.size(); ++i) {
        out[i] = gamma(g, conc[i], 1.0);
        sum += out[i];
    }
    if (sum <= 0.0) {
        // All gammas underflowed (tiny concentrations); fall back to the argmax convention.
        out.setZero();
        out[0] = 1.0;
        return out;
    }
    return out / sum;
}

// Inverse CDF scan over unnormalized nonnegative weights.
inline int categorical(SplitMix64& g, const double* w, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i];
    double u = uniform01(g) * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += w[i];
        if (u < acc) return i;
    }
    return n - 1;
}

inline int categorical(SplitMix64& g, const Vector& w) { return categorical(g, w.data(), static_cast<int>(w.size())); }

inline Vector mvnormal(SplitMix64& g, const Vector& mean, const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    Matrix L;
    if (llt.info() == Eigen::Success) {
        L = llt.matrixL();
    } else {
        // Jittered retry for draws that are positive definite only up to rounding.
        Matrix c = cov + 1e-10 * cov.trace() * Matrix::Identity(cov.rows(), cov.cols());
        Eigen::LLT<Matrix> llt2(c);
        if (llt2.info() != Eigen::Success) throw numerical_error("mvnormal: covariance not positive definite");
        L = llt2.matrixL();
    }
    Vector z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(g);
    return mean + L * z;
}

// Wishart(df, scale) via Bartlett decomposition; scale = S means E[W] = df * S.
inline Matrix wishart(SplitMix64& g, double df, const Matrix& scale) {
    const Eigen::Index p = scale.rows();
    require(df > static_cast<double>(p) - 1.0, "wishart: df must exceed p-1");
    Eigen::LLT<Matrix> llt(scale);
    if (llt.info() != Eigen::Success) throw numerical_error("wishart: scale not positive definite");
    Matrix L = llt.matrixL();
    Matrix A = Matrix::Zero(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        A(i, i) = std::sqrt(2.0 * gamma(g, 0.5 * (df - static_cast<double>(i)), 1.0));
        for (Eigen::Index j = 0; j < i; ++j) A(i, j) = normal(g);
    }
    Matrix LA = L * A;
    return LA * LA.transpose();
}

// Inverse-Wishart(df, scale): if W ~ Wishart(df, scale^-1) then W^-1 ~ IW(df, scale).
inline Matrix inverse_wishart(SplitMix64& g, double df, const Matrix& scale) {
    Matrix W = wishart(g, df, scale.inverse());
    return W.inverse();
}

}  // namespace rng
}  // namespace wasp

// Finite Gaussian mixture with conjugate priors, sampled by a tempered Gibbs
// sweep. Likelihood contributions are raised to the power gamma, so the
// complete conditionals keep their standard families with gamma-weighted
// counts and sufficient statistics:
//   pi | z      ~ Dirichlet(gamma*c_1 + 1/L, ..., gamma*c_L + 1/L)
//   Sigma_h | z ~ InvWishart(gamma*c_h + df0 + 1,
//                            gamma*scatter_h + (kappa0*gamma*c_h/(kappa0+gamma*c_h)) ybar ybar' + scale0)
//   mu_h | Sigma_h, z ~ Normal((gamma*c_h/(kappa0+gamma*c_h)) ybar, Sigma_h/(kappa0+gamma*c_h))
//   z_i | rest  ~ Categorical(p_h), p_h propto pi_h N_p(y_i | mu_h, Sigma_h)
// Sigma_h is drawn before mu_h: its conditional above is the mu-marginalized
// form (the ybar*ybar' term), so it must not condition on a fresh mu draw.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "wasp/models/common.hpp"
#include "wasp/partition.hpp"

namespace wasp {

struct GmmSpec {
    int L = 2;                  // number of mixture components
    double kappa0 = 0.01;       // mu_h | Sigma_h ~ N(0, Sigma_h / kappa0)
    double df0 = 2.0;           // Inverse-Wishart prior degrees of freedom
    double scale0_diag = 4.0;   // Inverse-Wishart prior scale = scale0_diag * I_p
};

// Conditional-parameter helpers, exposed so the gamma=1 reductions can be
// checked against independently computed untempered updates.
inline Vector gmm_pi_concentration(const std::vector<double>& counts, double gamma, int L) {
    Vector a(L);
    for (int h = 0; h < L; ++h) a[h] = gamma * counts[static_cast<size_t>(h)] + 1.0 / L;
    return a;
}

struct GmmMuParams {
    Vector mean;
    Matrix cov;
};

inline GmmMuParams gmm_mu_conditional(double count, const Vector& ybar, const Matrix& sigma, double gamma,
                                      double kappa0) {
    double w = gamma * count;
    return {(w / (kappa0 + w)) * ybar, sigma / (kappa0 + w)};
}

struct GmmSigmaParams {
    double df;
    Matrix scale;
};

inline GmmSigmaParams gmm_sigma_conditional(const Matrix& scatter, double count, const Vector& ybar, double gamma,
                                            const GmmSpec& spec) {
    // The scatter carries the same gamma weight as the counts: both come from
    // the tempered complete-data likelihood. Leaving it unweighted shrinks
    // Sigma_h toward Sigma/gamma, which distorts the assignment geometry of
    // the z step relative to an untempered chain.
    double w = gamma * count;
    Matrix scale = gamma * scatter + (spec.kappa0 * w / (spec.kappa0 + w)) * (ybar * ybar.transpose());
    scale.diagonal().array() += spec.scale0_diag;
    return {w + spec.df0 + 1.0, scale};
}

namespace detail {

inline int gmm_tri_index(int r, int c, int p) {  // upper triangle, row-major, r <= c
    return r * p - r * (r - 1) / 2 + (c - r);
}

}  // namespace detail

inline std::vector<std::string> gmm_parameter_names(int L, int p) {
    std::vector<std::string> names;
    for (int h = 1; h <= L; ++h) names.push_back("pi" + std::to_string(h));
    for (int h = 1; h <= L; ++h)
        for (int r = 1; r <= p; ++r) names.push_back("mu" + std::to_string(h) + "_" + std::to_string(r));
    for (int h = 1; h <= L; ++h)
        for (int r = 1; r <= p; ++r)
            for (int c = r; c <= p; ++c)
                names.push_back("Sigma" + std::to_string(h) + "_" + std::to_string(r) + std::to_string(c));
    return names;
}

inline DrawSet sample_gmm_subset(const GmmSpec& spec, const Dataset& shard, double gamma,
                                 const ChainSettings& chain, uint64_t seed, int subset_id = 0, int k = 1) {
    chain.validate();
    require(gamma > 0.0, "gmm: gamma must be positive");
    require(spec.L >= 1, "gmm: need at least one component");
    const long m = shard.X.rows();
    const int p = static_cast<int>(shard.X.cols());
    const int L = spec.L;
    require(m >= 1 && p >= 1, "gmm: shard needs at least one row and one column");

    SplitMix64 g(seed);

    // Initial state: k-means assignments (k-means++ seeded from this chain's
    // generator) with component means at the cluster centroids, shared pooled
    // covariance, and uniform weights. Means dropped on random data points
    // often start a tempered chain inside a merged-components mode that the
    // sharpened conditionals never leave.
    std::vector<int> z = L > 1 ? kmeans_labels(shard.X, L, g()) : std::vector<int>(static_cast<size_t>(m), 0);
    Vector data_mean = shard.X.colwise().mean().transpose();
    Matrix centered = shard.X.rowwise() - data_mean.transpose();
    Matrix pooled = centered.transpose() * centered / static_cast<double>(m);
    pooled.diagonal().array() += 1e-6;
    Matrix mu(L, p);
    {
        Matrix sums = Matrix::Zero(L, p);
        std::vector<long> sizes(static_cast<size_t>(L), 0);
        for (long i = 0; i < m; ++i) {
            sums.row(z[static_cast<size_t>(i)]) += shard.X.row(i);
            ++sizes[static_cast<size_t>(z[static_cast<size_t>(i)])];
        }
        for (int h = 0; h < L; ++h)
            mu.row(h) = sizes[static_cast<size_t>(h)] > 0
                            ? (sums.row(h) / static_cast<double>(sizes[static_cast<size_t>(h)])).eval()
                            : shard.X.row(static_cast<long>(g() % static_cast<uint64_t>(m)));
    }
    std::vector<Matrix> sigma(static_cast<size_t>(L), pooled);
    Vector pi = Vector::Constant(L, 1.0 / L);

    // The z step is the hot loop (m * L quadratic forms per sweep), so each
    // sweep freezes the component precisions and log-determinants first.
    std::vector<Matrix> siginv(static_cast<size_t>(L));
    Vector logdet(L), logpi(L);
    auto refresh_precisions = [&]() {
        Eigen::LLT<Matrix> llt;
        for (int h = 0; h < L; ++h) {
            llt.compute(sigma[static_cast<size_t>(h)]);
            if (llt.info() != Eigen::Success)
                throw numerical_error("gmm: component covariance lost positive definiteness");
            siginv[static_cast<size_t>(h)] = llt.solve(Matrix::Identity(p, p));
            logdet[h] = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        }
        logpi = pi.array().max(1e-300).log().matrix();
    };
    Vector logw(L), probs(L);
    auto sample_z = [&]() {
        for (long i = 0; i < m; ++i) {
            for (int h = 0; h < L; ++h) {
                const Matrix& inv = siginv[static_cast<size_t>(h)];
                double quad = 0.0;
                for (int r = 0; r < p; ++r) {
                    double dr = shard.X(i, r) - mu(h, r);
                    quad += dr * dr * inv(r, r);
                    for (int c = r + 1; c < p; ++c) quad += 2.0 * dr * (shard.X(i, c) - mu(h, c)) * inv(r, c);
                }
                logw[h] = logpi[h] - 0.5 * logdet[h] - 0.5 * quad;
            }
            double mx = logw.maxCoeff();
            probs = (logw.array() - mx).exp().matrix();
            z[static_cast<size_t>(i)] = rng::categorical(g, probs);
        }
    };

    std::vector<double> counts(static_cast<size_t>(L));
    Matrix ybar(L, p), scatter_buf(p, p);
    Vector yc(p);
    const int tri = p * (p + 1) / 2;
    DrawSet out;
    out.draws.resize(chain.draw_count(), L + L * p + L * tri);
    long row = 0;

    for (long t = 1; t <= chain.iterations; ++t) {
        std::fill(counts.begin(), counts.end(), 0.0);
        ybar.setZero();
        for (long i = 0; i < m; ++i) {
            counts[static_cast<size_t>(z[static_cast<size_t>(i)])] += 1.0;
            ybar.row(z[static_cast<size_t>(i)]) += shard.X.row(i);
        }
        for (int h = 0; h < L; ++h)
            if (counts[static_cast<size_t>(h)] > 0.0) ybar.row(h) /= counts[static_cast<size_t>(h)];

        pi = rng::dirichlet(g, gmm_pi_concentration(counts, gamma, L));

        for (int h = 0; h < L; ++h) {
            scatter_buf.setZero();
            for (long i = 0; i < m; ++i) {
                if (z[static_cast<size_t>(i)] != h) continue;
                yc = shard.X.row(i).transpose() - ybar.row(h).transpose();
                scatter_buf.noalias() += yc * yc.transpose();
            }
            GmmSigmaParams sp = gmm_sigma_conditional(scatter_buf, counts[static_cast<size_t>(h)],
                                                      ybar.row(h).transpose(), gamma, spec);
            sigma[static_cast<size_t>(h)] = rng::inverse_wishart(g, sp.df, sp.scale);
            GmmMuParams mp = gmm_mu_conditional(counts[static_cast<size_t>(h)], ybar.row(h).transpose(),
                                                sigma[static_cast<size_t>(h)], gamma, spec.kappa0);
            mu.row(h) = rng::mvnormal(g, mp.mean, mp.cov).transpose();
        }

        refresh_precisions();
        sample_z();

        if (t > chain.burn_in && (t - chain.burn_in) % chain.thin == 0 && row < out.draws.rows()) {
            long c0 = 0;
            for (int h = 0; h < L; ++h) out.draws(row, c0++) = pi[h];
            for (int h = 0; h < L; ++h)
                for (int r = 0; r < p; ++r) out.draws(row, c0++) = mu(h, r);
            for (int h = 0; h < L; ++h)
                for (int r = 0; r < p; ++r)
                    for (int c = r; c < p; ++c) out.draws(row, c0++) = sigma[static_cast<size_t>(h)](r, c);
            ++row;
        }
    }

    out.names = gmm_parameter_names(L, p);
    out.prov.model = "gmm";
    out.prov.subset_id = subset_id;
    out.prov.gamma = gamma;
    out.prov.seed = seed;
    out.prov.chain = chain;
    out.prov.m = m;
    out.prov.k = k;
    return out;
}

// Canonicalize component labels within each draw by sorting on the first mean
// coordinate, so per-component summaries are comparable across chains.
inline void align_gmm_components(DrawSet& ds, int L, int p) {
    require(ds.draws.cols() == L + L * p + L * p * (p + 1) / 2, "align_gmm_components: column count mismatch");
    const int tri = p * (p + 1) / 2;
    std::vector<int> order(static_cast<size_t>(L));
    Vector buf(ds.draws.cols());
    for (long s = 0; s < ds.draws.rows(); ++s) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return ds.draws(s, L + a * p) < ds.draws(s, L + b * p);
        });
        buf = ds.draws.row(s).transpose();
        for (int h = 0; h < L; ++h) {
            int src = order[static_cast<size_t>(h)];
            ds.draws(s, h) = buf[src];
            for (int r = 0; r < p; ++r) ds.draws(s, L + h * p + r) = buf[L + src * p + r];
            for (int t2 = 0; t2 < tri; ++t2)
                ds.draws(s, L + L * p + h * tri + t2) = buf[L + L * p + src * tri + t2];
        }
    }
}

// Synthetic draws from a fixed Gaussian mixture.
inline Dataset generate_gmm_data(long n, const Vector& pi, const std::vector<Vector>& means,
                                 const std::vector<Matrix>& covs, uint64_t seed) {
    require(n >= 1, "generate_gmm_data: need n >= 1");
    require(pi.size() >= 1 && means.size() == static_cast<size_t>(pi.size()) && covs.size() == means.size(),
            "generate_gmm_data: component lists must match pi length");
    const int p = static_cast<int>(means[0].size());
    SplitMix64 g(seed);
    Dataset d;
    d.X.resize(n, p);
    for (long i = 0; i < n; ++i) {
        int h = rng::categorical(g, pi);
        d.X.row(i) = rng::mvnormal(g, means[static_cast<size_t>(h)], covs[static_cast<size_t>(h)]).transpose();
    }
    return d;
}

}  // namespace wasp

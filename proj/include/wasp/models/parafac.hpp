// Truncated-stick probabilistic parafac model for multivariate categorical
// data, sampled by a tempered Gibbs sweep. With category counts
// c_{qhl} = #{i : x_iq = l, z_i = h}, the conditionals are
//   psi^(q)_h | rest ~ Dirichlet(1/d_q + gamma*c_{qh1}, ..., 1/d_q + gamma*c_{qhd_q})
//   V_h | rest       ~ Beta(1 + gamma*#{z = h}, alpha + gamma*#{z > h})
//   alpha | rest     ~ Gamma(a_alpha + lstar, b_alpha - sum_h log(1 - V_h))
//   z_i | rest       ~ Categorical(p_h), p_h propto nu_h prod_q psi^(q)_{h, x_iq}
// The z step works in probability space: each unnormalized weight is a product
// of at most p factors clamped to >= 1e-12, so it stays within double range.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wasp/models/common.hpp"

namespace wasp {

struct ParafacSpec {
    int lstar = 20;        // stick-breaking truncation level
    double a_alpha = 1.0;  // alpha ~ Gamma(a_alpha, b_alpha)
    double b_alpha = 1.0;
    std::vector<int> d;    // categories per dimension; empty = infer from shard
};

// Dirichlet concentration for one (dimension, component) cell.
inline Vector parafac_psi_concentration(const Vector& counts, int d_q, double gamma) {
    return (gamma * counts.array() + 1.0 / d_q).matrix();
}

inline std::vector<std::string> parafac_parameter_names(int lstar, const std::vector<int>& d) {
    std::vector<std::string> names;
    for (int h = 1; h <= lstar; ++h) names.push_back("V" + std::to_string(h));
    for (size_t q = 0; q < d.size(); ++q)
        for (int h = 1; h <= lstar; ++h)
            for (int c = 1; c <= d[q]; ++c)
                names.push_back("psi" + std::to_string(q + 1) + "_" + std::to_string(h) + "_" + std::to_string(c));
    return names;
}

inline void validate_parafac_shard(const IntMatrix& C, const std::vector<int>& d) {
    require(C.rows() >= 1 && C.cols() >= 1, "parafac: shard needs rows and columns");
    require(d.size() == static_cast<size_t>(C.cols()), "parafac: category-count list must match columns");
    for (Eigen::Index q = 0; q < C.cols(); ++q) {
        require(d[static_cast<size_t>(q)] >= 2, "parafac: each dimension needs at least two categories");
        for (Eigen::Index i = 0; i < C.rows(); ++i)
            require(C(i, q) >= 1 && C(i, q) <= d[static_cast<size_t>(q)],
                    "parafac: category out of range in column " + std::to_string(q + 1));
    }
}

inline std::vector<int> infer_categories(const IntMatrix& C) {
    require(C.rows() >= 1 && C.cols() >= 1, "parafac: shard needs rows and columns");
    std::vector<int> d(static_cast<size_t>(C.cols()));
    for (Eigen::Index q = 0; q < C.cols(); ++q) d[static_cast<size_t>(q)] = std::max(2, int(C.col(q).maxCoeff()));
    return d;
}

inline DrawSet sample_parafac_subset(const ParafacSpec& spec, const Dataset& shard, double gamma,
                                     const ChainSettings& chain, uint64_t seed, int subset_id = 0,
                                     int k = 1) {
    chain.validate();
    require(gamma > 0.0, "parafac: gamma must be positive");
    require(spec.lstar >= 1, "parafac: truncation level must be at least 1");
    const std::vector<int> d = spec.d.empty() ? infer_categories(shard.C) : spec.d;
    validate_parafac_shard(shard.C, d);
    const long m = shard.C.rows();
    const int p = static_cast<int>(shard.C.cols());
    const int H = spec.lstar;
    const double kPsiFloor = 1e-12;

    SplitMix64 g(seed);

    std::vector<Matrix> psi(static_cast<size_t>(p));  // psi[q](h, l): P(x_q = l+1 | z = h)
    for (int q = 0; q < p; ++q) {
        int dq = d[static_cast<size_t>(q)];
        psi[static_cast<size_t>(q)].resize(H, dq);
        Vector prior = Vector::Constant(dq, 1.0 / dq);
        for (int h = 0; h < H; ++h) psi[static_cast<size_t>(q)].row(h) = rng::dirichlet(g, prior).transpose();
    }
    Vector V(H);
    double alpha = 1.0;
    for (int h = 0; h < H; ++h) V[h] = std::clamp(rng::beta(g, 1.0, alpha), 1e-15, 1.0 - 1e-15);
    Vector nu;
    stick_weights(V, nu);
    std::vector<int> z(static_cast<size_t>(m), 0);

    // All-binary data takes a faster z path: the per-component factor product
    // is written as (prod_q psi_{h2}) * prod_{q: x_q = 1} (psi_{h1}/psi_{h2}),
    // so each observation only touches its category-1 positions.
    const bool all_binary = std::all_of(d.begin(), d.end(), [](int dq) { return dq == 2; });
    std::vector<int> ones_start, ones_flat;
    if (all_binary) {
        ones_start.resize(static_cast<size_t>(m) + 1, 0);
        for (long i = 0; i < m; ++i) {
            int cnt = 0;
            for (int q = 0; q < p; ++q) cnt += shard.C(i, q) == 1 ? 1 : 0;
            ones_start[static_cast<size_t>(i) + 1] = ones_start[static_cast<size_t>(i)] + cnt;
        }
        ones_flat.resize(static_cast<size_t>(ones_start.back()));
        size_t pos = 0;
        for (long i = 0; i < m; ++i)
            for (int q = 0; q < p; ++q)
                if (shard.C(i, q) == 1) ones_flat[pos++] = q;
    }

    Vector base(H), w(H);
    Matrix ratio(H, p);
    std::vector<Matrix> psi_floor(static_cast<size_t>(p));
    auto sample_z = [&]() {
        if (all_binary) {
            base.setOnes();
            for (int q = 0; q < p; ++q) {
                auto c1 = psi[static_cast<size_t>(q)].col(0).array().max(kPsiFloor);
                auto c2 = psi[static_cast<size_t>(q)].col(1).array().max(kPsiFloor);
                base.array() *= c2;
                ratio.col(q).array() = c1 / c2;
            }
            for (long i = 0; i < m; ++i) {
                w.array() = nu.array() * base.array();
                for (int t = ones_start[static_cast<size_t>(i)]; t < ones_start[static_cast<size_t>(i) + 1]; ++t)
                    w.array() *= ratio.col(ones_flat[static_cast<size_t>(t)]).array();
                z[static_cast<size_t>(i)] = rng::categorical(g, w);
            }
        } else {
            for (int q = 0; q < p; ++q) psi_floor[static_cast<size_t>(q)] = psi[static_cast<size_t>(q)].cwiseMax(kPsiFloor);
            for (long i = 0; i < m; ++i) {
                w = nu;
                for (int q = 0; q < p; ++q) w.array() *= psi_floor[static_cast<size_t>(q)].col(shard.C(i, q) - 1).array();
                z[static_cast<size_t>(i)] = rng::categorical(g, w);
            }
        }
    };
    sample_z();

    Vector counts(H), gt_counts(H);
    const int psi_cols = [&] {
        int c = 0;
        for (int q = 0; q < p; ++q) c += H * d[static_cast<size_t>(q)];
        return c;
    }();
    DrawSet out;
    out.draws.resize(chain.draw_count(), H + psi_cols);
    long row = 0;

    Matrix cat_counts;
    for (long t = 1; t <= chain.iterations; ++t) {
        counts.setZero();
        for (long i = 0; i < m; ++i) counts[z[static_cast<size_t>(i)]] += 1.0;

        for (int q = 0; q < p; ++q) {
            int dq = d[static_cast<size_t>(q)];
            cat_counts.setZero(H, dq);
            for (long i = 0; i < m; ++i) cat_counts(z[static_cast<size_t>(i)], shard.C(i, q) - 1) += 1.0;
            for (int h = 0; h < H; ++h)
                psi[static_cast<size_t>(q)].row(h) =
                    rng::dirichlet(g, parafac_psi_concentration(cat_counts.row(h).transpose(), dq, gamma))
                        .transpose();
        }

        double tail = 0.0;
        for (int h = H - 1; h >= 0; --h) {
            gt_counts[h] = tail;
            tail += counts[h];
        }
        for (int h = 0; h < H; ++h) {
            auto [va, vb] = stick_v_conditional(counts[h], gt_counts[h], gamma, alpha);
            V[h] = std::clamp(rng::beta(g, va, vb), 1e-15, 1.0 - 1e-15);
        }
        double sum_log1mv = (1.0 - V.array()).log().sum();
        auto [ash, art] = stick_alpha_conditional(H, sum_log1mv, spec.a_alpha, spec.b_alpha);
        alpha = rng::gamma(g, ash, art);
        stick_weights(V, nu);

        sample_z();

        if (t > chain.burn_in && (t - chain.burn_in) % chain.thin == 0 && row < out.draws.rows()) {
            long c0 = 0;
            for (int h = 0; h < H; ++h) out.draws(row, c0++) = V[h];
            for (int q = 0; q < p; ++q)
                for (int h = 0; h < H; ++h)
                    for (int l = 0; l < d[static_cast<size_t>(q)]; ++l)
                        out.draws(row, c0++) = psi[static_cast<size_t>(q)](h, l);
            ++row;
        }
    }

    out.names = parafac_parameter_names(H, d);
    out.prov.model = "parafac";
    out.prov.subset_id = subset_id;
    out.prov.gamma = gamma;
    out.prov.seed = seed;
    out.prov.chain = chain;
    out.prov.m = m;
    out.prov.k = k;
    return out;
}

// Two-population synthetic generator: each sample joins one of two equally
// likely populations; most binary dimensions are uniform, while a designated
// set gets population-specific category-1 probabilities (flipped between the
// populations), inducing cross-dimension dependence.
inline Dataset generate_parafac_data(long n, int p, const std::vector<int>& special_dims,
                                     const std::vector<double>& special_probs, uint64_t seed) {
    require(n >= 1 && p >= 1, "generate_parafac_data: need n >= 1, p >= 1");
    require(special_dims.size() == special_probs.size(), "generate_parafac_data: dims/probs length mismatch");
    std::vector<double> p1(static_cast<size_t>(p), 0.5);
    for (size_t t = 0; t < special_dims.size(); ++t) {
        int q = special_dims[t];
        require(q >= 1 && q <= p, "generate_parafac_data: special dimension out of range");
        require(special_probs[t] > 0.0 && special_probs[t] < 1.0, "generate_parafac_data: probabilities in (0,1)");
        p1[static_cast<size_t>(q - 1)] = special_probs[t];
    }
    SplitMix64 g(seed);
    Dataset d;
    d.C.resize(n, p);
    for (long i = 0; i < n; ++i) {
        bool pop1 = rng::uniform01(g) < 0.5;
        for (int q = 0; q < p; ++q) {
            double pr1 = p1[static_cast<size_t>(q)];
            if (!pop1 && pr1 != 0.5) pr1 = 1.0 - pr1;
            d.C(i, q) = rng::uniform01(g) < pr1 ? 1 : 2;
        }
    }
    return d;
}

}  // namespace wasp

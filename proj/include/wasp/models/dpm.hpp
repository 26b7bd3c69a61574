// Truncated Dirichlet-process mixture of univariate normals for density
// estimation, sampled by a tempered Gibbs sweep. Likelihood terms carry the
// power gamma, giving conjugate conditionals with gamma-weighted statistics:
//   mu_h | rest     ~ N(gamma*sum_h x / (gamma*c_h + 1), sigma2_h / (gamma*c_h + 1))
//   sigma2_h | rest ~ InvGamma((gamma*c_h + 1)/2 + a_sigma,
//                              (gamma/2)*sum_h (x - mu_h)^2 + mu_h^2/2 + b_sigma)
//   V_h | rest      ~ Beta(1 + gamma*#{z = h}, alpha + gamma*#{z > h})
//   alpha | rest    ~ Gamma(a_alpha + lstar, b_alpha - sum_h log(1 - V_h))
//   z_i | rest      ~ Categorical(p_h), p_h propto nu_h N(x_i | mu_h, sigma2_h)
// with nu_h = V_h prod_{l<h} (1 - V_l) and truncation level lstar.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "wasp/models/common.hpp"

namespace wasp {

struct DpmSpec {
    int lstar = 20;        // stick-breaking truncation level
    double a_sigma = 3.0;  // sigma2_h ~ InvGamma(a_sigma, b_sigma)
    double b_sigma = 2.0;
    double a_alpha = 1.0;  // alpha ~ Gamma(a_alpha, b_alpha)
    double b_alpha = 1.0;
};

struct DpmMuParams {
    double mean;
    double var;
};

inline DpmMuParams dpm_mu_conditional(double sum_x, double count, double sigma2, double gamma) {
    double w = gamma * count;
    return {gamma * sum_x / (w + 1.0), sigma2 / (w + 1.0)};
}

struct DpmSigmaParams {
    double shape;
    double rate;
};

inline DpmSigmaParams dpm_sigma_conditional(double sq_dev_sum, double count, double mu, double gamma,
                                            const DpmSpec& spec) {
    return {(gamma * count + 1.0) / 2.0 + spec.a_sigma, (gamma / 2.0) * sq_dev_sum + mu * mu / 2.0 + spec.b_sigma};
}

inline std::vector<std::string> dpm_parameter_names(int lstar) {
    std::vector<std::string> names;
    for (int h = 1; h <= lstar; ++h) names.push_back("mu" + std::to_string(h));
    for (int h = 1; h <= lstar; ++h) names.push_back("sigma2_" + std::to_string(h));
    for (int h = 1; h <= lstar; ++h) names.push_back("V" + std::to_string(h));
    names.push_back("alpha");
    return names;
}

inline DrawSet sample_dpm_density_subset(const DpmSpec& spec, const Dataset& shard, double gamma,
                                         const ChainSettings& chain, uint64_t seed, int subset_id = 0, int k = 1) {
    chain.validate();
    require(gamma > 0.0, "dpm: gamma must be positive");
    require(spec.lstar >= 1, "dpm: truncation level must be at least 1");
    require(spec.a_sigma > 0.0 && spec.b_sigma > 0.0 && spec.a_alpha > 0.0 && spec.b_alpha > 0.0,
            "dpm: hyperparameters must be positive");
    require(shard.X.cols() == 1, "dpm: density model expects one-column data");
    const long m = shard.X.rows();
    const int H = spec.lstar;
    require(m >= 1, "dpm: shard needs at least one observation");

    SplitMix64 g(seed);

    // Initial state: means at random data points, unit variances, sticks from
    // the prior with alpha = 1; z then drawn from its conditional.
    Vector mu(H), sigma2 = Vector::Ones(H), V(H);
    for (int h = 0; h < H; ++h) mu[h] = shard.X(static_cast<long>(g() % static_cast<uint64_t>(m)), 0);
    double alpha = 1.0;
    for (int h = 0; h < H; ++h) V[h] = std::clamp(rng::beta(g, 1.0, alpha), 1e-15, 1.0 - 1e-15);
    Vector nu;
    stick_weights(V, nu);
    std::vector<int> z(static_cast<size_t>(m), 0);

    Vector logw(H), probs(H);
    auto sample_z = [&]() {
        Vector lognu = nu.array().max(1e-300).log().matrix();
        Vector logs2 = sigma2.array().log().matrix();
        for (long i = 0; i < m; ++i) {
            double x = shard.X(i, 0);
            for (int h = 0; h < H; ++h) {
                double d = x - mu[h];
                logw[h] = lognu[h] - 0.5 * logs2[h] - 0.5 * d * d / sigma2[h];
            }
            double mx = logw.maxCoeff();
            probs = (logw.array() - mx).exp().matrix();
            z[static_cast<size_t>(i)] = rng::categorical(g, probs);
        }
    };
    sample_z();

    Vector counts(H), sum_x(H), gt_counts(H);
    DrawSet out;
    out.draws.resize(chain.draw_count(), 3 * H + 1);
    long row = 0;

    for (long t = 1; t <= chain.iterations; ++t) {
        counts.setZero();
        sum_x.setZero();
        for (long i = 0; i < m; ++i) {
            counts[z[static_cast<size_t>(i)]] += 1.0;
            sum_x[z[static_cast<size_t>(i)]] += shard.X(i, 0);
        }

        for (int h = 0; h < H; ++h) {
            DpmMuParams mp = dpm_mu_conditional(sum_x[h], counts[h], sigma2[h], gamma);
            mu[h] = mp.mean + std::sqrt(mp.var) * rng::normal(g);
        }
        for (int h = 0; h < H; ++h) {
            double sq = 0.0;
            for (long i = 0; i < m; ++i) {
                if (z[static_cast<size_t>(i)] != h) continue;
                double d = shard.X(i, 0) - mu[h];
                sq += d * d;
            }
            DpmSigmaParams sp = dpm_sigma_conditional(sq, counts[h], mu[h], gamma, spec);
            sigma2[h] = rng::inverse_gamma(g, sp.shape, sp.rate);
        }

        double tail = 0.0;  // #{z > h} accumulated from the top
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
            for (int h = 0; h < H; ++h) out.draws(row, h) = mu[h];
            for (int h = 0; h < H; ++h) out.draws(row, H + h) = sigma2[h];
            for (int h = 0; h < H; ++h) out.draws(row, 2 * H + h) = V[h];
            out.draws(row, 3 * H) = alpha;
            ++row;
        }
    }

    out.names = dpm_parameter_names(H);
    out.prov.model = "dpm";
    out.prov.subset_id = subset_id;
    out.prov.gamma = gamma;
    out.prov.seed = seed;
    out.prov.chain = chain;
    out.prov.m = m;
    out.prov.k = k;
    return out;
}

inline Dataset generate_normal_data(long n, double mean, double sd, uint64_t seed) {
    require(n >= 1, "generate_normal_data: need n >= 1");
    require(sd > 0.0, "generate_normal_data: sd must be positive");
    SplitMix64 g(seed);
    Dataset d;
    d.X.resize(n, 1);
    for (long i = 0; i < n; ++i) d.X(i, 0) = mean + sd * rng::normal(g);
    return d;
}

// Mixture density implied by one draw row, evaluated at x (stick weights are
// renormalized over the truncated components).
inline double dpm_density_at(const Vector& draw_row, int lstar, double x) {
    require(draw_row.size() == 3 * lstar + 1, "dpm_density_at: row length mismatch");
    Vector V = draw_row.segment(2 * lstar, lstar);
    Vector nu;
    stick_weights(V, nu);
    double total = nu.sum();
    double f = 0.0;
    const double inv_sqrt2pi = 0.3989422804014327;
    for (int h = 0; h < lstar; ++h) {
        double s2 = draw_row[lstar + h];
        double d = x - draw_row[h];
        f += (nu[h] / total) * inv_sqrt2pi / std::sqrt(s2) * std::exp(-0.5 * d * d / s2);
    }
    return f;
}

}  // namespace wasp

// Logistic regression subset posterior: random-walk Metropolis-Hastings on the
// tempered log posterior gamma * loglik + log prior, prior N(0, prior_sd^2 I).
// The proposal scale adapts toward 0.25 acceptance during burn-in only, so a
// chain is a deterministic function of (data, settings, seed).
#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "wasp/models/common.hpp"

namespace wasp {

struct LogisticSpec {
    double prior_sd = 10.0;
};

inline double logistic_loglik(const Matrix& X, const Vector& y, const Vector& theta) {
    double ll = 0.0;
    Vector eta = X * theta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // log(1+e^eta) without overflow
        double soft = std::max(eta[i], 0.0) + std::log1p(std::exp(-std::abs(eta[i])));
        ll += y[i] * eta[i] - soft;
    }
    return ll;
}

inline double tempered_log_posterior(const LogisticSpec& spec, const Dataset& shard, const Vector& theta,
                                     double gamma) {
    require(gamma > 0.0, "tempered_log_posterior: gamma must be positive");
    if (!theta.allFinite()) return -std::numeric_limits<double>::infinity();
    double lp = -0.5 * theta.squaredNorm() / (spec.prior_sd * spec.prior_sd);
    return gamma * logistic_loglik(shard.X, shard.y, theta) + lp;
}

inline void validate_logistic_shard(const Dataset& shard) {
    require(shard.X.rows() >= 1 && shard.X.cols() >= 1, "logistic: shard needs design rows and columns");
    require(shard.y.size() == shard.X.rows(), "logistic: response length must match design rows");
    for (Eigen::Index i = 0; i < shard.y.size(); ++i)
        require(shard.y[i] == 0.0 || shard.y[i] == 1.0, "logistic: response must be binary 0/1");
    for (Eigen::Index c = 0; c < shard.X.cols(); ++c) {
        double v = (shard.X.col(c).array() - shard.X.col(c).mean()).square().sum();
        if (v == 0.0)
            std::fprintf(stderr, "warning: logistic design column %ld has zero variance\n", static_cast<long>(c + 1));
    }
}

inline DrawSet sample_logistic_subset(const LogisticSpec& spec, const Dataset& shard, double gamma,
                                      const ChainSettings& chain, uint64_t seed, int subset_id = 0, int k = 1) {
    chain.validate();
    validate_logistic_shard(shard);
    const int p = static_cast<int>(shard.X.cols());

    SplitMix64 g(seed);
    Vector theta = Vector::Zero(p);
    double lp = tempered_log_posterior(spec, shard, theta, gamma);

    double scale = 0.1;
    const int window = 50;
    int window_acc = 0;
    long post_acc = 0;

    DrawSet out;
    out.draws.resize(chain.draw_count(), p);
    long row = 0;

    Vector prop(p);
    for (long t = 1; t <= chain.iterations; ++t) {
        for (int j = 0; j < p; ++j) prop[j] = theta[j] + scale * rng::normal(g);
        double lp_prop = tempered_log_posterior(spec, shard, prop, gamma);
        bool accept = std::log(rng::uniform01_open(g)) < lp_prop - lp;
        if (accept) {
            theta = prop;
            lp = lp_prop;
        }
        if (t <= chain.burn_in) {
            window_acc += accept ? 1 : 0;
            if (t % window == 0) {
                double rate = static_cast<double>(window_acc) / window;
                scale *= std::exp(rate - 0.25);
                scale = std::min(std::max(scale, 1e-8), 1e3);
                window_acc = 0;
            }
        } else {
            post_acc += accept ? 1 : 0;
            if ((t - chain.burn_in) % chain.thin == 0 && row < out.draws.rows())
                out.draws.row(row++) = theta.transpose();
        }
    }

    out.names.resize(static_cast<size_t>(p));
    for (int j = 0; j < p; ++j) out.names[static_cast<size_t>(j)] = "theta" + std::to_string(j + 1);
    out.prov.model = "logistic";
    out.prov.subset_id = subset_id;
    out.prov.gamma = gamma;
    out.prov.seed = seed;
    out.prov.chain = chain;
    out.prov.m = shard.rows();
    out.prov.k = k;
    out.prov.acceptance_rate = static_cast<double>(post_acc) / static_cast<double>(chain.iterations - chain.burn_in);
    return out;
}

// Synthetic generator: design entries +-1, responses Bernoulli(1/(1+exp(-x'theta0))).
inline Dataset generate_logistic_data(long n, const Vector& theta0, uint64_t seed) {
    require(n >= 1 && theta0.size() >= 1, "generate_logistic_data: need n >= 1 and a nonempty theta0");
    SplitMix64 g(seed);
    Dataset d;
    d.X.resize(n, theta0.size());
    d.y.resize(n);
    for (long i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < theta0.size(); ++j) d.X(i, j) = rng::uniform01(g) < 0.5 ? -1.0 : 1.0;
        double eta = d.X.row(i).transpose().dot(theta0);
        double pr = 1.0 / (1.0 + std::exp(-eta));
        d.y[i] = rng::uniform01(g) < pr ? 1.0 : 0.0;
    }
    return d;
}

}  // namespace wasp

// Model dispatch: a SubsetTask bundles one shard with its model, tempering
// power, chain settings, and seed, and resolves to the matching sampler.
#pragma once

#include <variant>

#include "wasp/models/common.hpp"
#include "wasp/models/dpm.hpp"
#include "wasp/models/gmm.hpp"
#include "wasp/models/logistic.hpp"
#include "wasp/models/parafac.hpp"

namespace wasp {

using ModelSpec = std::variant<LogisticSpec, GmmSpec, DpmSpec, ParafacSpec>;

inline std::string model_name(const ModelSpec& spec) {
    struct V {
        std::string operator()(const LogisticSpec&) const { return "logistic"; }
        std::string operator()(const GmmSpec&) const { return "gmm"; }
        std::string operator()(const DpmSpec&) const { return "dpm"; }
        std::string operator()(const ParafacSpec&) const { return "parafac"; }
    };
    return std::visit(V{}, spec);
}

struct SubsetTask {
    ModelSpec spec;
    Dataset shard;
    double gamma = 0.0;  // <= 0 means auto: n / shard rows, so gamma * m = n
    ChainSettings chain;
    uint64_t seed = 0;
    int subset_id = 0;
    int k = 1;
    long n = 0;  // full-data rows; 0 means the shard is the full data

    double resolve_gamma() const {
        if (gamma > 0.0) return gamma;
        long m = shard.rows();
        require(m >= 1, "SubsetTask: shard is empty");
        long total = n > 0 ? n : m;
        require(total >= m, "SubsetTask: full-data size smaller than shard");
        return static_cast<double>(total) / static_cast<double>(m);
    }
};

inline DrawSet sample_subset(const SubsetTask& task) {
    double gamma = task.resolve_gamma();
    if (const auto* s = std::get_if<LogisticSpec>(&task.spec))
        return sample_logistic_subset(*s, task.shard, gamma, task.chain, task.seed, task.subset_id, task.k);
    if (const auto* s = std::get_if<GmmSpec>(&task.spec))
        return sample_gmm_subset(*s, task.shard, gamma, task.chain, task.seed, task.subset_id, task.k);
    if (const auto* s = std::get_if<DpmSpec>(&task.spec))
        return sample_dpm_density_subset(*s, task.shard, gamma, task.chain, task.seed, task.subset_id, task.k);
    return sample_parafac_subset(std::get<ParafacSpec>(task.spec), task.shard, gamma, task.chain, task.seed,
                                 task.subset_id, task.k);
}

// Tempered log posterior for the random-walk MH engine. Only the logistic
// model is sampled through a generic density; the Gibbs models are defined by
// their full conditionals and never evaluate a joint density.
inline double tempered_log_posterior(const ModelSpec& spec, const Dataset& shard, const Vector& theta,
                                     double gamma) {
    const auto* s = std::get_if<LogisticSpec>(&spec);
    require(s != nullptr, "tempered_log_posterior: only the logistic model exposes a joint density");
    return tempered_log_posterior(*s, shard, theta, gamma);
}

}  // namespace wasp

// Data partitioning strategies for subset sampling: uniformly random splits,
// stratified splits that spread k-means clusters evenly across subsets, and
// grouped splits that keep all rows sharing a key in one subset.
#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "wasp/common.hpp"
#include "wasp/rng.hpp"

namespace wasp {

enum class PartitionStrategy { random, stratified_cluster, grouped };

inline std::string partition_strategy_name(PartitionStrategy s) {
    switch (s) {
        case PartitionStrategy::random: return "random";
        case PartitionStrategy::stratified_cluster: return "stratified-cluster";
        default: return "grouped";
    }
}

inline PartitionStrategy parse_partition_strategy(const std::string& s) {
    if (s == "random") return PartitionStrategy::random;
    if (s == "stratified-cluster") return PartitionStrategy::stratified_cluster;
    if (s == "grouped") return PartitionStrategy::grouped;
    throw validation_error("partition: unknown strategy '" + s + "'");
}

struct PartitionPlan {
    PartitionStrategy strategy = PartitionStrategy::random;
    int k = 1;
    std::vector<int> assignment;  // row index -> subset id in [0, k)
    int clusters = 0;             // stratified-cluster only
    std::string group_key;        // grouped only
    uint64_t seed = 0;

    std::vector<std::vector<long>> subsets() const {
        std::vector<std::vector<long>> out(static_cast<size_t>(k));
        for (size_t i = 0; i < assignment.size(); ++i)
            out[static_cast<size_t>(assignment[i])].push_back(static_cast<long>(i));
        return out;
    }
};

namespace detail {

inline std::vector<long> shuffled_indices(long n, SplitMix64& g) {
    std::vector<long> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0L);
    for (long i = n - 1; i > 0; --i) {
        long j = static_cast<long>(g() % static_cast<uint64_t>(i + 1));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    return idx;
}

}  // namespace detail

inline PartitionPlan partition_random(long rows, int k, uint64_t seed) {
    require(k >= 1, "partition: k must be at least 1");
    require(rows >= k, "partition: k exceeds the number of rows");
    PartitionPlan plan;
    plan.strategy = PartitionStrategy::random;
    plan.k = k;
    plan.seed = seed;
    plan.assignment.resize(static_cast<size_t>(rows));
    SplitMix64 g(seed);
    std::vector<long> order = detail::shuffled_indices(rows, g);
    for (long i = 0; i < rows; ++i) plan.assignment[static_cast<size_t>(order[static_cast<size_t>(i)])] = static_cast<int>(i % k);
    return plan;
}

// Lloyd's k-means with k-means++ seeding; returns the cluster label per row.
inline std::vector<int> kmeans_labels(const Matrix& X, int clusters, uint64_t seed, int iterations = 25) {
    const long n = X.rows();
    require(clusters >= 1 && clusters <= n, "kmeans: cluster count out of range");
    SplitMix64 g(seed);

    Matrix centers(clusters, X.cols());
    Vector d2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
    centers.row(0) = X.row(static_cast<long>(g() % static_cast<uint64_t>(n)));
    for (int c = 1; c < clusters; ++c) {
        for (long i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], (X.row(i) - centers.row(c - 1)).squaredNorm());
        double total = d2.sum();
        if (total <= 0.0) {
            centers.row(c) = X.row(static_cast<long>(g() % static_cast<uint64_t>(n)));
            continue;
        }
        double u = rng::uniform01(g) * total, acc = 0.0;
        long pick = n - 1;
        for (long i = 0; i < n; ++i) {
            acc += d2[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        centers.row(c) = X.row(pick);
    }

    std::vector<int> label(static_cast<size_t>(n), 0);
    for (int it = 0; it < iterations; ++it) {
        bool changed = false;
        for (long i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (X.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < clusters; ++c) {
                double d = (X.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (label[static_cast<size_t>(i)] != best) changed = true;
            label[static_cast<size_t>(i)] = best;
        }
        if (!changed && it > 0) break;
        Matrix sums = Matrix::Zero(clusters, X.cols());
        std::vector<long> counts(static_cast<size_t>(clusters), 0);
        for (long i = 0; i < n; ++i) {
            sums.row(label[static_cast<size_t>(i)]) += X.row(i);
            ++counts[static_cast<size_t>(label[static_cast<size_t>(i)])];
        }
        for (int c = 0; c < clusters; ++c)
            if (counts[static_cast<size_t>(c)] > 0) centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<size_t>(c)]);
    }
    return label;
}

// Clusters the rows, then deals each cluster's members (shuffled) round-robin
// across subsets so every subset receives a near-equal share of each cluster.
inline PartitionPlan partition_stratified_cluster(const Matrix& X, int k, int clusters, uint64_t seed) {
    require(k >= 1, "partition: k must be at least 1");
    require(X.rows() >= k, "partition: k exceeds the number of rows");
    require(clusters >= 1, "partition: cluster count must be at least 1");
    PartitionPlan plan;
    plan.strategy = PartitionStrategy::stratified_cluster;
    plan.k = k;
    plan.clusters = clusters;
    plan.seed = seed;
    plan.assignment.resize(static_cast<size_t>(X.rows()));

    std::vector<int> label = kmeans_labels(X, clusters, derive_seed(seed, 0));
    SplitMix64 g(derive_seed(seed, 1));
    for (int c = 0; c < clusters; ++c) {
        std::vector<long> members;
        for (long i = 0; i < X.rows(); ++i)
            if (label[static_cast<size_t>(i)] == c) members.push_back(i);
        if (members.empty()) continue;
        std::vector<long> order = detail::shuffled_indices(static_cast<long>(members.size()), g);
        for (size_t t = 0; t < members.size(); ++t)
            plan.assignment[static_cast<size_t>(members[static_cast<size_t>(order[t])])] =
                static_cast<int>((static_cast<size_t>(c) + t) % static_cast<size_t>(k));
    }
    return plan;
}

// Keeps each group intact: groups are shuffled, then greedily assigned to the
// currently smallest subset (by rows).
inline PartitionPlan partition_grouped(const std::vector<std::string>& group_of_row, int k, uint64_t seed,
                                       const std::string& group_key = "") {
    require(k >= 1, "partition: k must be at least 1");
    const long rows = static_cast<long>(group_of_row.size());
    require(rows >= 1, "partition: no rows");

    std::vector<std::string> group_order;  // first-appearance order
    std::map<std::string, std::vector<long>> members;
    for (long i = 0; i < rows; ++i) {
        auto [it, inserted] = members.try_emplace(group_of_row[static_cast<size_t>(i)]);
        if (inserted) group_order.push_back(group_of_row[static_cast<size_t>(i)]);
        it->second.push_back(i);
    }
    require(static_cast<long>(group_order.size()) >= k, "partition: k exceeds the number of groups");

    PartitionPlan plan;
    plan.strategy = PartitionStrategy::grouped;
    plan.k = k;
    plan.seed = seed;
    plan.group_key = group_key;
    plan.assignment.resize(static_cast<size_t>(rows));

    SplitMix64 g(seed);
    std::vector<long> order = detail::shuffled_indices(static_cast<long>(group_order.size()), g);
    std::vector<long> load(static_cast<size_t>(k), 0);
    for (long gi : order) {
        const auto& rows_of_group = members[group_order[static_cast<size_t>(gi)]];
        int target = static_cast<int>(std::min_element(load.begin(), load.end()) - load.begin());
        for (long r : rows_of_group) plan.assignment[static_cast<size_t>(r)] = target;
        load[static_cast<size_t>(target)] += static_cast<long>(rows_of_group.size());
    }
    return plan;
}

inline nlohmann::ordered_json partition_plan_json(const PartitionPlan& plan) {
    nlohmann::ordered_json j;
    j["strategy"] = partition_strategy_name(plan.strategy);
    j["k"] = plan.k;
    j["seed"] = plan.seed;
    if (plan.strategy == PartitionStrategy::stratified_cluster) j["clusters"] = plan.clusters;
    if (plan.strategy == PartitionStrategy::grouped) j["group_key"] = plan.group_key;
    j["assignment"] = plan.assignment;
    return j;
}

inline PartitionPlan partition_plan_from_json(const nlohmann::json& j) {
    require(j.contains("strategy") && j.contains("k") && j.contains("assignment"),
            "partition plan: missing strategy, k, or assignment");
    PartitionPlan plan;
    plan.strategy = parse_partition_strategy(j.at("strategy").get<std::string>());
    plan.k = j.at("k").get<int>();
    plan.seed = j.value("seed", static_cast<uint64_t>(0));
    plan.clusters = j.value("clusters", 0);
    plan.group_key = j.value("group_key", std::string());
    plan.assignment = j.at("assignment").get<std::vector<int>>();
    require(plan.k >= 1, "partition plan: k must be at least 1");
    for (int a : plan.assignment)
        require(a >= 0 && a < plan.k, "partition plan: assignment outside [0, k)");
    return plan;
}

}  // namespace wasp

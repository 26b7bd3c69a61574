// Posterior comparison diagnostics: the total-variation accuracy metric
// between kernel density estimates, the W2 distance from an empirical measure
// to a point mass, and an empirical posterior-contraction report.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wasp/barycenter.hpp"
#include "wasp/kde.hpp"
#include "wasp/models.hpp"
#include "wasp/partition.hpp"

namespace wasp {

// accuracy = 1 - (1/2) * integral |p - q|, trapezoid rule on a shared grid.
inline double tv_accuracy(const DensityEstimate& a, const DensityEstimate& b) {
    require(a.grid.matches(b.grid), "tv_accuracy: density estimates use different grids");
    DensityEstimate diff;
    diff.grid = a.grid;
    diff.values = (a.values - b.values).cwiseAbs();
    double acc = 1.0 - 0.5 * density_integral(diff);
    return std::clamp(acc, 0.0, 1.0);
}

inline EmpiricalMeasure measure_from_draws(const DrawSet& d) { return make_measure(d.draws); }

struct AccuracyResult {
    double accuracy = 0.0;
    Vector bandwidths_a;
    Vector bandwidths_b;
    KdeGrid grid;
};

// End-to-end accuracy between two weighted samples: Silverman bandwidths per
// input, one shared grid spanning both, KDE each, then the TV metric.
inline AccuracyResult tv_accuracy_between(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                          const std::vector<int>& bins = {}) {
    AccuracyResult out;
    out.bandwidths_a = detail::silverman_bandwidths(a.atoms, a.weights);
    out.bandwidths_b = detail::silverman_bandwidths(b.atoms, b.weights);
    out.grid = common_kde_grid(a, b, out.bandwidths_a, out.bandwidths_b, bins);
    DensityEstimate da = kde(a, out.grid, out.bandwidths_a);
    DensityEstimate db = kde(b, out.grid, out.bandwidths_b);
    out.accuracy = tv_accuracy(da, db);
    return out;
}

// W2 distance to a point mass: sqrt(sum_i w_i |atom_i - theta0|^2).
inline double w2_to_truth(const EmpiricalMeasure& m, const Vector& theta0) {
    require(m.atoms.cols() == theta0.size(), "w2_to_truth: dimension mismatch");
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.atoms.rows(); ++i)
        total += m.weights[i] * (m.atoms.row(i).transpose() - theta0).squaredNorm();
    return std::sqrt(std::max(total, 0.0));
}

struct ContractionRow {
    long m = 0;         // per-subset sample size
    double mean_w2 = 0; // Monte Carlo mean of W2(combined posterior, point mass at truth)
    double se_w2 = 0;   // standard error over replications
};

struct ContractionReport {
    std::vector<ContractionRow> rows;
    bool monotone_nonincreasing = true;
};

// Empirical contraction check: for each subset size m, simulate k*m
// observations at theta0, split randomly, sample tempered subset chains,
// combine, and measure the W2 distance of the combined posterior to theta0.
inline ContractionReport contraction_report(const ModelSpec& spec, const Vector& theta0,
                                            const std::vector<long>& m_grid, int k, int replications,
                                            uint64_t seed, const ChainSettings& chain = ChainSettings(),
                                            const WaspOptions& options = WaspOptions()) {
    const auto* logistic = std::get_if<LogisticSpec>(&spec);
    require(logistic != nullptr, "contraction_report: supported for the logistic model");
    require(!m_grid.empty(), "contraction_report: empty m grid");
    for (size_t t = 1; t < m_grid.size(); ++t)
        require(m_grid[t] > m_grid[t - 1], "contraction_report: m grid must be increasing");
    require(k >= 1 && replications >= 1, "contraction_report: need k >= 1 and replications >= 1");

    ContractionReport report;
    for (size_t im = 0; im < m_grid.size(); ++im) {
        long m = m_grid[im];
        std::vector<double> w2s;
        for (int r = 0; r < replications; ++r) {
            uint64_t rep_seed = derive_seed(seed, static_cast<uint64_t>(im * static_cast<size_t>(replications) + static_cast<size_t>(r)));
            long n = m * k;
            Dataset data = generate_logistic_data(n, theta0, derive_seed(rep_seed, 0));
            PartitionPlan plan = partition_random(n, k, derive_seed(rep_seed, 1));
            auto idx = plan.subsets();
            std::vector<Matrix> draws;
            for (int j = 0; j < k; ++j) {
                const auto& rows = idx[static_cast<size_t>(j)];
                std::vector<int> rows_int(rows.begin(), rows.end());
                SubsetTask task;
                task.spec = spec;
                task.shard = data.take(rows_int);
                task.chain = chain;
                task.seed = derive_seed(rep_seed, static_cast<uint64_t>(2 + j));
                task.subset_id = j;
                task.k = k;
                task.n = n;
                draws.push_back(sample_subset(task).draws);
            }
            BarycenterSolution sol = wasp(draws, options);
            w2s.push_back(w2_to_truth(sol.measure, theta0));
        }
        ContractionRow row;
        row.m = m;
        double mean = 0.0;
        for (double v : w2s) mean += v;
        mean /= static_cast<double>(w2s.size());
        double var = 0.0;
        for (double v : w2s) var += (v - mean) * (v - mean);
        row.mean_w2 = mean;
        row.se_w2 = w2s.size() > 1
                        ? std::sqrt(var / (static_cast<double>(w2s.size()) - 1.0) / static_cast<double>(w2s.size()))
                        : 0.0;
        report.rows.push_back(row);
    }
    for (size_t t = 1; t < report.rows.size(); ++t)
        if (report.rows[t].mean_w2 > report.rows[t - 1].mean_w2) report.monotone_nonincreasing = false;
    return report;
}

}  // namespace wasp

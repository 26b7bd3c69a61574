// Tensor-product atom lattice supporting the combined measure: componentwise
// pooled bounds, per-dimension counts ceil(range/mesh), atoms placed at
// lo + (i/g)(hi - lo) for i = 1..g. That placement excludes the lower bound
// and includes the upper one; the asymmetry is deliberate and frozen by tests.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wasp/common.hpp"

namespace wasp {

inline constexpr long kGridAtomCap = 10000;

struct Grid {
    Vector lo, hi;            // per-dimension bounds after padding
    std::vector<int> counts;  // atoms per dimension, each >= 1
    double mesh = 0.0;        // largest per-dimension spacing actually used
    Matrix atoms;             // g x q, last dimension varying fastest

    Eigen::Index size() const { return atoms.rows(); }
    Eigen::Index dim() const { return atoms.cols(); }
};

namespace detail {

inline void pooled_bounds(const std::vector<Matrix>& subset_draws, double padding, Vector& lo, Vector& hi) {
    require(!subset_draws.empty(), "grid: need at least one subset");
    require(padding >= 0.0, "grid: padding must be nonnegative");
    const Eigen::Index q = subset_draws.front().cols();
    require(q >= 1, "grid: draws must have at least one column");
    lo = Vector::Constant(q, std::numeric_limits<double>::infinity());
    hi = Vector::Constant(q, -std::numeric_limits<double>::infinity());
    for (const Matrix& d : subset_draws) {
        require(d.rows() >= 1, "grid: empty subset draw matrix");
        require(d.cols() == q, "grid: subsets disagree on dimension");
        require(d.allFinite(), "grid: non-finite draw");
        lo = lo.cwiseMin(d.colwise().minCoeff().transpose());
        hi = hi.cwiseMax(d.colwise().maxCoeff().transpose());
    }
    Vector pad = padding * (hi - lo);
    lo -= pad;
    hi += pad;
}

inline Grid materialize(Vector lo, Vector hi, std::vector<int> counts, long cap) {
    const Eigen::Index q = lo.size();
    long g = 1;
    for (int c : counts) {
        require(c >= 1, "grid: per-dimension count must be >= 1");
        g *= c;
        require(g <= cap, "grid: atom count exceeds cap of " + std::to_string(cap) +
                              "; increase the mesh size (larger epsilon)");
    }
    Grid grid;
    grid.lo = std::move(lo);
    grid.hi = std::move(hi);
    grid.counts = std::move(counts);
    grid.mesh = 0.0;
    for (Eigen::Index r = 0; r < q; ++r)
        grid.mesh = std::max(grid.mesh, (grid.hi[r] - grid.lo[r]) / grid.counts[static_cast<size_t>(r)]);

    grid.atoms.resize(g, q);
    std::vector<int> idx(static_cast<size_t>(q), 1);  // i_r in 1..g_r
    for (long row = 0; row < g; ++row) {
        for (Eigen::Index r = 0; r < q; ++r) {
            int gr = grid.counts[static_cast<size_t>(r)];
            grid.atoms(row, r) =
                grid.lo[r] + (static_cast<double>(idx[static_cast<size_t>(r)]) / gr) * (grid.hi[r] - grid.lo[r]);
        }
        for (Eigen::Index r = q - 1; r >= 0; --r) {  // last dimension fastest
            if (++idx[static_cast<size_t>(r)] <= grid.counts[static_cast<size_t>(r)]) break;
            idx[static_cast<size_t>(r)] = 1;
        }
    }
    return grid;
}

}  // namespace detail

inline Grid build_grid(const std::vector<Matrix>& subset_draws, double eps, double padding = 0.0,
                       long cap = kGridAtomCap) {
    require(eps > 0.0, "grid: mesh size must be positive");
    Vector lo, hi;
    detail::pooled_bounds(subset_draws, padding, lo, hi);
    std::vector<int> counts(static_cast<size_t>(lo.size()));
    for (Eigen::Index r = 0; r < lo.size(); ++r) {
        double range = hi[r] - lo[r];
        require(range / eps <= static_cast<double>(cap),
                "grid: atom count exceeds cap of " + std::to_string(cap) + "; increase the mesh size (larger epsilon)");
        counts[static_cast<size_t>(r)] = range > 0.0 ? static_cast<int>(std::ceil(range / eps)) : 1;
    }
    return detail::materialize(std::move(lo), std::move(hi), std::move(counts), cap);
}

// Same placement rule with per-dimension counts fixed directly (the mesh then
// differs per dimension, like the reference grids built with one count per axis).
inline Grid build_grid_counts(const std::vector<Matrix>& subset_draws, const std::vector<int>& counts,
                              double padding = 0.0, long cap = kGridAtomCap) {
    Vector lo, hi;
    detail::pooled_bounds(subset_draws, padding, lo, hi);
    require(static_cast<Eigen::Index>(counts.size()) == lo.size(), "grid: one count per dimension required");
    std::vector<int> c = counts;
    for (Eigen::Index r = 0; r < lo.size(); ++r)
        if (hi[r] - lo[r] <= 0.0) c[static_cast<size_t>(r)] = 1;
    return detail::materialize(std::move(lo), std::move(hi), std::move(c), cap);
}

// Default mesh: 1/40 of the largest pooled per-dimension range.
inline double default_mesh(const std::vector<Matrix>& subset_draws, double padding = 0.0) {
    Vector lo, hi;
    detail::pooled_bounds(subset_draws, padding, lo, hi);
    double span = (hi - lo).maxCoeff();
    require(span > 0.0, "grid: all draws identical; mesh size has no natural scale");
    return span / 40.0;
}

}  // namespace wasp

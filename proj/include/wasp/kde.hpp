// Binned Gaussian kernel density estimation for weighted samples in one or
// two dimensions: sample mass is spread onto a uniform lattice by linear
// binning, then smoothed by a separable discrete Gaussian kernel, so the
// estimate costs O(bins * kernel width) regardless of sample size.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "wasp/measure.hpp"

namespace wasp {

inline constexpr int kKdeBins1D = 512;
inline constexpr int kKdeBins2D = 128;
inline constexpr double kKdePaddingBandwidths = 3.0;
inline constexpr double kKdeMinEffectiveSamples = 10.0;

struct KdeGrid {
    Vector lo;           // per-dimension lower bound
    Vector hi;           // per-dimension upper bound
    std::vector<int> n;  // lattice points per dimension

    int dim() const { return static_cast<int>(n.size()); }
    double step(int r) const { return (hi[r] - lo[r]) / (n[static_cast<size_t>(r)] - 1.0); }
    Vector axis(int r) const {
        Vector x(n[static_cast<size_t>(r)]);
        for (int i = 0; i < n[static_cast<size_t>(r)]; ++i) x[i] = lo[r] + step(r) * i;
        return x;
    }
    bool matches(const KdeGrid& o) const {
        if (n != o.n) return false;
        for (int r = 0; r < dim(); ++r)
            if (std::abs(lo[r] - o.lo[r]) > 1e-12 * std::max(1.0, std::abs(lo[r])) ||
                std::abs(hi[r] - o.hi[r]) > 1e-12 * std::max(1.0, std::abs(hi[r])))
                return false;
        return true;
    }
};

struct DensityEstimate {
    KdeGrid grid;
    Matrix values;      // n0 x 1 in 1-D, n0 x n1 in 2-D; nonnegative
    Vector bandwidths;  // per dimension
};

namespace detail {

inline void validate_kde_grid(const KdeGrid& grid) {
    int q = grid.dim();
    require(q == 1 || q == 2, "kde: dimension must be 1 or 2");
    require(grid.lo.size() == q && grid.hi.size() == q, "kde: grid bound dimensions mismatch");
    for (int r = 0; r < q; ++r) {
        require(grid.n[static_cast<size_t>(r)] >= 2, "kde: each grid axis needs at least 2 points");
        require(grid.hi[r] > grid.lo[r], "kde: grid upper bound must exceed lower bound");
    }
}

inline double effective_sample_size(const Vector& w) { return 1.0 / w.squaredNorm(); }

// Weighted quantile by inverse CDF over atoms sorted by value.
inline double weighted_quantile(const Vector& x, const Vector& w, double q) {
    std::vector<long> order(static_cast<size_t>(x.size()));
    std::iota(order.begin(), order.end(), 0L);
    std::sort(order.begin(), order.end(), [&](long a, long b) { return x[a] < x[b]; });
    double acc = 0.0;
    for (long idx : order) {
        acc += w[idx];
        if (acc >= q) return x[idx];
    }
    return x[order.back()];
}

inline Vector silverman_bandwidths(const Matrix& atoms, const Vector& w) {
    const int q = static_cast<int>(atoms.cols());
    double ess = effective_sample_size(w);
    Vector mean = Vector::Zero(q);
    for (Eigen::Index i = 0; i < atoms.rows(); ++i) mean += w[i] * atoms.row(i).transpose();
    Vector bw(q);
    for (int r = 0; r < q; ++r) {
        double var = 0.0;
        for (Eigen::Index i = 0; i < atoms.rows(); ++i) {
            double d = atoms(i, r) - mean[r];
            var += w[i] * d * d;
        }
        double sd = std::sqrt(var);
        require(sd > 0.0, "kde: sample is degenerate in dimension " + std::to_string(r + 1));
        if (q == 1) {
            double iqr = weighted_quantile(atoms.col(r), w, 0.75) - weighted_quantile(atoms.col(r), w, 0.25);
            double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
            bw[r] = 0.9 * spread * std::pow(ess, -0.2);
        } else {
            bw[r] = sd * std::pow(ess, -1.0 / 6.0);
        }
    }
    return bw;
}

// In-place separable convolution along one axis with a discrete Gaussian
// (normalized to unit sum; tails beyond the lattice are truncated).
inline void convolve_axis(Matrix& vals, int axis, double h, double step) {
    long len = axis == 0 ? vals.rows() : vals.cols();
    int radius = std::min<long>(static_cast<long>(std::ceil(5.0 * h / step)), len - 1);
    std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
    double total = 0.0;
    for (int j = -radius; j <= radius; ++j) {
        double u = j * step / h;
        kernel[static_cast<size_t>(j + radius)] = std::exp(-0.5 * u * u);
        total += kernel[static_cast<size_t>(j + radius)];
    }
    for (auto& kv : kernel) kv /= total;

    long lanes = axis == 0 ? vals.cols() : vals.rows();
    std::vector<double> line(static_cast<size_t>(len));
    for (long lane = 0; lane < lanes; ++lane) {
        for (long i = 0; i < len; ++i) line[static_cast<size_t>(i)] = axis == 0 ? vals(i, lane) : vals(lane, i);
        for (long i = 0; i < len; ++i) {
            double acc = 0.0;
            long j0 = std::max(0L, i - radius), j1 = std::min(len - 1, i + radius);
            for (long j = j0; j <= j1; ++j) acc += kernel[static_cast<size_t>(i - j + radius)] * line[static_cast<size_t>(j)];
            if (axis == 0)
                vals(i, lane) = acc;
            else
                vals(lane, i) = acc;
        }
    }
}

}  // namespace detail

// Trapezoid-rule integral of a density estimate over its grid.
inline double density_integral(const DensityEstimate& d) {
    int q = d.grid.dim();
    double total = 0.0;
    if (q == 1) {
        for (long i = 0; i < d.values.rows(); ++i) {
            double w = (i == 0 || i == d.values.rows() - 1) ? 0.5 : 1.0;
            total += w * d.values(i, 0);
        }
        return total * d.grid.step(0);
    }
    for (long i = 0; i < d.values.rows(); ++i) {
        double wi = (i == 0 || i == d.values.rows() - 1) ? 0.5 : 1.0;
        for (long j = 0; j < d.values.cols(); ++j) {
            double wj = (j == 0 || j == d.values.cols() - 1) ? 0.5 : 1.0;
            total += wi * wj * d.values(i, j);
        }
    }
    return total * d.grid.step(0) * d.grid.step(1);
}

inline DensityEstimate kde(const EmpiricalMeasure& m, const KdeGrid& grid, const Vector& bandwidths = Vector()) {
    detail::validate_kde_grid(grid);
    const int q = static_cast<int>(m.atoms.cols());
    require(q == grid.dim(), "kde: sample dimension does not match grid dimension");
    double ess = detail::effective_sample_size(m.weights);
    require(ess >= kKdeMinEffectiveSamples,
            "kde: needs at least " + std::to_string(static_cast<int>(kKdeMinEffectiveSamples)) +
                " effective samples");

    Vector bw = bandwidths.size() == 0 ? detail::silverman_bandwidths(m.atoms, m.weights) : bandwidths;
    require(bw.size() == q, "kde: bandwidth count does not match dimension");
    for (int r = 0; r < q; ++r) require(bw[r] > 0.0, "kde: bandwidths must be positive");

    DensityEstimate out;
    out.grid = grid;
    out.bandwidths = bw;
    const int n0 = grid.n[0];
    const int n1 = q == 2 ? grid.n[1] : 1;
    out.values = Matrix::Zero(n0, n1);

    // Linear binning: each atom splits its weight over the neighboring lattice
    // points; atoms outside the grid pile onto the edge.
    auto locate = [&](double x, int r, long& i0, double& frac) {
        double f = (x - grid.lo[r]) / grid.step(r);
        f = std::clamp(f, 0.0, static_cast<double>(grid.n[static_cast<size_t>(r)] - 1));
        i0 = std::min(static_cast<long>(f), static_cast<long>(grid.n[static_cast<size_t>(r)] - 2));
        frac = f - static_cast<double>(i0);
    };
    for (Eigen::Index s = 0; s < m.atoms.rows(); ++s) {
        long i0;
        double fi;
        locate(m.atoms(s, 0), 0, i0, fi);
        if (q == 1) {
            out.values(i0, 0) += m.weights[s] * (1.0 - fi);
            out.values(i0 + 1, 0) += m.weights[s] * fi;
        } else {
            long j0;
            double fj;
            locate(m.atoms(s, 1), 1, j0, fj);
            out.values(i0, j0) += m.weights[s] * (1.0 - fi) * (1.0 - fj);
            out.values(i0 + 1, j0) += m.weights[s] * fi * (1.0 - fj);
            out.values(i0, j0 + 1) += m.weights[s] * (1.0 - fi) * fj;
            out.values(i0 + 1, j0 + 1) += m.weights[s] * fi * fj;
        }
    }

    detail::convolve_axis(out.values, 0, bw[0], grid.step(0));
    if (q == 2) detail::convolve_axis(out.values, 1, bw[1], grid.step(1));

    double cell = grid.step(0) * (q == 2 ? grid.step(1) : 1.0);
    out.values /= cell;

    double mass = density_integral(out);
    if (mass < 0.98 || mass > 1.02)
        throw numerical_error("kde: density integrates to " + format_double(mass) +
                              "; grid does not cover the sample");
    return out;
}

// Common evaluation grid for comparing two samples: spans the pooled range of
// both plus a margin of a few bandwidths on each side.
inline KdeGrid common_kde_grid(const EmpiricalMeasure& a, const EmpiricalMeasure& b, const Vector& bw_a,
                               const Vector& bw_b, const std::vector<int>& bins = {}) {
    const int q = static_cast<int>(a.atoms.cols());
    require(q == static_cast<int>(b.atoms.cols()), "kde grid: sample dimensions differ");
    require(q == 1 || q == 2, "kde grid: dimension must be 1 or 2");
    KdeGrid grid;
    grid.lo.resize(q);
    grid.hi.resize(q);
    for (int r = 0; r < q; ++r) {
        double pad = kKdePaddingBandwidths * std::max(bw_a[r], bw_b[r]);
        grid.lo[r] = std::min(a.atoms.col(r).minCoeff(), b.atoms.col(r).minCoeff()) - pad;
        grid.hi[r] = std::max(a.atoms.col(r).maxCoeff(), b.atoms.col(r).maxCoeff()) + pad;
        grid.n.push_back(q == 1 ? kKdeBins1D : kKdeBins2D);
    }
    if (!bins.empty()) {
        require(static_cast<int>(bins.size()) == q, "kde grid: bin-count list does not match dimension");
        grid.n = bins;
    }
    detail::validate_kde_grid(grid);
    return grid;
}

}  // namespace wasp

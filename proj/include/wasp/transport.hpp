// Exact discrete Wasserstein-2 distance: the transport LP solved with the
// revised simplex core, plus a factorial brute-force oracle for tiny uniform
// instances.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "wasp/lp.hpp"
#include "wasp/measure.hpp"

namespace wasp {

inline constexpr long kExactTransportCap = 250000;  // g*s variables
inline constexpr double kPlanMarginalTol = 1e-8;

struct TransportPlan {
    Matrix coupling;  // g x s
    double objective = 0.0;
};

namespace detail {

// Column (u,v) of the transport polytope: +1 in source row u, +1 in target row g+v.
struct TransportProblem {
    const Matrix& cost_;
    int g_, s_;

    int rows() const { return g_ + s_; }
    long cols() const { return static_cast<long>(g_) * s_; }
    double cost(long j) const { return cost_(static_cast<int>(j / s_), static_cast<int>(j % s_)); }
    void column(long j, std::vector<lp::ColumnEntry>& out) const {
        out.clear();
        out.push_back({static_cast<int>(j / s_), 1.0});
        out.push_back({g_ + static_cast<int>(j % s_), 1.0});
    }
};

inline void verify_plan_marginals(const TransportPlan& plan, const Vector& row_w, const Vector& col_w,
                                  double tol = kPlanMarginalTol) {
    double r = (plan.coupling.rowwise().sum() - row_w).lpNorm<Eigen::Infinity>();
    double c = (plan.coupling.colwise().sum().transpose() - col_w).lpNorm<Eigen::Infinity>();
    if (r > tol || c > tol)
        throw numerical_error("transport plan marginals violated (row residual " + format_double(r) +
                              ", column residual " + format_double(c) + ")");
}

}  // namespace detail

inline std::pair<double, TransportPlan> w2_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                                 long variable_cap = kExactTransportCap) {
    require(mu.dim() == nu.dim(), "w2_exact: dimension mismatch");
    const int g = static_cast<int>(mu.size());
    const int s = static_cast<int>(nu.size());
    if (static_cast<long>(g) * s > variable_cap)
        throw numerical_error("w2_exact: instance has " + std::to_string(static_cast<long>(g) * s) +
                              " variables, above the exact-solve cap of " + std::to_string(variable_cap) +
                              "; use the entropic solver for instances this large");

    CostMatrix cost = squared_cost(mu, nu);
    detail::TransportProblem prob{cost.entries, g, s};
    Vector b(g + s);
    b.head(g) = mu.weights;
    b.tail(s) = nu.weights;

    lp::Solution sol = lp::solve(prob, b);
    if (sol.status == lp::Status::pivot_limit)
        throw numerical_error("w2_exact: pivot limit reached, residual " + format_double(sol.residual));
    if (sol.status == lp::Status::infeasible)
        throw numerical_error("w2_exact: solver reported infeasible (should be impossible for valid measures)");

    TransportPlan plan;
    plan.coupling.resize(g, s);
    for (int u = 0; u < g; ++u)
        for (int v = 0; v < s; ++v) plan.coupling(u, v) = sol.x[static_cast<size_t>(u) * s + v];
    plan.objective = sol.objective;
    detail::verify_plan_marginals(plan, mu.weights, nu.weights);
    return {std::sqrt(std::max(sol.objective, 0.0)), plan};
}

// min over all s! assignments of the mean squared pair cost; by Birkhoff's
// theorem this equals the transport LP optimum on uniform equal-size inputs.
inline double w2_bruteforce_uniform(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    require(mu.dim() == nu.dim(), "w2_bruteforce_uniform: dimension mismatch");
    require(mu.size() == nu.size(), "w2_bruteforce_uniform: atom counts must match");
    const int s = static_cast<int>(mu.size());
    require(s <= 8, "w2_bruteforce_uniform: at most 8 atoms");
    const double uw = 1.0 / s;
    for (int i = 0; i < s; ++i) {
        require(std::abs(mu.weights[i] - uw) <= 1e-12, "w2_bruteforce_uniform: mu must be uniform");
        require(std::abs(nu.weights[i] - uw) <= 1e-12, "w2_bruteforce_uniform: nu must be uniform");
    }
    CostMatrix cost = squared_cost(mu, nu);
    std::vector<int> perm(s);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < s; ++i) total += cost.entries(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best / s);
}

}  // namespace wasp

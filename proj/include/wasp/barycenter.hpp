// Fixed-support Wasserstein-2 barycenter of k empirical measures: the exact
// linear program (variables vec(T_1)..vec(T_k) then the grid weights a;
// constraints 1'a = 1, T_j 1 = a, T_j' 1 = b_j) and a log-domain iterative
// Bregman projection solver for instances too large for the simplex. The
// end-to-end `wasp` operation builds the grid over pooled subset draws, forms
// the squared-distance matrices, and dispatches to a solver.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "wasp/grid.hpp"
#include "wasp/lp.hpp"
#include "wasp/measure.hpp"
#include "wasp/transport.hpp"

namespace wasp {

inline constexpr long kExactBarycenterCap = 500000;  // g*sum(s_j) + g variables

struct BarycenterSolution {
    EmpiricalMeasure measure;   // weights below 1e-12 dropped and renormalized
    Vector grid_weights;        // full untruncated weight vector over the grid
    Grid grid;                  // populated by wasp(); empty for the raw solvers
    std::vector<Matrix> plans;  // per-subset couplings (g x s_j) when retained
    double objective = 0.0;
    std::string solver;  // "exact-lp" | "entropic" | "none" (k=1 passthrough)
    long iterations = 0;
    double tol_used = 0.0;
    bool converged = true;
};

namespace detail {

inline void check_barycenter_inputs(const std::vector<CostMatrix>& costs, const std::vector<Vector>& weights) {
    require(!costs.empty(), "barycenter: need at least one cost matrix");
    require(costs.size() == weights.size(), "barycenter: one weight vector per cost matrix required");
    const Eigen::Index g = costs.front().entries.rows();
    for (size_t j = 0; j < costs.size(); ++j) {
        require(costs[j].entries.rows() == g, "barycenter: cost matrices disagree on grid size");
        require(costs[j].entries.cols() == weights[j].size(),
                "barycenter: weight length must match cost matrix columns");
        require((costs[j].entries.array() >= 0.0).all(), "barycenter: negative cost entry");
        require(weights[j].minCoeff() >= 0.0, "barycenter: negative subset weight");
        require(std::abs(weights[j].sum() - 1.0) <= 1e-8, "barycenter: subset weights must sum to 1");
    }
}

// Column oracle for the barycenter LP. Rows: [0] simplex row, [1 .. k*g] the
// row-marginal blocks (T_j 1 - a = 0), then the stacked column-marginal blocks.
struct BarycenterProblem {
    const std::vector<CostMatrix>& costs;
    int g = 0, k = 0;
    std::vector<long> tbase;   // first variable index of each T_j block
    std::vector<int> hbase;    // first column-marginal row of each subset
    long avars = 0;            // index of a_0
    long ncols = 0;
    int nrows = 0;

    explicit BarycenterProblem(const std::vector<CostMatrix>& c) : costs(c) {
        k = static_cast<int>(costs.size());
        g = static_cast<int>(costs.front().entries.rows());
        long off = 0;
        int hrow = 1 + k * g;
        for (int j = 0; j < k; ++j) {
            tbase.push_back(off);
            hbase.push_back(hrow);
            off += static_cast<long>(g) * costs[static_cast<size_t>(j)].entries.cols();
            hrow += static_cast<int>(costs[static_cast<size_t>(j)].entries.cols());
        }
        avars = off;
        ncols = off + g;
        nrows = hrow;
    }

    int rows() const { return nrows; }
    long cols() const { return ncols; }

    // T_j blocks are stored column-major (index = tbase_j + v*g + u).
    double cost(long j) const {
        if (j >= avars) return 0.0;
        int sub = subset_of(j);
        long local = j - tbase[static_cast<size_t>(sub)];
        return costs[static_cast<size_t>(sub)].entries(static_cast<int>(local % g), static_cast<int>(local / g));
    }

    void column(long j, std::vector<lp::ColumnEntry>& out) const {
        out.clear();
        if (j >= avars) {
            int u = static_cast<int>(j - avars);
            out.push_back({0, 1.0});
            for (int s = 0; s < k; ++s) out.push_back({1 + s * g + u, -1.0});
            return;
        }
        int sub = subset_of(j);
        long local = j - tbase[static_cast<size_t>(sub)];
        int u = static_cast<int>(local % g);
        int v = static_cast<int>(local / g);
        out.push_back({1 + sub * g + u, 1.0});
        out.push_back({hbase[static_cast<size_t>(sub)] + v, 1.0});
    }

    int subset_of(long j) const {
        int sub = k - 1;
        while (tbase[static_cast<size_t>(sub)] > j) --sub;
        return sub;
    }
};

inline EmpiricalMeasure measure_from_grid_weights(const Matrix& atoms, const Vector& w) {
    EmpiricalMeasure full = make_measure(atoms, w.cwiseMax(0.0));
    return truncate_weights(full, 1e-12);
}

}  // namespace detail

inline BarycenterSolution solve_barycenter_lp(const std::vector<CostMatrix>& costs,
                                              const std::vector<Vector>& subset_weights, bool keep_plans = true,
                                              long variable_cap = kExactBarycenterCap) {
    detail::check_barycenter_inputs(costs, subset_weights);
    detail::BarycenterProblem prob(costs);
    if (prob.ncols > variable_cap)
        throw numerical_error("barycenter LP has " + std::to_string(prob.ncols) +
                              " variables, above the exact cap of " + std::to_string(variable_cap) +
                              "; use the entropic solver");

    Vector b = Vector::Zero(prob.nrows);
    b[0] = 1.0;
    for (int j = 0; j < prob.k; ++j)
        b.segment(prob.hbase[static_cast<size_t>(j)], subset_weights[static_cast<size_t>(j)].size()) =
            subset_weights[static_cast<size_t>(j)];

    lp::Solution sol = lp::solve(prob, b);
    if (sol.status == lp::Status::pivot_limit)
        throw numerical_error("barycenter LP: pivot limit reached, residual " + format_double(sol.residual));
    if (sol.status == lp::Status::infeasible)
        throw numerical_error("barycenter LP: reported infeasible (should be impossible for simplex weights)");

    BarycenterSolution out;
    out.solver = "exact-lp";
    out.iterations = sol.pivots;
    out.tol_used = 1e-9;
    out.objective = sol.objective;
    out.grid_weights.resize(prob.g);
    for (int u = 0; u < prob.g; ++u) out.grid_weights[u] = sol.x[static_cast<size_t>(prob.avars + u)];

    double wsum = out.grid_weights.sum();
    if (std::abs(wsum - 1.0) > 1e-8 || out.grid_weights.minCoeff() < -1e-8)
        throw numerical_error("barycenter LP: solution weights violate the simplex (sum " + format_double(wsum) + ")");

    for (int j = 0; j < prob.k; ++j) {
        const int s = static_cast<int>(subset_weights[static_cast<size_t>(j)].size());
        Matrix T(prob.g, s);
        for (int v = 0; v < s; ++v)
            for (int u = 0; u < prob.g; ++u)
                T(u, v) = sol.x[static_cast<size_t>(prob.tbase[static_cast<size_t>(j)] + static_cast<long>(v) * prob.g + u)];
        TransportPlan plan{T, 0.0};
        detail::verify_plan_marginals(plan, out.grid_weights, subset_weights[static_cast<size_t>(j)]);
        if (keep_plans) out.plans.push_back(std::move(T));
    }

    out.measure = detail::measure_from_grid_weights(costs.front().row_atoms, out.grid_weights);
    return out;
}

inline BarycenterSolution solve_barycenter_entropic(const std::vector<CostMatrix>& costs,
                                                    const std::vector<Vector>& subset_weights, double lambda = 0.0,
                                                    long max_iter = 10000, double tol = 1e-7,
                                                    bool keep_plans = false) {
    detail::check_barycenter_inputs(costs, subset_weights);
    const int k = static_cast<int>(costs.size());
    const int g = static_cast<int>(costs.front().entries.rows());

    if (lambda <= 0.0) {
        // Default: 0.005 x median pooled cost entry.
        std::vector<double> pool;
        for (const auto& c : costs)
            pool.insert(pool.end(), c.entries.data(), c.entries.data() + c.entries.size());
        auto mid = pool.begin() + static_cast<long>(pool.size() / 2);
        std::nth_element(pool.begin(), mid, pool.end());
        double med = *mid;
        lambda = med > 0.0 ? 0.005 * med : 1.0;
    }
    require(std::isfinite(lambda) && lambda > 0.0, "entropic barycenter: lambda must be positive");

    // Scaled negative costs, kept both ways so each log-sum-exp pass runs down
    // contiguous columns.
    std::vector<Matrix> M(static_cast<size_t>(k)), Mt(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) {
        M[static_cast<size_t>(j)] = -costs[static_cast<size_t>(j)].entries / lambda;
        if (!M[static_cast<size_t>(j)].allFinite())
            throw numerical_error("entropic barycenter: cost/lambda overflows; increase lambda");
        Mt[static_cast<size_t>(j)] = M[static_cast<size_t>(j)].transpose();
    }

    std::vector<Vector> alpha(static_cast<size_t>(k), Vector::Zero(g));
    std::vector<Vector> beta(static_cast<size_t>(k));
    std::vector<Vector> logr(static_cast<size_t>(k), Vector::Zero(g));
    for (int j = 0; j < k; ++j) beta[static_cast<size_t>(j)] = Vector::Zero(subset_weights[static_cast<size_t>(j)].size());

    auto lse_col = [](const Matrix& mat, const Vector& add, int col) {
        const double* p = mat.data() + static_cast<long>(col) * mat.rows();
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < mat.rows(); ++i) mx = std::max(mx, p[i] + add[i]);
        if (!std::isfinite(mx)) return mx;
        double sum = 0.0;
        for (Eigen::Index i = 0; i < mat.rows(); ++i) sum += std::exp(p[i] + add[i] - mx);
        return mx + std::log(sum);
    };

    Vector log_a = Vector::Zero(g), a_prev = Vector::Constant(g, 1.0 / g), a(g);
    long it = 0;
    bool converged = false;
    for (it = 1; it <= max_iter; ++it) {
        for (int j = 0; j < k; ++j) {
            const auto& wj = subset_weights[static_cast<size_t>(j)];
            for (Eigen::Index v = 0; v < wj.size(); ++v) {
                double l = lse_col(M[static_cast<size_t>(j)], alpha[static_cast<size_t>(j)], static_cast<int>(v));
                if (!std::isfinite(l))
                    throw numerical_error("entropic barycenter: scaling underflow; increase lambda");
                beta[static_cast<size_t>(j)][v] = std::log(wj[v]) - l;
            }
        }
        log_a.setZero();
        for (int j = 0; j < k; ++j) {
            for (int u = 0; u < g; ++u)
                logr[static_cast<size_t>(j)][u] = lse_col(Mt[static_cast<size_t>(j)], beta[static_cast<size_t>(j)], u);
            log_a += alpha[static_cast<size_t>(j)] + logr[static_cast<size_t>(j)];
        }
        log_a /= static_cast<double>(k);
        double mx = log_a.maxCoeff();
        double norm = mx + std::log((log_a.array() - mx).exp().sum());
        log_a.array() -= norm;
        for (int j = 0; j < k; ++j) alpha[static_cast<size_t>(j)] = log_a - logr[static_cast<size_t>(j)];

        a = log_a.array().exp();
        if ((a - a_prev).lpNorm<1>() < tol) {
            converged = true;
            break;
        }
        a_prev = a;
    }
    if (it > max_iter) it = max_iter;
    a = log_a.array().exp();
    a /= a.sum();

    // Materialize plans and round each one onto the exact marginals (a, b_j);
    // rounded plans are feasible for the LP, so this objective can never fall
    // below the exact optimum.
    BarycenterSolution out;
    out.solver = "entropic";
    out.iterations = it;
    out.tol_used = tol;
    out.converged = converged;
    out.grid_weights = a;
    out.objective = 0.0;
    for (int j = 0; j < k; ++j) {
        const auto& wj = subset_weights[static_cast<size_t>(j)];
        const int s = static_cast<int>(wj.size());
        Matrix P(g, s);
        for (int v = 0; v < s; ++v)
            for (int u = 0; u < g; ++u)
                P(u, v) = std::exp(alpha[static_cast<size_t>(j)][u] + M[static_cast<size_t>(j)](u, v) +
                                   beta[static_cast<size_t>(j)][v]);
        // Round: shrink rows, then columns, then patch the deficit rank-1.
        Vector rsum = P.rowwise().sum();
        for (int u = 0; u < g; ++u) {
            double f = rsum[u] > 0.0 ? std::min(1.0, a[u] / rsum[u]) : 0.0;
            P.row(u) *= f;
        }
        Vector csum = P.colwise().sum();
        for (int v = 0; v < s; ++v) {
            double f = csum[v] > 0.0 ? std::min(1.0, wj[v] / csum[v]) : 0.0;
            P.col(v) *= f;
        }
        Vector er = a - P.rowwise().sum();
        Vector ec = wj - P.colwise().sum().transpose();
        double mass = er.sum();
        if (mass > 1e-300) P += (er / mass) * ec.transpose();
        out.objective += (P.array() * costs[static_cast<size_t>(j)].entries.array()).sum();
        if (keep_plans) out.plans.push_back(std::move(P));
    }
    out.measure = detail::measure_from_grid_weights(costs.front().row_atoms, a);
    return out;
}

enum class BarycenterSolver { auto_select, exact_lp, entropic };

struct WaspOptions {
    double eps = 0.0;              // 0 = auto: (1/40) of the largest pooled range
    double padding = 0.0;          // fraction of range added per side
    std::vector<int> grid_counts;  // nonempty = per-dimension counts instead of eps
    BarycenterSolver solver = BarycenterSolver::auto_select;
    double lambda = 0.0;  // entropic; 0 = 0.005 x median cost
    long max_iter = 10000;
    double tol = 1e-7;
    long exact_cap = kExactBarycenterCap;
    long grid_cap = kGridAtomCap;
    bool keep_plans = false;
};

using RowFunctional = std::function<Vector(const Vector&)>;

inline std::vector<Matrix> apply_rowwise(const std::vector<Matrix>& subset_draws, const RowFunctional& f) {
    if (!f) return subset_draws;
    std::vector<Matrix> out;
    out.reserve(subset_draws.size());
    for (const Matrix& d : subset_draws) {
        Vector probe = f(d.row(0).transpose());
        Matrix m(d.rows(), probe.size());
        m.row(0) = probe.transpose();
        for (Eigen::Index i = 1; i < d.rows(); ++i) {
            Vector fi = f(d.row(i).transpose());
            require(fi.size() == probe.size(), "wasp: functional output dimension varies across draws");
            m.row(i) = fi.transpose();
        }
        out.push_back(std::move(m));
    }
    return out;
}

inline BarycenterSolution wasp(const std::vector<Matrix>& subset_draws, const WaspOptions& opt = {},
                               const RowFunctional& f = nullptr) {
    require(!subset_draws.empty(), "wasp: need at least one subset");
    std::vector<Matrix> draws = apply_rowwise(subset_draws, f);

    if (draws.size() == 1) {
        // One subset: its own empirical measure, on its own atoms.
        BarycenterSolution out;
        out.measure = make_measure(draws.front());
        out.grid_weights = out.measure.weights;
        out.solver = "none";
        return out;
    }

    Grid grid = opt.grid_counts.empty()
                    ? build_grid(draws, opt.eps > 0.0 ? opt.eps : default_mesh(draws, opt.padding), opt.padding,
                                 opt.grid_cap)
                    : build_grid_counts(draws, opt.grid_counts, opt.padding, opt.grid_cap);

    const int k = static_cast<int>(draws.size());
    std::vector<CostMatrix> costs(static_cast<size_t>(k));
    std::vector<Vector> weights(static_cast<size_t>(k));
    {
        // One task per subset; per-slot writes keep the result independent of
        // scheduling.
        std::atomic<int> next{0};
        auto work = [&] {
            for (int j = next.fetch_add(1); j < k; j = next.fetch_add(1)) {
                costs[static_cast<size_t>(j)] = squared_cost(grid.atoms, draws[static_cast<size_t>(j)]);
                weights[static_cast<size_t>(j)] = Vector::Constant(
                    draws[static_cast<size_t>(j)].rows(), 1.0 / static_cast<double>(draws[static_cast<size_t>(j)].rows()));
            }
        };
        unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        unsigned nthreads = std::min<unsigned>(hw, static_cast<unsigned>(k));
        if (nthreads <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
    }

    long total_draws = 0;
    for (const auto& d : draws) total_draws += d.rows();
    long exact_vars = grid.size() * total_draws + grid.size();
    bool use_exact = opt.solver == BarycenterSolver::exact_lp ||
                     (opt.solver == BarycenterSolver::auto_select && exact_vars <= opt.exact_cap);

    BarycenterSolution out = use_exact
                                 ? solve_barycenter_lp(costs, weights, opt.keep_plans, opt.exact_cap)
                                 : solve_barycenter_entropic(costs, weights, opt.lambda, opt.max_iter, opt.tol,
                                                             opt.keep_plans);
    out.grid = std::move(grid);
    return out;
}

}  // namespace wasp

// Dense revised simplex for equality-form LPs: min c'x s.t. Ax = b, x >= 0.
//
// A is supplied through a column oracle (few nonzeros per column, far more
// columns than rows -- the shape of transport and barycenter programs), so the
// constraint matrix is never materialized. Two phases with artificial
// variables; artificials may stay basic at zero, which is how redundant
// equality rows (every transport polytope has at least one) are absorbed
// without rank preprocessing. The basis inverse is kept explicitly and updated
// in product form each pivot. Entering column: most negative reduced cost,
// switching to lowest-index (Bland) selection after a run of degenerate pivots
// so cycling cannot occur; leaving row ties always break toward the lowest
// basis variable index.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "wasp/common.hpp"

namespace wasp::lp {

struct ColumnEntry {
    int row;
    double val;
};

struct Options {
    double feas_tol = 1e-9;
    long max_pivots = 0;    // 0 = auto from problem size
    int stall_limit = 500;  // degenerate pivots tolerated before Bland mode
};

enum class Status { optimal, infeasible, pivot_limit };

struct Solution {
    Status status = Status::optimal;
    double objective = 0.0;
    std::vector<double> x;  // length cols(); zeros for nonbasic variables
    long pivots = 0;
    double residual = 0.0;  // ||Ax - b||_inf of the returned point
};

// Prob interface: int rows(); long cols(); double cost(long j);
// void column(long j, std::vector<ColumnEntry>& out).
template <class Prob>
class RevisedSimplex {
  public:
    RevisedSimplex(const Prob& prob, Vector b, Options opt) : prob_(prob), b_(std::move(b)), opt_(opt) {
        m_ = prob_.rows();
        n_ = prob_.cols();
        require(b_.size() == m_, "simplex: b length must equal row count");
        for (Eigen::Index i = 0; i < m_; ++i)
            require(b_[i] >= 0.0, "simplex: negative right-hand side (row " + std::to_string(i) + ")");
        if (opt_.max_pivots <= 0) opt_.max_pivots = 2000 + 50L * m_ + 2L * n_;
    }

    Solution run() {
        binv_ = Matrix::Identity(m_, m_);
        basis_.resize(m_);
        is_basic_.assign(static_cast<size_t>(n_), 0);
        for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;  // artificial start
        xb_ = b_;

        Solution sol;
        if (!iterate(/*phase1=*/true, sol)) return sol;

        double infeas = 0.0;
        for (int i = 0; i < m_; ++i)
            if (basis_[i] >= n_) infeas += std::max(xb_[i], 0.0);
        if (infeas > opt_.feas_tol * (1.0 + b_.template lpNorm<1>())) {
            sol.status = Status::infeasible;
            sol.objective = infeas;
            return sol;
        }

        refresh_xb();
        if (!iterate(/*phase1=*/false, sol)) return sol;

        extract(sol);
        if (sol.residual > 100.0 * opt_.feas_tol) {
            // Accumulated inverse drift: refactorize once and re-extract.
            refactorize();
            refresh_xb();
            extract(sol);
        }
        sol.status = Status::optimal;
        return sol;
    }

  private:
    bool iterate(bool phase1, Solution& sol) {
        std::vector<ColumnEntry> col;
        Vector y(m_), w(m_);
        int stall = 0;
        bool bland = false;

        while (true) {
            if (sol.pivots >= opt_.max_pivots) {
                extract(sol);
                sol.status = Status::pivot_limit;
                return false;
            }

            // Duals for the current basis costs.
            Vector cb(m_);
            for (int i = 0; i < m_; ++i) {
                long v = basis_[i];
                cb[i] = phase1 ? (v >= n_ ? 1.0 : 0.0) : (v >= n_ ? 0.0 : prob_.cost(v));
            }
            y.noalias() = binv_.transpose() * cb;

            long enter = -1;
            double best_rc = 0.0;
            for (long j = 0; j < n_; ++j) {
                if (is_basic_[static_cast<size_t>(j)]) continue;
                double cj = phase1 ? 0.0 : prob_.cost(j);
                prob_.column(j, col);
                double rc = cj;
                for (const auto& e : col) rc -= y[e.row] * e.val;
                if (rc < -opt_.feas_tol * (1.0 + std::abs(cj))) {
                    if (bland) {
                        enter = j;
                        break;
                    }
                    if (rc < best_rc) {
                        best_rc = rc;
                        enter = j;
                    }
                }
            }
            if (enter < 0) return true;  // phase optimal

            prob_.column(enter, col);
            w.setZero();
            for (const auto& e : col) w += e.val * binv_.col(e.row);

            // Two-pass ratio test. Basic artificials must never increase: in
            // phase 2 a negative direction entry on an artificial row forces
            // it out at theta = 0 instead of letting infeasibility back in.
            // Among rows within tolerance of the minimum ratio, leave on the
            // largest direction entry -- tiny pivot elements are what corrode
            // an explicitly maintained inverse.
            const double ptol = 1e-10;
            double theta = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m_; ++i) {
                if (w[i] > ptol) {
                    theta = std::min(theta, std::max(xb_[i], 0.0) / w[i]);
                } else if (!phase1 && basis_[i] >= n_ && w[i] < -ptol) {
                    theta = 0.0;
                }
            }
            if (!std::isfinite(theta)) throw numerical_error("simplex: unbounded direction (invalid instance)");
            int leave = -1;
            double best_piv = 0.0;
            const double slack = 1e-9 * (1.0 + theta);
            for (int i = 0; i < m_; ++i) {
                bool eligible = (w[i] > ptol && std::max(xb_[i], 0.0) / w[i] <= theta + slack) ||
                                (!phase1 && basis_[i] >= n_ && w[i] < -ptol && theta <= slack);
                if (!eligible) continue;
                double piv = std::abs(w[i]);
                // Prefer kicking artificials out of the basis on ties.
                if (basis_[i] >= n_) piv *= 1e6;
                if (piv > best_piv) {
                    best_piv = piv;
                    leave = i;
                }
            }
            if (leave < 0) throw numerical_error("simplex: unbounded direction (invalid instance)");
            theta = w[leave] > ptol ? std::max(xb_[leave], 0.0) / w[leave] : 0.0;

            // Pivot: update basic values, basis bookkeeping, inverse.
            if (theta != 0.0) xb_ -= theta * w;
            xb_[leave] = theta;
            long old = basis_[leave];
            if (old < n_) is_basic_[static_cast<size_t>(old)] = 0;
            basis_[leave] = enter;
            is_basic_[static_cast<size_t>(enter)] = 1;

            double piv = w[leave];
            binv_.row(leave) /= piv;
            Vector wl = binv_.row(leave).transpose();
            for (int i = 0; i < m_; ++i) {
                if (i == leave) continue;
                double f = w[i];
                if (f != 0.0) binv_.row(i).noalias() -= f * wl.transpose();
            }

            ++sol.pivots;
            if (sol.pivots % 1024 == 0) {
                // A fresh inverse every so often keeps product-form drift from
                // ever steering the pivot choice.
                refactorize();
                refresh_xb();
            }
            if (trace_ && sol.pivots % 2000 == 0) {
                double zt = 0.0;
                for (int i = 0; i < m_; ++i) {
                    long v = basis_[i];
                    zt += (phase1 ? (v >= n_ ? 1.0 : 0.0) : (v >= n_ ? 0.0 : prob_.cost(v))) * xb_[i];
                }
                std::fprintf(stderr, "[lp] phase%d pivots=%ld z=%.9g stall=%d bland=%d\n", phase1 ? 1 : 2,
                             sol.pivots, zt, stall, bland ? 1 : 0);
            }

            // A nondegenerate step makes real progress; a long degenerate run
            // switches to lowest-index (Bland) selection, which cannot cycle.
            if (theta > 1e-12) {
                stall = 0;
                bland = false;
            } else if (++stall > opt_.stall_limit) {
                bland = true;
            }
        }
    }

    void refresh_xb() {
        xb_.noalias() = binv_ * b_;
        for (int i = 0; i < m_; ++i)
            if (xb_[i] < 0.0 && xb_[i] > -opt_.feas_tol) xb_[i] = 0.0;
    }

    void refactorize() {
        Matrix B = Matrix::Zero(m_, m_);
        std::vector<ColumnEntry> col;
        for (int i = 0; i < m_; ++i) {
            long v = basis_[i];
            if (v >= n_) {
                B(static_cast<int>(v - n_), i) = 1.0;
            } else {
                prob_.column(v, col);
                for (const auto& e : col) B(e.row, i) = e.val;
            }
        }
        binv_ = Eigen::PartialPivLU<Matrix>(B).inverse();
    }

    void extract(Solution& sol) {
        sol.x.assign(static_cast<size_t>(n_), 0.0);
        sol.objective = 0.0;
        Vector resid = -b_;
        std::vector<ColumnEntry> col;
        for (int i = 0; i < m_; ++i) {
            double v = std::max(xb_[i], 0.0);
            long var = basis_[i];
            if (var < n_) {
                sol.x[static_cast<size_t>(var)] = v;
                sol.objective += prob_.cost(var) * v;
                prob_.column(var, col);
                for (const auto& e : col) resid[e.row] += e.val * v;
            } else {
                resid[var - n_] += v;
            }
        }
        sol.residual = resid.template lpNorm<Eigen::Infinity>();
    }

    const Prob& prob_;
    Vector b_;
    Options opt_;
    bool trace_ = std::getenv("WASP_LP_TRACE") != nullptr;
    int m_ = 0;
    long n_ = 0;
    Matrix binv_;
    Vector xb_;
    std::vector<long> basis_;
    std::vector<char> is_basic_;
};

template <class Prob>
Solution solve(const Prob& prob, const Vector& b, const Options& opt = {}) {
    RevisedSimplex<Prob> s(prob, b, opt);
    return s.run();
}

}  // namespace wasp::lp

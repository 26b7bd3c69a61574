// Empirical probability measures on R^q, squared-Euclidean cost matrices,
// weighted moments, and the w,x1,...,xq CSV exchange format.
#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "wasp/common.hpp"

namespace wasp {

inline constexpr double kWeightSumTol = 1e-10;

struct EmpiricalMeasure {
    Matrix atoms;    // s x q
    Vector weights;  // length s, nonnegative, unit sum

    Eigen::Index size() const { return atoms.rows(); }
    Eigen::Index dim() const { return atoms.cols(); }
};

inline EmpiricalMeasure make_measure(const Matrix& atoms, const Vector& weights) {
    require(atoms.rows() >= 1, "make_measure: empty atom set");
    require(atoms.cols() >= 1, "make_measure: atoms must have at least one coordinate");
    require(atoms.allFinite(), "make_measure: non-finite atom coordinate");
    require(weights.size() == atoms.rows(), "make_measure: weight count must match atom count");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        require(std::isfinite(weights[i]), "make_measure: non-finite weight");
        require(weights[i] >= 0.0, "make_measure: negative weight");
        sum += weights[i];
    }
    require(sum > 0.0, "make_measure: weights sum to zero");
    EmpiricalMeasure m;
    m.atoms = atoms;
    m.weights = weights / sum;
    return m;
}

inline EmpiricalMeasure make_measure(const Matrix& atoms) {
    require(atoms.rows() >= 1, "make_measure: empty atom set");
    return make_measure(atoms, Vector::Constant(atoms.rows(), 1.0 / static_cast<double>(atoms.rows())));
}

struct CostMatrix {
    Matrix entries;    // g x s, squared Euclidean distances
    Matrix row_atoms;  // g x q
    Matrix col_atoms;  // s x q
};

inline CostMatrix squared_cost(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), "squared_cost: dimension mismatch");
    CostMatrix c;
    c.entries.resize(a.rows(), b.rows());
    for (Eigen::Index u = 0; u < a.rows(); ++u)
        for (Eigen::Index v = 0; v < b.rows(); ++v) c.entries(u, v) = (a.row(u) - b.row(v)).squaredNorm();
    c.row_atoms = a;
    c.col_atoms = b;
    return c;
}

inline CostMatrix squared_cost(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    return squared_cost(a.atoms, b.atoms);
}

inline std::pair<Vector, Matrix> moments(const EmpiricalMeasure& m) {
    Vector mean = m.atoms.transpose() * m.weights;
    Matrix cov = Matrix::Zero(m.dim(), m.dim());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        Vector d = m.atoms.row(i).transpose() - mean;
        cov += m.weights[i] * d * d.transpose();
    }
    return {mean, cov};
}

// Drop weights below `floor` and renormalize; stabilizes downstream density work.
inline EmpiricalMeasure truncate_weights(const EmpiricalMeasure& m, double floor = 1e-12) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m.size(); ++i)
        if (m.weights[i] >= floor) keep.push_back(i);
    if (keep.empty() || static_cast<Eigen::Index>(keep.size()) == m.size()) {
        EmpiricalMeasure out = m;
        out.weights /= out.weights.sum();
        return out;
    }
    Matrix atoms(static_cast<Eigen::Index>(keep.size()), m.dim());
    Vector w(static_cast<Eigen::Index>(keep.size()));
    for (size_t i = 0; i < keep.size(); ++i) {
        atoms.row(static_cast<Eigen::Index>(i)) = m.atoms.row(keep[i]);
        w[static_cast<Eigen::Index>(i)] = m.weights[keep[i]];
    }
    return make_measure(atoms, w);
}

inline void write_measure_csv(const std::string& path, const EmpiricalMeasure& m) {
    std::vector<std::string> header{"w"};
    for (Eigen::Index c = 0; c < m.dim(); ++c) header.push_back("x" + std::to_string(c + 1));
    Matrix table(m.size(), m.dim() + 1);
    table.col(0) = m.weights;
    table.rightCols(m.dim()) = m.atoms;
    write_csv(path, header, table);
}

inline EmpiricalMeasure read_measure_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    require(t.header.size() >= 2 && t.header[0] == "w",
            "measure csv must have header w,x1,...,xq: " + path);
    require(t.values.rows() >= 1, "measure csv has no atoms: " + path);
    return make_measure(t.values.rightCols(t.values.cols() - 1), t.values.col(0));
}

}  // namespace wasp

// Pushforward of posterior draw sets through named functionals. A Functional
// binds to a draw set's parameter names once (validating the layout), then
// maps each draw row to its output vector.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "wasp/models/common.hpp"

namespace wasp {

struct Functional {
    std::string name;
    int out_dim = 1;  // -1: output matches input (passthrough)
    // Validates the layout and returns the row map; throws validation_error on
    // a layout mismatch.
    std::function<std::function<Vector(const Vector&)>(const std::vector<std::string>&)> bind;
};

namespace detail {

inline long column_index(const std::vector<std::string>& names, const std::string& want) {
    auto it = std::find(names.begin(), names.end(), want);
    require(it != names.end(), "functional: draw set has no parameter named '" + want + "'");
    return it - names.begin();
}

inline int count_prefixed(const std::vector<std::string>& names, const std::string& prefix) {
    int c = 0;
    for (const auto& n : names)
        if (n.rfind(prefix, 0) == 0) ++c;
    return c;
}

}  // namespace detail

inline Functional identity_functional() {
    Functional f;
    f.name = "identity";
    f.out_dim = -1;
    f.bind = [](const std::vector<std::string>&) {
        return [](const Vector& row) { return row; };
    };
    return f;
}

inline Functional select_functional(const std::vector<std::string>& wanted) {
    require(!wanted.empty(), "select functional: need at least one parameter name");
    Functional f;
    f.name = "select(";
    for (size_t t = 0; t < wanted.size(); ++t) f.name += (t ? "," : "") + wanted[t];
    f.name += ")";
    f.out_dim = static_cast<int>(wanted.size());
    f.bind = [wanted](const std::vector<std::string>& names) {
        std::vector<long> idx;
        for (const auto& w : wanted) idx.push_back(detail::column_index(names, w));
        return [idx](const Vector& row) {
            Vector out(static_cast<Eigen::Index>(idx.size()));
            for (size_t t = 0; t < idx.size(); ++t) out[static_cast<Eigen::Index>(t)] = row[idx[t]];
            return out;
        };
    };
    return f;
}

// Within-component correlation of a mixture draw:
// rho_l = Sigma_l[1,2] / sqrt(Sigma_l[1,1] * Sigma_l[2,2]).
inline Functional correlation_functional(int l) {
    require(l >= 1, "correlation functional: component index is 1-based");
    Functional f;
    f.name = "rho" + std::to_string(l);
    f.out_dim = 1;
    f.bind = [l, name = f.name](const std::vector<std::string>& names) {
        std::string tag = "Sigma" + std::to_string(l) + "_";
        long i11 = detail::column_index(names, tag + "11");
        long i12 = detail::column_index(names, tag + "12");
        long i22 = detail::column_index(names, tag + "22");
        return [i11, i12, i22](const Vector& row) {
            Vector out(1);
            out[0] = row[i12] / std::sqrt(row[i11] * row[i22]);
            return out;
        };
    };
    return f;
}

// Mixture density along the diagonal: g(x) = sum_l pi_l N_2((x,x) | mu_l, Sigma_l).
inline Functional mixture_density_functional(double x) {
    Functional f;
    f.name = "gmix";
    f.out_dim = 1;
    f.bind = [x](const std::vector<std::string>& names) {
        int L = detail::count_prefixed(names, "pi");
        require(L >= 1, "mixture density functional: no mixture-weight columns (pi1, ...)");
        int p = detail::count_prefixed(names, "mu1_");
        require(p == 2, "mixture density functional: needs 2-dimensional components");
        struct Comp {
            long pi, m1, m2, s11, s12, s22;
        };
        std::vector<Comp> comps;
        for (int h = 1; h <= L; ++h) {
            std::string hs = std::to_string(h);
            comps.push_back({detail::column_index(names, "pi" + hs),
                             detail::column_index(names, "mu" + hs + "_1"),
                             detail::column_index(names, "mu" + hs + "_2"),
                             detail::column_index(names, "Sigma" + hs + "_11"),
                             detail::column_index(names, "Sigma" + hs + "_12"),
                             detail::column_index(names, "Sigma" + hs + "_22")});
        }
        return [x, comps](const Vector& row) {
            double g = 0.0;
            for (const auto& c : comps) {
                double d1 = x - row[c.m1], d2 = x - row[c.m2];
                double s11 = row[c.s11], s12 = row[c.s12], s22 = row[c.s22];
                double det = std::max(s11 * s22 - s12 * s12, 1e-300);
                double qform = (d1 * d1 * s22 - 2.0 * d1 * d2 * s12 + d2 * d2 * s11) / det;
                g += row[c.pi] / (2.0 * M_PI * std::sqrt(det)) * std::exp(-0.5 * qform);
            }
            Vector out(1);
            out[0] = g;
            return out;
        };
    };
    return f;
}

// Marginal category probability of a stick-breaking mixture over categorical
// dimensions: pr(x_j = c) = sum_h nu_h psi^(j)_{hc}, with the truncated stick
// weights renormalized so the marginal sums to one over c.
inline Functional parafac_marginal_functional(int j, int c) {
    require(j >= 1 && c >= 1, "parafac marginal functional: indices are 1-based");
    Functional f;
    f.name = "pr_x" + std::to_string(j) + "_" + std::to_string(c);
    f.out_dim = 1;
    f.bind = [j, c](const std::vector<std::string>& names) {
        int H = detail::count_prefixed(names, "V");
        require(H >= 1, "parafac marginal functional: no stick columns (V1, ...)");
        std::vector<long> vIdx, psiIdx;
        for (int h = 1; h <= H; ++h) {
            vIdx.push_back(detail::column_index(names, "V" + std::to_string(h)));
            psiIdx.push_back(detail::column_index(
                names, "psi" + std::to_string(j) + "_" + std::to_string(h) + "_" + std::to_string(c)));
        }
        return [vIdx, psiIdx](const Vector& row) {
            double rem = 1.0, total = 0.0, acc = 0.0;
            for (size_t h = 0; h < vIdx.size(); ++h) {
                double nu = row[vIdx[h]] * rem;
                rem *= 1.0 - row[vIdx[h]];
                total += nu;
                acc += nu * row[psiIdx[h]];
            }
            Vector out(1);
            out[0] = acc / total;
            return out;
        };
    };
    return f;
}

// Parses "identity", "correlation(2)", "mixture_density(1.5)",
// "parafac_marginal(2,1)", or "select(name1,name2)".
inline Functional make_functional(const std::string& spec_str) {
    std::string s = spec_str;
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); }), s.end());
    auto open = s.find('(');
    std::string head = open == std::string::npos ? s : s.substr(0, open);
    std::vector<std::string> args;
    if (open != std::string::npos) {
        require(s.back() == ')', "functional spec: missing closing parenthesis in '" + spec_str + "'");
        std::string inner = s.substr(open + 1, s.size() - open - 2);
        if (!inner.empty()) args = split_csv_line(inner);
    }
    if (head == "identity") return identity_functional();
    if (head == "select") return select_functional(args);
    if (head == "correlation") {
        require(args.size() == 1, "functional spec: correlation takes one component index");
        return correlation_functional(static_cast<int>(parse_double(args[0])));
    }
    if (head == "mixture_density") {
        require(args.size() == 1, "functional spec: mixture_density takes one evaluation point");
        return mixture_density_functional(parse_double(args[0]));
    }
    if (head == "parafac_marginal") {
        require(args.size() == 2, "functional spec: parafac_marginal takes dimension and category");
        return parafac_marginal_functional(static_cast<int>(parse_double(args[0])),
                                           static_cast<int>(parse_double(args[1])));
    }
    throw validation_error("functional spec: unknown functional '" + spec_str + "'");
}

inline DrawSet pushforward(const DrawSet& draws, const Functional& f) {
    require(static_cast<bool>(f.bind), "pushforward: functional has no evaluation rule");
    auto row_fn = f.bind(draws.names);
    DrawSet out;
    out.prov = draws.prov;
    out.prov.functional = f.name;
    if (f.out_dim < 0) {
        out.draws = draws.draws;
        out.names = draws.names;
        return out;
    }
    out.draws.resize(draws.draws.rows(), f.out_dim);
    for (long s = 0; s < draws.draws.rows(); ++s) {
        Vector v = row_fn(draws.draws.row(s).transpose());
        require(v.size() == f.out_dim, "pushforward: functional output dimension mismatch");
        out.draws.row(s) = v.transpose();
    }
    if (f.out_dim == 1) {
        out.names = {f.name};
    } else {
        for (int t = 1; t <= f.out_dim; ++t) out.names.push_back(f.name + "_" + std::to_string(t));
    }
    return out;
}

// Type-7 (linear interpolation) sample quantile.
inline double quantile_type7(std::vector<double> v, double q) {
    require(!v.empty(), "quantile: empty sample");
    require(q >= 0.0 && q <= 1.0, "quantile: level must be in [0,1]");
    std::sort(v.begin(), v.end());
    double h = (static_cast<double>(v.size()) - 1.0) * q;
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

inline Vector linspace(double a, double b, int n) {
    require(n >= 1, "linspace: need at least one point");
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = n == 1 ? a : a + (b - a) * i / (n - 1.0);
    return x;
}

struct CredibleBand {
    Vector x;
    Vector lo;
    Vector hi;
};

// Pointwise band of a scalar x-indexed functional family over a grid
// (default levels give a 90% band).
template <typename MakeFunctional>
CredibleBand pointwise_band(const DrawSet& draws, const Vector& xs, MakeFunctional make_f, double q_lo = 0.05,
                            double q_hi = 0.95) {
    CredibleBand band;
    band.x = xs;
    band.lo.resize(xs.size());
    band.hi.resize(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
        DrawSet g = pushforward(draws, make_f(xs[i]));
        std::vector<double> vals(g.draws.data(), g.draws.data() + g.draws.rows());
        band.lo[i] = quantile_type7(vals, q_lo);
        band.hi[i] = quantile_type7(vals, q_hi);
    }
    return band;
}

}  // namespace wasp

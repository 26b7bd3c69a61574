// Chain settings, draw-set provenance, the draws CSV + manifest JSON exchange
// format, and the stick-breaking conditionals shared by the two truncated
// Dirichlet-process samplers.
#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wasp/common.hpp"
#include "wasp/rng.hpp"

namespace wasp {

using json = nlohmann::ordered_json;

struct ChainSettings {
    long iterations = 10000;
    long burn_in = 5000;
    int thin = 5;

    long draw_count() const { return (iterations - burn_in) / thin; }
    void validate() const {
        require(iterations > 0, "chain: iterations must be positive");
        require(burn_in >= 0 && burn_in < iterations, "chain: burn-in must be in [0, iterations)");
        require(thin >= 1, "chain: thin must be >= 1");
        require(draw_count() >= 1, "chain: settings yield no draws");
    }
};

struct Provenance {
    std::string model;
    int subset_id = 0;
    double gamma = 1.0;
    uint64_t seed = 0;
    ChainSettings chain;
    long m = 0;  // shard rows
    int k = 1;
    std::optional<double> acceptance_rate;
    std::string functional;     // set by pushforward
    std::string rng = "splitmix64";
};

struct DrawSet {
    Matrix draws;  // S x p
    std::vector<std::string> names;
    Provenance prov;

    long S() const { return draws.rows(); }
    int column(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw validation_error("draw set has no parameter named '" + name + "'");
    }
};

inline json manifest_json(const Provenance& p) {
    json j;
    j["model"] = p.model;
    j["subset_id"] = p.subset_id;
    j["gamma"] = p.gamma;
    j["seed"] = p.seed;
    j["iterations"] = p.chain.iterations;
    j["burn_in"] = p.chain.burn_in;
    j["thin"] = p.chain.thin;
    j["m"] = p.m;
    j["k"] = p.k;
    if (p.acceptance_rate) j["acceptance_rate"] = *p.acceptance_rate;
    if (!p.functional.empty()) j["functional"] = p.functional;
    j["rng"] = p.rng;
    return j;
}

inline void write_draws(const std::string& csv_path, const std::string& manifest_path, const DrawSet& d) {
    write_csv(csv_path, d.names, d.draws);
    std::ofstream out(manifest_path);
    require(out.good(), "cannot open file for writing: " + manifest_path);
    out << manifest_json(d.prov).dump(2) << "\n";
}

inline DrawSet read_draws(const std::string& csv_path, const std::string& manifest_path = "") {
    CsvTable t = read_csv(csv_path);
    DrawSet d;
    d.names = t.header;
    d.draws = std::move(t.values);
    require(d.draws.rows() >= 1, "draw csv has no rows: " + csv_path);
    if (!manifest_path.empty()) {
        std::ifstream in(manifest_path);
        require(in.good(), "cannot open manifest: " + manifest_path);
        json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
        require(!j.is_discarded(), "malformed manifest json: " + manifest_path);
        d.prov.model = j.value("model", "");
        d.prov.subset_id = j.value("subset_id", 0);
        d.prov.gamma = j.value("gamma", 1.0);
        d.prov.seed = j.value("seed", static_cast<uint64_t>(0));
        d.prov.chain.iterations = j.value("iterations", static_cast<long>(0));
        d.prov.chain.burn_in = j.value("burn_in", static_cast<long>(0));
        d.prov.chain.thin = j.value("thin", 1);
        d.prov.m = j.value("m", static_cast<long>(0));
        d.prov.k = j.value("k", 1);
        if (j.contains("acceptance_rate")) d.prov.acceptance_rate = j["acceptance_rate"].get<double>();
        d.prov.functional = j.value("functional", "");
        d.prov.rng = j.value("rng", "");
    }
    return d;
}

// One shard of data; each model reads the member it needs.
struct Dataset {
    Matrix X;     // logistic design / gmm rows
    Vector y;     // logistic response / dpm scalar data
    IntMatrix C;  // parafac categories, values 1..d_q

    long rows() const {
        if (X.rows() > 0) return X.rows();
        if (C.rows() > 0) return C.rows();
        return y.size();
    }
    Dataset take(const std::vector<int>& idx) const {
        Dataset out;
        if (X.rows() > 0) {
            out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
            for (size_t i = 0; i < idx.size(); ++i) out.X.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
        }
        if (y.size() > 0) {
            out.y.resize(static_cast<Eigen::Index>(idx.size()));
            for (size_t i = 0; i < idx.size(); ++i) out.y[static_cast<Eigen::Index>(i)] = y[idx[i]];
        }
        if (C.rows() > 0) {
            out.C.resize(static_cast<Eigen::Index>(idx.size()), C.cols());
            for (size_t i = 0; i < idx.size(); ++i) out.C.row(static_cast<Eigen::Index>(i)) = C.row(idx[i]);
        }
        return out;
    }
};

// Tempered stick-breaking conditionals (shared by the density and parafac
// samplers): V_h | rest ~ Beta(1 + gamma*#{z=h}, alpha + gamma*#{z>h}) and
// alpha | rest ~ Gamma(a_alpha + l*, b_alpha - sum log(1-V_h)).
inline std::pair<double, double> stick_v_conditional(double count_eq, double count_gt, double gamma, double alpha) {
    return {1.0 + gamma * count_eq, alpha + gamma * count_gt};
}

inline std::pair<double, double> stick_alpha_conditional(int lstar, double sum_log1mv, double a_alpha,
                                                         double b_alpha) {
    return {a_alpha + static_cast<double>(lstar), b_alpha - sum_log1mv};
}

inline void stick_weights(const Vector& V, Vector& nu) {
    nu.resize(V.size());
    double rem = 1.0;
    for (Eigen::Index h = 0; h < V.size(); ++h) {
        nu[h] = V[h] * rem;
        rem *= (1.0 - V[h]);
    }
}

}  // namespace wasp

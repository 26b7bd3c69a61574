// Command-line front end for the WASP pipeline: partition a dataset, sample
// tempered subset posteriors, combine them through a Wasserstein-2 barycenter,
// score accuracy against a reference, and run full configured experiments.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wasp/wasp.hpp"

namespace {

using wasp::json;

wasp::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    wasp::require(in.good(), "cannot open file: " + path);
    return wasp::json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    wasp::require(out.good(), "cannot open file for writing: " + path);
    out << text;
}

// Accepts either a measure CSV (header w,x1,...) or a plain draw CSV, which is
// turned into a uniform empirical measure.
wasp::EmpiricalMeasure load_measure_or_draws(const std::string& path) {
    wasp::CsvTable t = wasp::read_csv(path);
    if (!t.header.empty() && t.header[0] == "w") return wasp::read_measure_csv(path);
    return wasp::make_measure(t.values);
}

json grid_json(const wasp::KdeGrid& g) {
    json j;
    j["lo"] = std::vector<double>(g.lo.data(), g.lo.data() + g.lo.size());
    j["hi"] = std::vector<double>(g.hi.data(), g.hi.data() + g.hi.size());
    j["bins"] = g.n;
    return j;
}

std::vector<double> to_std(const wasp::Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

struct CombineFlags {
    double eps = 0.0;
    std::vector<int> grid_counts;
    std::string solver = "auto";
    double lambda = 0.0;
    long max_iter = 10000;
    double tol = 1e-7;

    void attach(CLI::App* cmd) {
        cmd->add_option("--eps", eps, "grid mesh (0 = 1/40 of the largest pooled range)");
        cmd->add_option("--grid-count", grid_counts, "atoms per dimension (overrides --eps)");
        cmd->add_option("--solver", solver, "auto | exact | entropic")
            ->check(CLI::IsMember({"auto", "exact", "entropic"}));
        cmd->add_option("--lambda", lambda, "entropic regularization (0 = 0.005 x median cost)");
        cmd->add_option("--max-iter", max_iter, "entropic iteration cap");
        cmd->add_option("--tol", tol, "entropic marginal tolerance");
    }

    wasp::WaspOptions options() const {
        wasp::WaspOptions opt;
        opt.eps = eps;
        opt.grid_counts = grid_counts;
        opt.solver = wasp::parse_solver(solver);
        opt.lambda = lambda;
        opt.max_iter = max_iter;
        opt.tol = tol;
        return opt;
    }
};

struct ChainFlags {
    long iterations = 10000;
    long burn_in = 5000;
    long thin = 5;

    void attach(CLI::App* cmd) {
        cmd->add_option("--iterations", iterations, "MCMC sweeps");
        cmd->add_option("--burn-in", burn_in, "sweeps discarded before retention");
        cmd->add_option("--thin", thin, "keep every thin-th sweep after burn-in");
    }

    wasp::ChainSettings settings() const {
        wasp::ChainSettings c;
        c.iterations = iterations;
        c.burn_in = burn_in;
        c.thin = thin;
        c.validate();
        return c;
    }
};

int run_partition(const std::string& data_path, int k, const std::string& strategy, uint64_t seed,
                  int clusters, const std::string& group_column, const std::string& out_path) {
    wasp::CsvTable t = wasp::read_csv(data_path);
    wasp::PartitionStrategy s = wasp::parse_partition_strategy(strategy);
    wasp::PartitionPlan plan;
    if (s == wasp::PartitionStrategy::random) {
        plan = wasp::partition_random(t.values.rows(), k, seed);
    } else if (s == wasp::PartitionStrategy::stratified_cluster) {
        plan = wasp::partition_stratified_cluster(t.values, k, clusters, seed);
    } else {
        wasp::require(!group_column.empty(), "grouped partition needs --group-column");
        long col = -1;
        for (size_t c = 0; c < t.header.size(); ++c)
            if (t.header[c] == group_column) col = static_cast<long>(c);
        wasp::require(col >= 0, "group column '" + group_column + "' not found in " + data_path);
        std::vector<std::string> keys;
        keys.reserve(static_cast<size_t>(t.values.rows()));
        for (long i = 0; i < t.values.rows(); ++i) keys.push_back(wasp::format_double(t.values(i, col)));
        plan = wasp::partition_grouped(keys, k, seed, group_column);
    }
    write_text(out_path, wasp::partition_plan_json(plan).dump(2) + "\n");
    return 0;
}

int run_sample(const std::string& data_path, const std::string& model, const std::string& params_path,
               const std::string& plan_path, int subset, double gamma, const ChainFlags& chain,
               uint64_t seed, int workers, const std::string& out_dir) {
    wasp::ExperimentConfig cfg;
    cfg.model = model;
    if (!params_path.empty()) cfg.model_params = read_json_file(params_path);
    wasp::ModelSpec spec = wasp::model_spec_from_config(cfg);
    wasp::Dataset data = wasp::load_dataset(data_path, model);

    wasp::PartitionPlan plan;
    if (plan_path.empty()) {
        plan.strategy = wasp::PartitionStrategy::random;
        plan.k = 1;
        plan.assignment.assign(static_cast<size_t>(data.rows()), 0);
    } else {
        plan = wasp::partition_plan_from_json(read_json_file(plan_path));
        wasp::require(static_cast<long>(plan.assignment.size()) == data.rows(),
                      "plan covers " + std::to_string(plan.assignment.size()) + " rows but data has " +
                          std::to_string(data.rows()));
    }

    auto subset_rows = plan.subsets();
    std::vector<wasp::SubsetTask> tasks;
    for (int j = 0; j < plan.k; ++j) {
        if (subset > 0 && j != subset - 1) continue;
        const auto& rows = subset_rows[static_cast<size_t>(j)];
        std::vector<int> idx(rows.begin(), rows.end());
        wasp::SubsetTask task;
        task.spec = spec;
        task.shard = data.take(idx);
        task.gamma = gamma;
        task.chain = chain.settings();
        task.seed = wasp::derive_seed(seed, static_cast<uint64_t>(j));
        task.subset_id = j;
        task.k = plan.k;
        task.n = data.rows();
        tasks.push_back(std::move(task));
    }
    wasp::require(!tasks.empty(), "no subsets selected (check --subset against the plan)");

    std::vector<wasp::DrawSet> draws = wasp::run_subsets(tasks, workers);
    std::filesystem::create_directories(out_dir);
    for (size_t i = 0; i < draws.size(); ++i) {
        std::filesystem::path base =
            std::filesystem::path(out_dir) / ("subset_" + std::to_string(tasks[i].subset_id + 1));
        wasp::write_draws(base.string() + ".csv", base.string() + ".manifest.json", draws[i]);
        std::cerr << "wrote " << base.string() << ".csv (" << draws[i].S() << " draws)\n";
    }
    return 0;
}

int run_combine(const std::vector<std::string>& inputs, const std::string& functional,
                const CombineFlags& flags, const std::string& out_path, const std::string& report_path) {
    wasp::Functional f = wasp::make_functional(functional);
    std::vector<wasp::Matrix> pushed;
    for (const auto& path : inputs) {
        std::string manifest;
        if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") {
            std::string candidate = path.substr(0, path.size() - 4) + ".manifest.json";
            if (std::filesystem::exists(candidate)) manifest = candidate;
        }
        wasp::DrawSet d = wasp::read_draws(path, manifest);
        pushed.push_back(wasp::pushforward(d, f).draws);
    }

    auto t0 = std::chrono::steady_clock::now();
    wasp::BarycenterSolution sol = wasp::wasp(pushed, flags.options());
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    wasp::require(!out_path.empty(), "combine needs --out for the measure CSV");
    wasp::write_measure_csv(out_path, sol.measure);

    json report;
    report["objective"] = sol.objective;
    report["solver"] = sol.solver;
    report["iterations"] = sol.iterations;
    report["support_size"] = sol.measure.size();
    report["grid_points"] = sol.grid.size();
    report["converged"] = sol.converged;
    report["wall_seconds"] = wall;
    write_text(report_path, report.dump(2) + "\n");
    return 0;
}

int run_accuracy(const std::string& a_path, const std::string& b_path, const std::vector<int>& bins,
                 const std::string& out_path) {
    wasp::EmpiricalMeasure a = load_measure_or_draws(a_path);
    wasp::EmpiricalMeasure b = load_measure_or_draws(b_path);
    wasp::AccuracyResult r = wasp::tv_accuracy_between(a, b, bins);
    json out;
    out["accuracy"] = r.accuracy;
    out["bandwidths_a"] = to_std(r.bandwidths_a);
    out["bandwidths_b"] = to_std(r.bandwidths_b);
    out["grid"] = grid_json(r.grid);
    write_text(out_path, out.dump(2) + "\n");
    return 0;
}

int run_contraction(const std::vector<double>& theta0, const std::vector<long>& m_grid, int k,
                    int replications, uint64_t seed, const ChainFlags& chain, const CombineFlags& flags,
                    const std::string& out_path) {
    wasp::Vector t0(static_cast<Eigen::Index>(theta0.size()));
    for (size_t i = 0; i < theta0.size(); ++i) t0[static_cast<Eigen::Index>(i)] = theta0[i];
    wasp::ModelSpec spec = wasp::LogisticSpec{};
    wasp::ContractionReport rep =
        wasp::contraction_report(spec, t0, m_grid, k, replications, seed, chain.settings(), flags.options());
    std::string csv = "m,mean_w2,se_w2\n";
    for (const auto& row : rep.rows)
        csv += std::to_string(row.m) + "," + wasp::format_double(row.mean_w2) + "," +
               wasp::format_double(row.se_w2) + "\n";
    write_text(out_path, csv);
    std::cerr << "monotone_nonincreasing: " << (rep.monotone_nonincreasing ? "true" : "false") << "\n";
    return 0;
}

int run_experiment_cmd(const std::string& config_path, uint64_t seed, bool seed_given) {
    wasp::ExperimentConfig cfg = wasp::parse_experiment_config(read_json_file(config_path));
    if (seed_given) {
        cfg.seed = seed;
        cfg.has_seed = true;
    }
    wasp::ExperimentReport rep = wasp::run_experiment(cfg);
    std::cerr << "experiment '" << cfg.name << "' finished: " << rep.out_path << "\n";
    std::cout << rep.report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"WASP: divide-and-conquer Bayesian inference via Wasserstein barycenters"};
    app.require_subcommand(1);

    // partition
    auto* part = app.add_subcommand("partition", "split a dataset into subset assignments");
    std::string part_data, part_strategy = "random", part_group, part_out;
    int part_k = 0, part_clusters = 8;
    uint64_t part_seed = 0;
    part->add_option("--data", part_data, "input CSV")->required();
    part->add_option("--k", part_k, "number of subsets")->required()->check(CLI::PositiveNumber);
    part->add_option("--strategy", part_strategy, "random | stratified-cluster | grouped")
        ->check(CLI::IsMember({"random", "stratified-cluster", "grouped"}));
    part->add_option("--seed", part_seed, "RNG seed")->required();
    part->add_option("--clusters", part_clusters, "clusters for stratified-cluster");
    part->add_option("--group-column", part_group, "column holding the group key (grouped strategy)");
    part->add_option("--out", part_out, "plan JSON path (default: stdout)");

    // sample
    auto* samp = app.add_subcommand("sample", "run tempered subset chains and write draw CSVs");
    std::string samp_data, samp_model, samp_params, samp_plan, samp_out = ".";
    int samp_subset = 0, samp_workers = 1;
    double samp_gamma = 0.0;
    uint64_t samp_seed = 0;
    ChainFlags samp_chain;
    samp->add_option("--data", samp_data, "input CSV")->required();
    samp->add_option("--model", samp_model, "logistic | gmm | dpm | parafac")
        ->required()
        ->check(CLI::IsMember({"logistic", "gmm", "dpm", "parafac"}));
    samp->add_option("--params", samp_params, "model hyperparameter JSON file");
    samp->add_option("--plan", samp_plan, "partition plan JSON (default: one subset with all rows)");
    samp->add_option("--subset", samp_subset, "run only this subset (1-based)");
    samp->add_option("--gamma", samp_gamma, "tempering exponent (0 = n / m_j)");
    samp_chain.attach(samp);
    samp->add_option("--seed", samp_seed, "RNG seed (subset j uses a derived stream)")->required();
    samp->add_option("--workers", samp_workers, "parallel chains");
    samp->add_option("--out-dir", samp_out, "output directory");

    // combine
    auto* comb = app.add_subcommand("combine", "Wasserstein-2 barycenter of subset draws");
    std::vector<std::string> comb_inputs;
    std::string comb_functional = "identity", comb_out, comb_report;
    CombineFlags comb_flags;
    comb->add_option("--input", comb_inputs, "subset draw CSVs")->required()->expected(-1);
    comb->add_option("--functional", comb_functional, "functional applied to each draw before combining");
    comb_flags.attach(comb);
    comb->add_option("--out", comb_out, "barycenter measure CSV")->required();
    comb->add_option("--report", comb_report, "solve report JSON path (default: stdout)");

    // accuracy
    auto* acc = app.add_subcommand("accuracy", "kernel-density TV accuracy between two samples");
    std::string acc_a, acc_b, acc_out;
    std::vector<int> acc_bins;
    acc->add_option("--a", acc_a, "draw CSV or measure CSV")->required();
    acc->add_option("--b", acc_b, "draw CSV or measure CSV")->required();
    acc->add_option("--bins", acc_bins, "KDE lattice size per dimension");
    acc->add_option("--out", acc_out, "result JSON path (default: stdout)");

    // contraction
    auto* con = app.add_subcommand("contraction", "posterior contraction table for the logistic model");
    std::vector<double> con_theta0;
    std::vector<long> con_m;
    int con_k = 5, con_reps = 10;
    uint64_t con_seed = 0;
    std::string con_out;
    ChainFlags con_chain;
    CombineFlags con_flags;
    con->add_option("--theta0", con_theta0, "true coefficient vector")->required()->expected(-1);
    con->add_option("--m-grid", con_m, "per-subset sample sizes, increasing")->required()->expected(-1);
    con->add_option("--k", con_k, "number of subsets");
    con->add_option("--replications", con_reps, "Monte Carlo replications per m");
    con->add_option("--seed", con_seed, "RNG seed")->required();
    con_chain.attach(con);
    con_flags.attach(con);
    con->add_option("--out", con_out, "CSV path (default: stdout)");

    // experiment
    auto* expc = app.add_subcommand("experiment", "run a configured end-to-end pipeline");
    std::string exp_config;
    uint64_t exp_seed = 0;
    expc->add_option("--config", exp_config, "experiment config JSON")->required();
    auto* exp_seed_opt = expc->add_option("--seed", exp_seed, "override the config seed");

    try {
        app.parse(argc, argv);
        if (part->parsed())
            return run_partition(part_data, part_k, part_strategy, part_seed, part_clusters, part_group,
                                 part_out);
        if (samp->parsed())
            return run_sample(samp_data, samp_model, samp_params, samp_plan, samp_subset, samp_gamma,
                              samp_chain, samp_seed, samp_workers, samp_out);
        if (comb->parsed()) return run_combine(comb_inputs, comb_functional, comb_flags, comb_out, comb_report);
        if (acc->parsed()) return run_accuracy(acc_a, acc_b, acc_bins, acc_out);
        if (con->parsed())
            return run_contraction(con_theta0, con_m, con_k, con_reps, con_seed, con_chain, con_flags, con_out);
        if (expc->parsed()) return run_experiment_cmd(exp_config, exp_seed, exp_seed_opt->count() > 0);
        return 2;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const wasp::validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const wasp::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

// Experiment orchestration: the parallel subset runner, config parsing,
// synthetic data generation, CSV loading, and an end-to-end replication run
// whose report files must be byte-identical under a fixed seed.
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wasp/wasp.hpp"

using namespace wasp;
namespace fs = std::filesystem;

namespace {

std::vector<SubsetTask> make_logistic_tasks(int k, uint64_t seed) {
    Dataset data = generate_logistic_data(120, (Vector(1) << 0.8).finished(), seed);
    PartitionPlan plan = partition_random(120, k, seed + 1);
    ChainSettings chain;
    chain.iterations = 120;
    chain.burn_in = 60;
    chain.thin = 2;
    std::vector<SubsetTask> tasks;
    auto idx = plan.subsets();
    for (int j = 0; j < k; ++j) {
        SubsetTask t;
        t.spec = LogisticSpec{};
        std::vector<int> rows(idx[static_cast<size_t>(j)].begin(), idx[static_cast<size_t>(j)].end());
        t.shard = data.take(rows);
        t.chain = chain;
        t.seed = derive_seed(seed, static_cast<uint64_t>(j));
        t.subset_id = j;
        t.k = k;
        t.n = 120;
        tasks.push_back(std::move(t));
    }
    return tasks;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("wasp_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("the subset runner gives identical draws for any worker count") {
    auto tasks = make_logistic_tasks(3, 42);
    std::vector<DrawSet> serial = run_subsets(tasks, 1);
    std::vector<DrawSet> parallel = run_subsets(tasks, 4);
    REQUIRE(serial.size() == 3);
    REQUIRE(parallel.size() == 3);
    for (int j = 0; j < 3; ++j) {
        CHECK(serial[j].prov.subset_id == j);  // stable order
        CHECK((serial[j].draws - parallel[j].draws).cwiseAbs().maxCoeff() == 0.0);
    }
    // Auto gamma: n / m_j; shards of 120 over 3 subsets have 40 rows each.
    CHECK(serial[0].prov.gamma == doctest::Approx(3.0));
}

TEST_CASE("the subset runner aggregates failures with subset labels") {
    auto tasks = make_logistic_tasks(3, 7);
    tasks[1].gamma = -2.0;
    tasks[1].n = 0;
    tasks[1].shard.y[0] = 5.0;  // fails validation inside the sampler
    try {
        run_subsets(tasks, 2);
        FAIL("expected a validation_error");
    } catch (const validation_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("subset 2") != std::string::npos);
        CHECK(msg.find("binary") != std::string::npos);
    }
}

TEST_CASE("experiment configs parse with defaults and validation") {
    json j = {
        {"model", "logistic"},
        {"synthetic", {{"n", 100}, {"theta0", {1.0}}}},
        {"k", 4},
        {"seed", 11},
    };
    ExperimentConfig cfg = parse_experiment_config(j);
    CHECK(cfg.name == "logistic");
    CHECK(cfg.k == 4);
    CHECK(cfg.functionals == std::vector<std::string>{"identity"});
    CHECK(cfg.solver == "auto");
    CHECK(cfg.partition == "random");
    CHECK(cfg.has_seed);
    CHECK(cfg.replications == 1);

    json bad = j;
    bad["model"] = "mystery";
    CHECK_THROWS_AS(parse_experiment_config(bad), validation_error);
    bad = j;
    bad["functionals"] = {"not_a_functional(3)"};
    CHECK_THROWS_AS(parse_experiment_config(bad), validation_error);
    bad = j;
    bad["combine"] = {{"solver", "simplex"}};
    CHECK_THROWS_AS(parse_experiment_config(bad), validation_error);
    bad = j;
    bad.erase("synthetic");
    CHECK_THROWS_AS(parse_experiment_config(bad), validation_error);
    bad = j;
    bad["chain"] = {{"iterations", 100}, {"burn_in", 100}};
    CHECK_THROWS_AS(parse_experiment_config(bad), validation_error);

    CHECK(parse_solver("exact") == BarycenterSolver::exact_lp);
    CHECK(parse_solver("entropic") == BarycenterSolver::entropic);
    CHECK(parse_solver("auto") == BarycenterSolver::auto_select);
    CHECK_THROWS_AS(parse_solver("lp"), validation_error);
}

TEST_CASE("model hyperparameters flow from the config into the spec") {
    json j = {
        {"model", "gmm"},
        {"model_params", {{"L", 3}, {"kappa0", 0.5}, {"df0", 4.0}, {"scale0_diag", 1.5}}},
        {"synthetic", {{"n", 10}, {"pi", {1.0}}, {"means", {{0.0, 0.0}}}, {"cov", {{1.0, 0.0}, {0.0, 1.0}}}}},
        {"seed", 3},
    };
    ExperimentConfig cfg = parse_experiment_config(j);
    ModelSpec spec = model_spec_from_config(cfg);
    const auto& g = std::get<GmmSpec>(spec);
    CHECK(g.L == 3);
    CHECK(g.kappa0 == 0.5);
    CHECK(g.df0 == 4.0);
    CHECK(g.scale0_diag == 1.5);
}

TEST_CASE("synthetic generators follow the config") {
    ExperimentConfig cfg;
    cfg.model = "gmm";
    cfg.synthetic = {{"n", 64},
                     {"pi", {0.5, 0.5}},
                     {"means", {{-2.0, 0.0}, {2.0, 0.0}}},
                     {"cov", {{1.0, 0.0}, {0.0, 1.0}}}};
    Dataset d = generate_synthetic(cfg, 5);
    CHECK(d.X.rows() == 64);
    CHECK(d.X.cols() == 2);
    Dataset d2 = generate_synthetic(cfg, 5);
    CHECK((d.X - d2.X).cwiseAbs().maxCoeff() == 0.0);

    cfg.model = "parafac";
    cfg.synthetic = {{"n", 32}, {"p", 3}};
    Dataset dp = generate_synthetic(cfg, 6);
    CHECK(dp.C.rows() == 32);
    CHECK(dp.C.cols() == 3);

    cfg.synthetic = {{"generator", "mystery"}, {"n", 8}};
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), validation_error);
    cfg.synthetic = {{"generator", "logistic"}};
    CHECK_THROWS_AS(generate_synthetic(cfg, 1), validation_error);
}

TEST_CASE("datasets load from csv by model layout") {
    fs::path dir = fresh_dir("csv");
    fs::path file = dir / "data.csv";
    {
        std::ofstream out(file);
        out << "x1,y,x2\n1.0,1,0.5\n-1.0,0,0.25\n";
    }
    Dataset d = load_dataset(file.string(), "logistic");
    CHECK(d.X.rows() == 2);
    CHECK(d.X.cols() == 2);
    CHECK(d.y[0] == 1.0);
    CHECK(d.X(0, 0) == 1.0);
    CHECK(d.X(0, 1) == 0.5);

    fs::path cat = dir / "cat.csv";
    {
        std::ofstream out(cat);
        out << "a,b\n1,2\n2,1\n";
    }
    Dataset dc = load_dataset(cat.string(), "parafac");
    CHECK(dc.C(0, 1) == 2);
    {
        std::ofstream out(cat);
        out << "a,b\n1,2\n2,0\n";  // category 0 invalid
    }
    CHECK_THROWS_AS(load_dataset(cat.string(), "parafac"), validation_error);

    fs::path noy = dir / "noy.csv";
    {
        std::ofstream out(noy);
        out << "x1,x2\n1,2\n";
    }
    CHECK_THROWS_AS(load_dataset(noy.string(), "logistic"), validation_error);
    fs::remove_all(dir);
}

TEST_CASE("experiments run end to end and reports are byte-stable") {
    json j = {
        {"name", "unit"},
        {"model", "logistic"},
        {"synthetic", {{"n", 200}, {"theta0", {1.0, -0.5}}, {"truth", {{"select(theta1)", {1.0}}}}}},
        {"k", 2},
        {"chain", {{"iterations", 240}, {"burn_in", 120}, {"thin", 2}}},
        {"functionals", {"select(theta1)"}},
        {"combine", {{"solver", "entropic"}, {"grid_counts", {60}}}},
        {"replications", 2},
        {"seed", 424242},
        {"workers", 2},
    };
    ExperimentConfig cfg = parse_experiment_config(j);
    cfg.out_dir = fresh_dir("exp_a").string();
    ExperimentReport rep = run_experiment(cfg);
    REQUIRE(rep.functionals.size() == 1);
    const FunctionalSummary& f = rep.functionals[0];
    REQUIRE(f.accuracy.size() == 2);
    REQUIRE(f.wasp_mean.size() == 2);
    REQUIRE(f.w2_to_truth.size() == 2);
    for (double a : f.accuracy) {
        CHECK(a > 0.0);
        CHECK(a <= 1.0);
    }
    for (double w : f.w2_to_truth) CHECK(w >= 0.0);
    CHECK(fs::exists(fs::path(rep.out_path) / "report.json"));
    CHECK(fs::exists(fs::path(rep.out_path) / "report.csv"));
    CHECK(fs::exists(fs::path(rep.out_path) / "timing.json"));
    CHECK(fs::exists(fs::path(rep.out_path) / "rep1" / "subset_1.csv"));
    CHECK(fs::exists(fs::path(rep.out_path) / "rep1" / "subset_2.csv"));
    CHECK(fs::exists(fs::path(rep.out_path) / "rep2" / "reference.csv"));

    ExperimentConfig cfg2 = parse_experiment_config(j);
    cfg2.out_dir = fresh_dir("exp_b").string();
    ExperimentReport rep2 = run_experiment(cfg2);
    CHECK(slurp(fs::path(rep.out_path) / "report.json") == slurp(fs::path(rep2.out_path) / "report.json"));
    CHECK(slurp(fs::path(rep.out_path) / "report.csv") == slurp(fs::path(rep2.out_path) / "report.csv"));

    ExperimentConfig noseed = cfg;
    noseed.has_seed = false;
    CHECK_THROWS_AS(run_experiment(noseed), validation_error);

    fs::remove_all(rep.out_path);
    fs::remove_all(rep2.out_path);
    fs::remove_all(cfg.out_dir);
    fs::remove_all(cfg2.out_dir);
}

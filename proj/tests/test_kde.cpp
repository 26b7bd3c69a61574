// Binned Gaussian KDE: density shape against known normals, Silverman
// bandwidth formulas, unit mass, and guard rails (effective sample size,
// degenerate dimensions, grids that do not cover the sample).
#include <doctest.h>

#include <cmath>
#include <vector>

#include "wasp/wasp.hpp"

using namespace wasp;

namespace {

EmpiricalMeasure normal_sample(long n, double mean, double sd, uint64_t seed, int dim = 1) {
    SplitMix64 g(seed);
    Matrix x(n, dim);
    for (long i = 0; i < n; ++i)
        for (int r = 0; r < dim; ++r) x(i, r) = mean + sd * rng::normal(g);
    return make_measure(x);
}

}  // namespace

TEST_CASE("kde recovers the standard normal peak and integrates to one") {
    EmpiricalMeasure m = normal_sample(4000, 0.0, 1.0, 2024);
    KdeGrid grid;
    grid.lo = Vector::Constant(1, -5.0);
    grid.hi = Vector::Constant(1, 5.0);
    grid.n = {512};
    DensityEstimate d = kde(m, grid);
    CHECK(density_integral(d) == doctest::Approx(1.0).epsilon(0.02));
    // Peak height near 1/sqrt(2 pi) and located near zero.
    Eigen::Index peak_at;
    double peak = d.values.col(0).maxCoeff(&peak_at);
    CHECK(peak == doctest::Approx(0.3989).epsilon(0.08));
    CHECK(std::abs(d.grid.axis(0)[peak_at]) < 0.3);
    CHECK(d.values.minCoeff() >= 0.0);
}

TEST_CASE("1-D bandwidth follows the Silverman rule") {
    // 16 equally weighted atoms 1..16: hand-computed weighted sd and IQR.
    Matrix x(16, 1);
    for (int i = 0; i < 16; ++i) x(i, 0) = i + 1.0;
    EmpiricalMeasure m = make_measure(x);
    Vector bw = detail::silverman_bandwidths(m.atoms, m.weights);
    double mean = 8.5, var = 0.0;
    for (int i = 0; i < 16; ++i) var += (x(i, 0) - mean) * (x(i, 0) - mean) / 16.0;
    double sd = std::sqrt(var);
    double iqr = 12.0 - 4.0;  // first atoms whose cumulative weight reaches .75 / .25
    double expect = 0.9 * std::min(sd, iqr / 1.34) * std::pow(16.0, -0.2);
    CHECK(bw[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("2-D bandwidth uses the multivariate exponent") {
    SplitMix64 g(3);
    Matrix x(200, 2);
    for (int i = 0; i < 200; ++i) {
        x(i, 0) = rng::normal(g);
        x(i, 1) = 3.0 * rng::normal(g);
    }
    EmpiricalMeasure m = make_measure(x);
    Vector bw = detail::silverman_bandwidths(m.atoms, m.weights);
    for (int r = 0; r < 2; ++r) {
        double mu = x.col(r).mean();
        double sd = std::sqrt((x.col(r).array() - mu).square().sum() / 200.0);
        CHECK(bw[r] == doctest::Approx(sd * std::pow(200.0, -1.0 / 6.0)).epsilon(1e-12));
    }
}

TEST_CASE("2-D kde matches the bivariate normal shape") {
    EmpiricalMeasure m = normal_sample(3000, 0.0, 1.0, 99, 2);
    Vector bw = detail::silverman_bandwidths(m.atoms, m.weights);
    KdeGrid grid = common_kde_grid(m, m, bw, bw);
    DensityEstimate d = kde(m, grid, bw);
    CHECK(density_integral(d) == doctest::Approx(1.0).epsilon(0.02));
    Eigen::Index pi, pj;
    double peak = d.values.maxCoeff(&pi, &pj);
    CHECK(peak == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(0.25));
    CHECK(std::abs(d.grid.axis(0)[pi]) < 0.5);
    CHECK(std::abs(d.grid.axis(1)[pj]) < 0.5);
}

TEST_CASE("kde refuses too few effective samples") {
    Matrix x(20, 1);
    for (int i = 0; i < 20; ++i) x(i, 0) = i;
    Vector w = Vector::Constant(20, 1e-6);
    w[0] = 1.0;  // ESS ~ 1
    EmpiricalMeasure skewed = make_measure(x, w);
    KdeGrid grid;
    grid.lo = Vector::Constant(1, -1.0);
    grid.hi = Vector::Constant(1, 21.0);
    grid.n = {64};
    CHECK_THROWS_AS(kde(skewed, grid), validation_error);

    Matrix x9(9, 1);
    for (int i = 0; i < 9; ++i) x9(i, 0) = i;
    CHECK_THROWS_AS(kde(make_measure(x9), grid), validation_error);
}

TEST_CASE("kde rejects degenerate dimensions") {
    Matrix x = Matrix::Zero(30, 1);  // all atoms identical
    EmpiricalMeasure m = make_measure(x);
    KdeGrid grid;
    grid.lo = Vector::Constant(1, -1.0);
    grid.hi = Vector::Constant(1, 1.0);
    grid.n = {32};
    CHECK_THROWS_AS(kde(m, grid), validation_error);
}

TEST_CASE("kde detects a grid that does not cover the sample") {
    EmpiricalMeasure m = normal_sample(2000, 0.0, 1.0, 5);
    KdeGrid tight;
    tight.lo = Vector::Constant(1, -0.3);
    tight.hi = Vector::Constant(1, 0.3);
    tight.n = {128};
    CHECK_THROWS_AS(kde(m, tight), numerical_error);
}

TEST_CASE("common grids span both samples and honor bin overrides") {
    EmpiricalMeasure a = normal_sample(500, 0.0, 1.0, 1);
    EmpiricalMeasure b = normal_sample(500, 4.0, 1.0, 2);
    Vector bwa = detail::silverman_bandwidths(a.atoms, a.weights);
    Vector bwb = detail::silverman_bandwidths(b.atoms, b.weights);
    KdeGrid grid = common_kde_grid(a, b, bwa, bwb);
    double pad = 3.0 * std::max(bwa[0], bwb[0]);
    CHECK(grid.lo[0] ==
          doctest::Approx(std::min(a.atoms.minCoeff(), b.atoms.minCoeff()) - pad).epsilon(1e-12));
    CHECK(grid.hi[0] ==
          doctest::Approx(std::max(a.atoms.maxCoeff(), b.atoms.maxCoeff()) + pad).epsilon(1e-12));
    CHECK(grid.n == std::vector<int>{512});

    KdeGrid g2 = common_kde_grid(a, b, bwa, bwb, {100});
    CHECK(g2.n == std::vector<int>{100});
    CHECK(grid.matches(grid));
    CHECK_FALSE(grid.matches(g2));

    EmpiricalMeasure c = normal_sample(100, 0.0, 1.0, 3, 2);
    CHECK_THROWS_AS(common_kde_grid(a, c, bwa, bwb), validation_error);
}

TEST_CASE("grid validation rejects bad axes") {
    KdeGrid g;
    g.lo = Vector::Constant(1, 1.0);
    g.hi = Vector::Constant(1, 0.0);
    g.n = {16};
    CHECK_THROWS_AS(detail::validate_kde_grid(g), validation_error);
    g.hi[0] = 2.0;
    g.n = {1};
    CHECK_THROWS_AS(detail::validate_kde_grid(g), validation_error);
    g.n = {16};
    detail::validate_kde_grid(g);
}

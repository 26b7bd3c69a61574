// Functional pushforwards: identity/select/correlation/mixture-density/
// stick-breaking marginals, the spec-string parser, quantiles, and bands.
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "wasp/wasp.hpp"

using namespace wasp;

namespace {

DrawSet make_draws(const std::vector<std::string>& names, const Matrix& values) {
    DrawSet d;
    d.names = names;
    d.draws = values;
    return d;
}

}  // namespace

TEST_CASE("identity keeps draws and names untouched") {
    Matrix v(2, 3);
    v << 1, 2, 3, 4, 5, 6;
    DrawSet d = make_draws({"a", "b", "c"}, v);
    DrawSet out = pushforward(d, identity_functional());
    CHECK(out.names == d.names);
    CHECK((out.draws - d.draws).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.prov.functional == "identity");
}

TEST_CASE("select reorders columns by name and validates them") {
    Matrix v(2, 3);
    v << 1, 2, 3, 4, 5, 6;
    DrawSet d = make_draws({"a", "b", "c"}, v);
    DrawSet out = pushforward(d, select_functional({"c", "a"}));
    REQUIRE(out.draws.cols() == 2);
    CHECK(out.draws(0, 0) == 3.0);
    CHECK(out.draws(0, 1) == 1.0);
    CHECK(out.draws(1, 0) == 6.0);
    CHECK(out.names[0] == "select(c,a)_1");
    CHECK_THROWS_AS(pushforward(d, select_functional({"zz"})), validation_error);
}

TEST_CASE("correlation reproduces Sigma12 / sqrt(Sigma11 Sigma22)") {
    Matrix v(1, 3);
    v << 1.0, 1.5, 3.0;
    DrawSet d = make_draws({"Sigma1_11", "Sigma1_12", "Sigma1_22"}, v);
    DrawSet out = pushforward(d, correlation_functional(1));
    CHECK(out.draws(0, 0) == doctest::Approx(1.5 / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(out.names[0] == "rho1");

    // Random covariance draws keep the correlation inside [-1, 1].
    SplitMix64 g(7);
    Matrix r(40, 3);
    for (int i = 0; i < 40; ++i) {
        double a = 0.1 + rng::uniform01(g), b = 0.1 + rng::uniform01(g);
        double c = (2.0 * rng::uniform01(g) - 1.0) * std::sqrt(a * b);
        r.row(i) << a, c, b;
    }
    DrawSet rd = make_draws({"Sigma1_11", "Sigma1_12", "Sigma1_22"}, r);
    DrawSet ro = pushforward(rd, correlation_functional(1));
    CHECK(ro.draws.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("mixture density matches the bivariate normal closed form") {
    Matrix v(1, 6);
    v << 1.0, 0.0, 0.0, 1.0, 0.0, 1.0;  // pi=1, mu=(0,0), Sigma=I
    DrawSet d = make_draws({"pi1", "mu1_1", "mu1_2", "Sigma1_11", "Sigma1_12", "Sigma1_22"}, v);
    for (double x : {0.0, 0.7, -1.3}) {
        DrawSet out = pushforward(d, mixture_density_functional(x));
        double expect = std::exp(-x * x) / (2.0 * M_PI);  // N((x,x); 0, I)
        CHECK(out.draws(0, 0) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("stick-breaking marginals sum to one over categories") {
    // Two sticks, three categories for dimension 2.
    std::vector<std::string> names{"V1", "V2"};
    for (int h = 1; h <= 2; ++h)
        for (int c = 1; c <= 3; ++c)
            names.push_back("psi2_" + std::to_string(h) + "_" + std::to_string(c));
    SplitMix64 g(11);
    Matrix v(5, static_cast<Eigen::Index>(names.size()));
    for (int i = 0; i < 5; ++i) {
        v(i, 0) = rng::uniform01(g);
        v(i, 1) = rng::uniform01(g);
        for (int h = 0; h < 2; ++h) {
            Vector psi = rng::dirichlet(g, Vector::Constant(3, 1.0));
            for (int c = 0; c < 3; ++c) v(i, 2 + 3 * h + c) = psi[c];
        }
    }
    DrawSet d = make_draws(names, v);
    Vector total = Vector::Zero(5);
    for (int c = 1; c <= 3; ++c) {
        DrawSet out = pushforward(d, parafac_marginal_functional(2, c));
        CHECK(out.draws.minCoeff() >= 0.0);
        CHECK(out.draws.maxCoeff() <= 1.0 + 1e-12);
        total += out.draws.col(0);
    }
    for (int i = 0; i < 5; ++i) CHECK(total[i] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("functional specs parse names, arguments, and whitespace") {
    CHECK(make_functional("identity").name == "identity");
    CHECK(make_functional("correlation(2)").name == "rho2");
    CHECK(make_functional(" correlation( 2 ) ").name == "rho2");
    CHECK(make_functional("parafac_marginal(2,1)").name == "pr_x2_1");
    CHECK(make_functional("mixture_density(1.5)").name == "gmix");
    CHECK(make_functional("select(a,b)").name == "select(a,b)");
    CHECK_THROWS_AS(make_functional("nope"), validation_error);
    CHECK_THROWS_AS(make_functional("correlation()"), validation_error);
    CHECK_THROWS_AS(make_functional("correlation(1,2)"), validation_error);
    CHECK_THROWS_AS(make_functional("select(a"), validation_error);
    CHECK_THROWS_AS(make_functional("select()"), validation_error);
    CHECK_THROWS_AS(make_functional("parafac_marginal(1)"), validation_error);
}

TEST_CASE("pushforward through a column selection preserves means exactly") {
    SplitMix64 g(123);
    Matrix v(50, 2);
    for (int i = 0; i < 50; ++i) {
        v(i, 0) = rng::normal(g);
        v(i, 1) = rng::normal(g) * 2.0;
    }
    DrawSet d = make_draws({"x", "y"}, v);
    DrawSet out = pushforward(d, select_functional({"y"}));
    CHECK(out.draws.col(0).mean() == doctest::Approx(v.col(1).mean()).epsilon(1e-15));
}

TEST_CASE("type-7 quantiles interpolate like the standard definition") {
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(quantile_type7(v, 0.0) == doctest::Approx(1.0));
    CHECK(quantile_type7(v, 1.0) == doctest::Approx(10.0));
    CHECK(quantile_type7(v, 0.5) == doctest::Approx(5.5));
    CHECK(quantile_type7(v, 0.25) == doctest::Approx(3.25));
    CHECK(quantile_type7({3.0}, 0.7) == doctest::Approx(3.0));
    CHECK_THROWS_AS(quantile_type7({}, 0.5), validation_error);
    CHECK_THROWS_AS(quantile_type7({1.0}, 1.5), validation_error);
}

TEST_CASE("linspace covers both endpoints") {
    Vector x = linspace(-1.0, 2.0, 4);
    CHECK(x[0] == doctest::Approx(-1.0));
    CHECK(x[1] == doctest::Approx(0.0));
    CHECK(x[3] == doctest::Approx(2.0));
    CHECK(linspace(5.0, 9.0, 1)[0] == doctest::Approx(5.0));
    CHECK_THROWS_AS(linspace(0.0, 1.0, 0), validation_error);
}

TEST_CASE("pointwise bands bracket the pushed-forward values") {
    // Identical draws collapse the band onto the density curve itself.
    Matrix v = Matrix::Zero(4, 6);
    for (int i = 0; i < 4; ++i) v.row(i) << 1.0, 0.0, 0.0, 1.0, 0.0, 1.0;
    DrawSet d = make_draws({"pi1", "mu1_1", "mu1_2", "Sigma1_11", "Sigma1_12", "Sigma1_22"}, v);
    Vector xs = linspace(-1.0, 1.0, 5);
    CredibleBand band = pointwise_band(d, xs, [](double x) { return mixture_density_functional(x); });
    REQUIRE(band.x.size() == 5);
    for (Eigen::Index i = 0; i < 5; ++i) {
        double expect = std::exp(-xs[i] * xs[i]) / (2.0 * M_PI);
        CHECK(band.lo[i] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(band.hi[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}
